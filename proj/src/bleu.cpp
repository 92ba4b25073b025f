#include "tf2/bleu.hpp"

#include <algorithm>
#include <cmath>

#include "tf2/error.hpp"

namespace tf2::bleu {
namespace {

constexpr char32_t kInvalid = 0xFFFFFFFF;

struct Decoded {
    char32_t cp;
    std::size_t len;
};

// Strict UTF-8 decode of one code point; kInvalid with len 1 on error.
Decoded decode(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        return {b0, 1};
    }
    std::size_t len = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2, cp = b0 & 0x1F, min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3, cp = b0 & 0x0F, min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4, cp = b0 & 0x07, min = 0x10000;
    } else {
        return {kInvalid, 1};
    }
    if (i + len > s.size()) {
        return {kInvalid, 1};
    }
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            return {kInvalid, 1};
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        return {kInvalid, 1};
    }
    return {cp, len};
}

void encode(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool in(char32_t cp, char32_t lo, char32_t hi) {
    return cp >= lo && cp <= hi;
}

bool even(char32_t cp) {
    return cp % 2 == 0;
}

char32_t to_lower(char32_t cp) {
    if (in(cp, 'A', 'Z')) {
        return cp + 0x20;
    }
    if (cp < 0xC0) {
        return cp;
    }
    // Latin-1 Supplement
    if (in(cp, 0xC0, 0xDE) && cp != 0xD7) {
        return cp + 0x20;
    }
    // Latin Extended-A
    if (cp == 0x130) {
        return 'i';
    }
    if ((in(cp, 0x100, 0x12F) || in(cp, 0x132, 0x137) || in(cp, 0x14A, 0x177)) && even(cp)) {
        return cp + 1;
    }
    if ((in(cp, 0x139, 0x148) || in(cp, 0x179, 0x17E)) && !even(cp)) {
        return cp + 1;
    }
    if (cp == 0x178) {
        return 0xFF;
    }
    // Latin Extended-B pairs, including U+0218..U+021B (Romanian S/T comma below)
    if ((in(cp, 0x200, 0x21F) || in(cp, 0x222, 0x233)) && even(cp)) {
        return cp + 1;
    }
    // Greek
    if (in(cp, 0x391, 0x3A1) || in(cp, 0x3A3, 0x3AB)) {
        return cp + 0x20;
    }
    if (cp == 0x386) {
        return 0x3AC;
    }
    if (in(cp, 0x388, 0x38A)) {
        return cp + 0x25;
    }
    if (cp == 0x38C) {
        return 0x3CC;
    }
    if (in(cp, 0x38E, 0x38F)) {
        return cp + 0x3F;
    }
    // Cyrillic
    if (in(cp, 0x410, 0x42F)) {
        return cp + 0x20;
    }
    if (in(cp, 0x400, 0x40F)) {
        return cp + 0x50;
    }
    if ((in(cp, 0x460, 0x481) || in(cp, 0x48A, 0x4BF)) && even(cp)) {
        return cp + 1;
    }
    return cp;
}

bool is_space(char32_t cp) {
    return in(cp, 0x09, 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
           in(cp, 0x2000, 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F ||
           cp == 0x205F || cp == 0x3000;
}

bool is_punct(char32_t cp) {
    if (cp < 0x80) {
        return in(cp, 0x21, 0x2F) || in(cp, 0x3A, 0x40) || in(cp, 0x5B, 0x60) ||
               in(cp, 0x7B, 0x7E);
    }
    switch (cp) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
        return true;
    default:
        break;
    }
    return in(cp, 0x2010, 0x2027) || in(cp, 0x2030, 0x205E) || in(cp, 0x3001, 0x3003);
}

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            tokens.push_back(std::move(word));
            word.clear();
        }
    };
    for (std::size_t i = 0; i < text.size();) {
        const auto [cp, len] = decode(text, i);
        if (cp == kInvalid) {
            word.push_back(text[i]);
        } else if (is_space(cp)) {
            flush();
        } else if (is_punct(cp)) {
            flush();
            tokens.emplace_back(text.substr(i, len));
        } else {
            encode(to_lower(cp), word);
        }
        i += len;
    }
    flush();
    return tokens;
}

NgramCounts ngram_counts(std::span<const std::string> tokens, int n) {
    if (n < 1) {
        throw ValidationError("n-gram order must be >= 1, got " + std::to_string(n));
    }
    NgramCounts counts;
    const auto order = static_cast<std::size_t>(n);
    if (tokens.size() < order) {
        return counts;
    }
    for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
        ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                       tokens.begin() + static_cast<std::ptrdiff_t>(i + order))];
    }
    return counts;
}

double brevity_penalty(std::int64_t candidate_length, std::int64_t reference_length) {
    if (candidate_length < 0 || reference_length < 0) {
        throw ValidationError("brevity_penalty: lengths must be non-negative");
    }
    if (candidate_length == 0) {
        return 0.0;
    }
    if (candidate_length >= reference_length) {
        return 1.0;
    }
    return std::exp(1.0 - static_cast<double>(reference_length) /
                              static_cast<double>(candidate_length));
}

BleuResult corpus_bleu_tokens(std::span<const std::vector<std::string>> candidates,
                              std::span<const std::vector<std::string>> references, int max_n) {
    if (candidates.size() != references.size()) {
        throw ValidationError("corpus_bleu: " + std::to_string(candidates.size()) +
                              " candidates but " + std::to_string(references.size()) +
                              " references");
    }
    if (candidates.empty()) {
        throw ValidationError("corpus_bleu: empty corpus");
    }
    if (max_n < 1) {
        throw ValidationError("corpus_bleu: max_n must be >= 1");
    }

    const auto orders = static_cast<std::size_t>(max_n);
    BleuResult r;
    r.matches.assign(orders, 0);
    r.totals.assign(orders, 0);
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& cand = candidates[i];
        const auto& ref = references[i];
        r.candidate_length += cand.size();
        r.reference_length += ref.size();
        for (std::size_t n = 1; n <= orders; ++n) {
            const auto cand_counts = ngram_counts(cand, static_cast<int>(n));
            const auto ref_counts = ngram_counts(ref, static_cast<int>(n));
            for (const auto& [gram, count] : cand_counts) {
                r.totals[n - 1] += count;
                if (auto it = ref_counts.find(gram); it != ref_counts.end()) {
                    r.matches[n - 1] += std::min(count, it->second);
                }
            }
        }
    }

    double log_sum = 0.0;
    r.precisions.assign(orders, 0.0);
    for (std::size_t n = 0; n < orders; ++n) {
        if (r.matches[n] > 0) {
            r.precisions[n] =
                static_cast<double>(r.matches[n]) / static_cast<double>(r.totals[n]);
            log_sum += std::log(r.precisions[n]);
        } else {
            log_sum += std::log(kSmoothingEpsilon);
        }
    }
    r.brevity_penalty = brevity_penalty(static_cast<std::int64_t>(r.candidate_length),
                                        static_cast<std::int64_t>(r.reference_length));
    r.score = r.brevity_penalty == 0.0
                  ? 0.0
                  : std::clamp(r.brevity_penalty * std::exp(log_sum / static_cast<double>(orders)),
                               0.0, 1.0);
    return r;
}

BleuResult corpus_bleu(std::span<const std::string> candidates,
                       std::span<const std::string> references, int max_n) {
    std::vector<std::vector<std::string>> cand_tokens;
    std::vector<std::vector<std::string>> ref_tokens;
    cand_tokens.reserve(candidates.size());
    ref_tokens.reserve(references.size());
    for (const auto& c : candidates) {
        cand_tokens.push_back(tokenize(c));
    }
    for (const auto& ref : references) {
        ref_tokens.push_back(tokenize(ref));
    }
    return corpus_bleu_tokens(cand_tokens, ref_tokens, max_n);
}

nlohmann::ordered_json BleuResult::to_json() const {
    nlohmann::ordered_json j;
    j["score"] = score;
    j["precisions"] = precisions;
    j["matches"] = matches;
    j["totals"] = totals;
    j["brevity_penalty"] = brevity_penalty;
    j["candidate_length"] = candidate_length;
    j["reference_length"] = reference_length;
    return j;
}

} // namespace tf2::bleu

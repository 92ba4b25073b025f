#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace tf2::bleu {

/// Tokenization rules, applied to UTF-8 text:
///
///  1. Letters are lowercased (ASCII, Latin-1, Latin Extended-A/B incl.
///     Romanian comma-below letters, basic Greek and Cyrillic). Other code
///     points pass through unchanged, so diacritics survive intact.
///  2. Each punctuation code point (ASCII punctuation, Latin-1 quotes and
///     marks, General Punctuation U+2010..U+205E) becomes its own token.
///  3. Whitespace (ASCII, NBSP, U+2000..U+200A, U+2028/9, U+202F, U+205F,
///     U+3000) separates tokens and is dropped.
///
/// Bytes that do not form valid UTF-8 are kept as-is inside word tokens.
std::vector<std::string> tokenize(std::string_view text);

using Ngram = std::vector<std::string>;
using NgramCounts = std::map<Ngram, std::size_t>;

/// Sliding-window n-gram multiset. Throws ValidationError when n < 1.
NgramCounts ngram_counts(std::span<const std::string> tokens, int n);

inline constexpr int kMaxOrder = 4;
inline constexpr double kSmoothingEpsilon = 1e-9;

struct BleuResult {
    double score = 0.0;
    /// Raw clipped precision per order (0 when there were no matches).
    std::vector<double> precisions;
    std::vector<std::uint64_t> matches;
    std::vector<std::uint64_t> totals;
    double brevity_penalty = 0.0;
    std::uint64_t candidate_length = 0;
    std::uint64_t reference_length = 0;

    nlohmann::ordered_json to_json() const;
};

/// 1 when c >= r, 0 when c == 0, exp(1 - r/c) otherwise.
/// Throws ValidationError on negative lengths.
double brevity_penalty(std::int64_t candidate_length, std::int64_t reference_length);

/// Corpus BLEU on the 0..1 scale with one reference per candidate.
/// Clipped matches and candidate n-gram totals are summed over the corpus
/// per order; a zero precision enters the geometric mean as
/// kSmoothingEpsilon.
BleuResult corpus_bleu(std::span<const std::string> candidates,
                       std::span<const std::string> references, int max_n = kMaxOrder);

/// Same computation over pre-tokenized text.
BleuResult corpus_bleu_tokens(std::span<const std::vector<std::string>> candidates,
                              std::span<const std::vector<std::string>> references,
                              int max_n = kMaxOrder);

} // namespace tf2::bleu

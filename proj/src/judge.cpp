#include "tf2/judge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <mutex>
#include <set>

#include "tf2/error.hpp"
#include "tf2/rng.hpp"

namespace tf2::judge {
namespace {

constexpr std::string_view kEvaluatorInstruction =
    "You are a professional translation evaluator. You will be given an English fable and a "
    "Romanian translation. Evaluate the translation for accuracy, fluency, coherence, style, "
    "and cultural/pragmatic fidelity. Provide a score from 1 to 5 for each category along with "
    "a brief justification. Output your evaluation in valid JSON format with fields for each "
    "score and justification.";

bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

// Lowercase, runs of non-alphanumerics folded to one '_', trimmed.
std::string normalize_key(std::string_view k) {
    std::string out;
    for (unsigned char c : k) {
        if (std::isalnum(c)) {
            out.push_back(static_cast<char>(std::tolower(c)));
        } else if (!out.empty() && out.back() != '_') {
            out.push_back('_');
        }
    }
    while (!out.empty() && out.back() == '_') {
        out.pop_back();
    }
    return out;
}

bool names_dimension(const std::string& normalized, Dimension d) {
    if (normalized == key(d)) {
        return true;
    }
    if (d == Dimension::Cultural) {
        static const std::set<std::string> kAliases = {
            "cultural_pragmatic",  "cultural_pragmatic_fidelity", "cultural_pragmatic_adaptation",
            "cultural_adaptation", "cultural_fidelity",
        };
        return kAliases.count(normalized) != 0;
    }
    return false;
}

// Returns the first balanced {...} span that parses as a JSON object.
std::optional<nlohmann::json> first_json_object(std::string_view text) {
    for (std::size_t start = text.find('{'); start != std::string_view::npos;
         start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}' && --depth == 0) {
                auto parsed = nlohmann::json::parse(text.substr(start, i - start + 1), nullptr,
                                                    /*allow_exceptions=*/false);
                if (parsed.is_object()) {
                    return parsed;
                }
                break;
            }
        }
    }
    return std::nullopt;
}

int read_score(const nlohmann::json& value, Dimension d, const std::string& raw) {
    const std::string name(key(d));
    if (value.is_number_integer()) {
        const auto v = value.get<long long>();
        if (v < 1 || v > 5) {
            throw RangeError(name, "is " + std::to_string(v) + ", outside 1..5", raw);
        }
        return static_cast<int>(v);
    }
    throw RangeError(name, "is " + value.dump() + ", not an integer", raw);
}

void collect_justifications(const nlohmann::json& obj, RubricScores& out) {
    for (const auto& [k, v] : obj.items()) {
        if (!v.is_string()) {
            continue;
        }
        const auto nk = normalize_key(k);
        for (Dimension d : kDimensions) {
            if (names_dimension(nk, d)) {
                out.justifications[std::string(key(d))] = v.get<std::string>();
            }
        }
    }
}

} // namespace

std::string_view key(Dimension d) noexcept {
    switch (d) {
    case Dimension::Accuracy: return "accuracy";
    case Dimension::Fluency: return "fluency";
    case Dimension::Coherence: return "coherence";
    case Dimension::Style: return "style";
    case Dimension::Cultural: return "cultural";
    }
    return "";
}

std::string_view title(Dimension d) noexcept {
    switch (d) {
    case Dimension::Accuracy: return "Accuracy";
    case Dimension::Fluency: return "Fluency";
    case Dimension::Coherence: return "Coherence";
    case Dimension::Style: return "Style";
    case Dimension::Cultural: return "Cultural";
    }
    return "";
}

std::string build_judge_prompt(std::string_view source_en, std::string_view translation_ro) {
    if (is_blank(source_en)) {
        throw ValidationError("judge prompt: English source is empty");
    }
    if (is_blank(translation_ro)) {
        throw ValidationError("judge prompt: Romanian translation is empty");
    }
    std::string prompt(kEvaluatorInstruction);
    prompt += "\n\nEnglish fable:\n";
    prompt += source_en;
    prompt += "\n\nRomanian translation:\n";
    prompt += translation_ro;
    return prompt;
}

RubricScores parse_judge_response(std::string_view raw) {
    const std::string raw_copy(raw);
    const auto obj = first_json_object(raw);
    if (!obj) {
        throw NoJsonObjectError("judge response contains no JSON object", raw_copy);
    }

    RubricScores out;
    for (Dimension d : kDimensions) {
        const nlohmann::json* found = nullptr;
        for (const auto& [k, v] : obj->items()) {
            if (names_dimension(normalize_key(k), d)) {
                found = &v;
                break;
            }
        }
        if (found == nullptr) {
            throw SchemaError(std::string(key(d)), raw_copy);
        }
        if (found->is_object()) {
            if (!found->contains("score")) {
                throw SchemaError(std::string(key(d)) + ".score", raw_copy);
            }
            out.scores[index(d)] = read_score((*found)["score"], d, raw_copy);
            for (const char* jk : {"justification", "reason", "explanation"}) {
                if (found->contains(jk) && (*found)[jk].is_string()) {
                    out.justifications[std::string(key(d))] = (*found)[jk].get<std::string>();
                    break;
                }
            }
        } else {
            out.scores[index(d)] = read_score(*found, d, raw_copy);
        }
    }

    for (const auto& [k, v] : obj->items()) {
        const auto nk = normalize_key(k);
        if ((nk == "justifications" || nk == "justification") && v.is_object()) {
            collect_justifications(v, out);
            continue;
        }
        constexpr std::string_view kSuffix = "_justification";
        if (v.is_string() && nk.size() > kSuffix.size() &&
            nk.compare(nk.size() - kSuffix.size(), kSuffix.size(), kSuffix) == 0) {
            const auto stem = nk.substr(0, nk.size() - kSuffix.size());
            for (Dimension d : kDimensions) {
                if (names_dimension(stem, d)) {
                    out.justifications[std::string(key(d))] = v.get<std::string>();
                }
            }
        }
    }
    return out;
}

std::string serialize_scores(const RubricScores& scores) {
    nlohmann::ordered_json j;
    for (Dimension d : kDimensions) {
        j[std::string(key(d))] = scores[d];
    }
    if (!scores.justifications.empty()) {
        nlohmann::ordered_json just;
        for (Dimension d : kDimensions) {
            if (auto it = scores.justifications.find(std::string(key(d)));
                it != scores.justifications.end()) {
                just[it->first] = it->second;
            }
        }
        j["justifications"] = std::move(just);
    }
    return j.dump();
}

double average_score(const DimensionMeans& m) {
    for (Dimension d : kDimensions) {
        const double v = m[index(d)];
        if (!(v >= 1.0 && v <= 5.0)) {
            throw ValidationError("average_score: " + std::string(key(d)) + " mean " +
                                  std::to_string(v) + " is outside [1, 5]");
        }
    }
    return (m[0] + m[1] + m[2] + m[3] + m[4]) / 5.0;
}

nlohmann::ordered_json SystemEvaluation::to_json(bool with_items) const {
    nlohmann::ordered_json j;
    j["system_name"] = system_name;
    j["judge_name"] = judge_name;
    j["sample_seed"] = sample_seed;
    nlohmann::ordered_json means;
    for (Dimension d : kDimensions) {
        const double v = per_dimension_mean[index(d)];
        means[std::string(key(d))] = std::isnan(v) ? nlohmann::ordered_json() : nlohmann::ordered_json(v);
    }
    j["per_dimension_mean"] = std::move(means);
    j["avg_score"] = count > 0 ? nlohmann::ordered_json(avg_score) : nlohmann::ordered_json();
    j["count"] = count;
    auto excl = nlohmann::ordered_json::array();
    for (const auto& e : excluded) {
        excl.push_back({{"record_id", e.record_id}, {"cause", e.cause}});
    }
    j["excluded"] = std::move(excl);
    j["sample_ids"] = sample_ids;
    if (with_items) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& it : items) {
            nlohmann::ordered_json o;
            o["record_id"] = it.record_id;
            o["asks"] = it.asks;
            o["raw_response"] = it.raw_response;
            if (it.scores) {
                o["scores"] = nlohmann::ordered_json::parse(serialize_scores(*it.scores));
            } else {
                o["failure"] = it.failure;
            }
            arr.push_back(std::move(o));
        }
        j["items"] = std::move(arr);
    }
    return j;
}

SystemEvaluation aggregate(std::string system_name, std::string judge_name, std::uint64_t seed,
                           std::vector<JudgedItem> items) {
    SystemEvaluation ev;
    ev.system_name = std::move(system_name);
    ev.judge_name = std::move(judge_name);
    ev.sample_seed = seed;

    std::array<double, 5> sums{};
    for (const auto& item : items) {
        ev.sample_ids.push_back(item.record_id);
        if (item.scores) {
            ++ev.count;
            for (Dimension d : kDimensions) {
                sums[index(d)] += (*item.scores)[d];
            }
        } else {
            ev.excluded.push_back({item.record_id, item.failure});
        }
    }
    if (ev.count > 0) {
        for (std::size_t i = 0; i < sums.size(); ++i) {
            ev.per_dimension_mean[i] = sums[i] / static_cast<double>(ev.count);
        }
        ev.avg_score = average_score(ev.per_dimension_mean);
    } else {
        ev.per_dimension_mean.fill(std::numeric_limits<double>::quiet_NaN());
        ev.avg_score = std::numeric_limits<double>::quiet_NaN();
    }
    ev.items = std::move(items);
    return ev;
}

JudgedItem judge_pair(ChatClient& judge, const EndpointConfig& endpoint,
                      const TranslationPair& pair, const EvaluationOptions& options) {
    JudgedItem item;
    item.record_id = pair.record_id;

    ChatRequest request;
    request.model = endpoint.model_name;
    request.messages.push_back({"user", build_judge_prompt(pair.source, pair.translation)});
    request.temperature = options.temperature;
    request.max_tokens = options.max_tokens;

    const auto sleep = options.sleep ? options.sleep : real_sleeper();
    constexpr int kMaxAsks = 2;
    for (int ask = 1; ask <= kMaxAsks; ++ask) {
        item.asks = ask;
        auto outcome = complete_with_retry(judge, request, RetryPolicy::from(endpoint),
                                           pair.record_id, sleep);
        item.raw_response = std::move(outcome.response.content);
        try {
            item.scores = parse_judge_response(item.raw_response);
            item.failure.clear();
            return item;
        } catch (const JudgeParseError& e) {
            item.failure = e.what();
        }
    }
    return item;
}

namespace {

std::vector<TranslationPair> sorted_unique(std::span<const TranslationPair> pairs,
                                           const std::string& who) {
    std::vector<TranslationPair> sorted(pairs.begin(), pairs.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.record_id < b.record_id; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i].record_id == sorted[i - 1].record_id) {
            throw ValidationError(who + ": duplicate record_id " +
                                  std::to_string(sorted[i].record_id));
        }
    }
    return sorted;
}

} // namespace

SystemEvaluation evaluate_system(std::span<const TranslationPair> pairs, ChatClient& judge,
                                 const EndpointConfig& endpoint,
                                 const EvaluationOptions& options) {
    if (pairs.empty()) {
        throw ValidationError("evaluate_system: no translation pairs");
    }
    if (options.sample_size < 1 || options.sample_size > pairs.size()) {
        throw ValidationError("evaluate_system: sample size " +
                              std::to_string(options.sample_size) + " must be in 1.." +
                              std::to_string(pairs.size()));
    }
    endpoint.validate();
    const auto sorted = sorted_unique(pairs, options.system_name);

    Rng rng(options.seed);
    auto picks = rng.sample_indices(sorted.size(), options.sample_size);
    std::sort(picks.begin(), picks.end());

    std::vector<JudgedItem> items(picks.size());
    bounded_parallel_for(picks.size(), static_cast<std::size_t>(endpoint.max_concurrency),
                         [&](std::size_t i) {
                             items[i] = judge_pair(judge, endpoint, sorted[picks[i]], options);
                         });
    return aggregate(options.system_name, options.judge_name, options.seed, std::move(items));
}

nlohmann::ordered_json BiasReport::to_json() const {
    nlohmann::ordered_json j;
    j["systems"] = systems;
    j["judges"] = judges;
    j["reference"] = reference;
    nlohmann::ordered_json scores;
    nlohmann::ordered_json gaps;
    for (const auto& judge : judges) {
        for (const auto& sys : systems) {
            scores[judge][sys] = scores_by_judge.at(judge).at(sys);
            gaps[judge][sys] = gaps_to_reference.at(judge).at(sys);
        }
    }
    j["scores_by_judge"] = std::move(scores);
    j["gaps_to_reference"] = std::move(gaps);
    nlohmann::ordered_json means;
    for (const auto& sys : systems) {
        means[sys] = mean_over_judges.at(sys);
    }
    j["mean_over_judges"] = std::move(means);
    j["ranking_stable"] = ranking_stable;
    return j;
}

BiasReport build_bias_report(std::vector<std::string> systems, std::vector<std::string> judges,
                             std::map<std::string, std::map<std::string, double>> scores_by_judge,
                             const std::string& reference) {
    if (std::find(systems.begin(), systems.end(), reference) == systems.end()) {
        throw ValidationError("reference system \"" + reference + "\" is not among the systems");
    }
    for (const auto& judge : judges) {
        auto it = scores_by_judge.find(judge);
        if (it == scores_by_judge.end()) {
            throw ValidationError("no scores for judge \"" + judge + "\"");
        }
        for (const auto& sys : systems) {
            if (!it->second.count(sys)) {
                throw ValidationError("judge \"" + judge + "\" has no score for \"" + sys + "\"");
            }
        }
    }

    BiasReport report;
    report.reference = reference;
    for (const auto& judge : judges) {
        const auto& row = scores_by_judge.at(judge);
        const double ref = row.at(reference);
        for (const auto& sys : systems) {
            report.gaps_to_reference[judge][sys] = ref - row.at(sys);
        }
    }
    for (const auto& sys : systems) {
        double sum = 0.0;
        for (const auto& judge : judges) {
            sum += scores_by_judge.at(judge).at(sys);
        }
        report.mean_over_judges[sys] = judges.empty() ? 0.0 : sum / static_cast<double>(judges.size());
    }

    report.ranking_stable = true;
    for (std::size_t a = 0; a < systems.size() && report.ranking_stable; ++a) {
        for (std::size_t b = a + 1; b < systems.size() && report.ranking_stable; ++b) {
            bool a_above = false;
            bool b_above = false;
            for (const auto& judge : judges) {
                const double sa = scores_by_judge.at(judge).at(systems[a]);
                const double sb = scores_by_judge.at(judge).at(systems[b]);
                a_above |= sa > sb;
                b_above |= sb > sa;
            }
            if (a_above && b_above) {
                report.ranking_stable = false;
            }
        }
    }

    report.systems = std::move(systems);
    report.judges = std::move(judges);
    report.scores_by_judge = std::move(scores_by_judge);
    return report;
}

CrossJudgeResult cross_judge_check(std::span<const NamedSystem> systems,
                                   std::span<const NamedJudge> judges,
                                   const std::string& reference_system, std::size_t sample_size,
                                   std::uint64_t seed, const EvaluationOptions& base) {
    if (judges.size() < 2) {
        throw ValidationError("cross-judge check needs at least two judges");
    }
    if (systems.empty()) {
        throw ValidationError("cross-judge check needs at least one system");
    }

    std::vector<std::vector<TranslationPair>> sorted;
    std::set<RecordId> all_ids;
    for (const auto& sys : systems) {
        sorted.push_back(sorted_unique(sys.pairs, sys.name));
        for (const auto& p : sorted.back()) {
            all_ids.insert(p.record_id);
        }
    }
    std::string missing;
    for (std::size_t s = 0; s < systems.size(); ++s) {
        if (sorted[s].size() == all_ids.size()) {
            continue;
        }
        std::set<RecordId> have;
        for (const auto& p : sorted[s]) {
            have.insert(p.record_id);
        }
        missing += (missing.empty() ? "" : "; ") + systems[s].name + " lacks";
        for (RecordId id : all_ids) {
            if (!have.count(id)) {
                missing += " " + std::to_string(id);
            }
        }
    }
    if (!missing.empty()) {
        throw ValidationError("systems cover different record ids: " + missing);
    }
    if (sample_size < 1 || sample_size > all_ids.size()) {
        throw ValidationError("cross-judge sample size " + std::to_string(sample_size) +
                              " must be in 1.." + std::to_string(all_ids.size()));
    }

    Rng rng(seed);
    auto picks = rng.sample_indices(all_ids.size(), sample_size);
    std::sort(picks.begin(), picks.end());

    CrossJudgeResult result;
    std::vector<std::string> system_names;
    for (const auto& sys : systems) {
        system_names.push_back(sys.name);
    }
    std::vector<std::string> judge_names;
    std::map<std::string, std::map<std::string, double>> scores_by_judge;

    for (const auto& judge : judges) {
        if (judge.client == nullptr) {
            throw ValidationError("judge \"" + judge.name + "\" has no client");
        }
        judge.endpoint.validate();
        judge_names.push_back(judge.name);

        struct Job {
            std::size_t system;
            std::size_t item;
        };
        std::vector<Job> jobs;
        for (std::size_t s = 0; s < systems.size(); ++s) {
            for (std::size_t i = 0; i < picks.size(); ++i) {
                jobs.push_back({s, i});
            }
        }
        rng.shuffle(jobs);

        std::vector<std::vector<JudgedItem>> items(systems.size(),
                                                   std::vector<JudgedItem>(picks.size()));
        EvaluationOptions opts = base;
        opts.judge_name = judge.name;
        opts.seed = seed;
        bounded_parallel_for(jobs.size(), static_cast<std::size_t>(judge.endpoint.max_concurrency),
                             [&](std::size_t j) {
                                 const auto& job = jobs[j];
                                 items[job.system][job.item] = judge_pair(
                                     *judge.client, judge.endpoint,
                                     sorted[job.system][picks[job.item]], opts);
                             });

        for (std::size_t s = 0; s < systems.size(); ++s) {
            auto ev = aggregate(systems[s].name, judge.name, seed, std::move(items[s]));
            if (ev.count == 0) {
                throw ValidationError("judge \"" + judge.name + "\" produced no usable scores for \"" +
                                      systems[s].name + "\"");
            }
            scores_by_judge[judge.name][systems[s].name] = ev.avg_score;
            result.evaluations.push_back(std::move(ev));
        }
    }
    result.report = build_bias_report(std::move(system_names), std::move(judge_names),
                                      std::move(scores_by_judge), reference_system);
    return result;
}

} // namespace tf2::judge

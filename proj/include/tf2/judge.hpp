#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tf2/chat.hpp"
#include "tf2/corpus.hpp"

namespace tf2::judge {

using corpus::RecordId;

enum class Dimension { Accuracy, Fluency, Coherence, Style, Cultural };

inline constexpr std::array<Dimension, 5> kDimensions = {
    Dimension::Accuracy, Dimension::Fluency, Dimension::Coherence, Dimension::Style,
    Dimension::Cultural,
};

/// JSON key: "accuracy", "fluency", "coherence", "style", "cultural".
std::string_view key(Dimension d) noexcept;
/// Table heading: "Accuracy", ... "Cultural".
std::string_view title(Dimension d) noexcept;

inline constexpr std::size_t index(Dimension d) noexcept { return static_cast<std::size_t>(d); }

/// Per-dimension values in kDimensions order.
using DimensionMeans = std::array<double, 5>;

struct RubricScores {
    std::array<int, 5> scores{};
    /// Keyed by dimension key; only dimensions the judge explained.
    std::map<std::string, std::string> justifications;

    int operator[](Dimension d) const noexcept { return scores[index(d)]; }
    bool operator==(const RubricScores&) const = default;
};

/// The evaluator instruction followed by labeled source and translation
/// blocks. Throws ValidationError if either text is empty.
std::string build_judge_prompt(std::string_view source_en, std::string_view translation_ro);

/// Locates the first parseable JSON object in `raw` (surrounding prose and
/// code fences are ignored) and reads the five rubric scores from it.
///
/// Accepted score shapes: `"accuracy": 5` or
/// `"accuracy": {"score": 5, "justification": "..."}`. Justifications may
/// also come as `"accuracy_justification": "..."` or inside a
/// `"justifications": {...}` object. Keys are matched after lowercasing and
/// folding punctuation to '_'; the cultural dimension also answers to
/// "cultural_pragmatic" and similar spellings.
///
/// Throws NoJsonObjectError, SchemaError (missing key) or RangeError
/// (non-integer or outside 1..5).
RubricScores parse_judge_response(std::string_view raw);

/// Canonical JSON for `scores`; parse_judge_response inverts it.
std::string serialize_scores(const RubricScores& scores);

/// Arithmetic mean of the five dimension values. Each must lie in [1, 5].
double average_score(const DimensionMeans& per_dimension_mean);

struct TranslationPair {
    RecordId record_id = 0;
    std::string source;
    std::string translation;
};

struct Exclusion {
    RecordId record_id = 0;
    std::string cause;

    bool operator==(const Exclusion&) const = default;
};

/// One judged sample, kept for audit.
struct JudgedItem {
    RecordId record_id = 0;
    std::optional<RubricScores> scores;
    std::string raw_response;
    std::string failure;
    int asks = 0;
};

struct SystemEvaluation {
    std::string system_name;
    std::string judge_name;
    std::uint64_t sample_seed = 0;
    /// NaN when count == 0.
    DimensionMeans per_dimension_mean{};
    double avg_score = 0.0;
    std::size_t count = 0;
    std::vector<Exclusion> excluded;
    std::vector<RecordId> sample_ids;
    std::vector<JudgedItem> items;

    std::size_t requested() const noexcept { return count + excluded.size(); }

    nlohmann::ordered_json to_json(bool with_items = false) const;
};

/// Means over items that carry scores, in item order.
SystemEvaluation aggregate(std::string system_name, std::string judge_name, std::uint64_t seed,
                           std::vector<JudgedItem> items);

struct EvaluationOptions {
    std::string system_name;
    std::string judge_name;
    std::size_t sample_size = 100;
    std::uint64_t seed = 42;
    double temperature = 0.0;
    int max_tokens = 1024;
    Sleeper sleep;
};

/// Sends the judge prompt for one pair; re-asks once when the reply cannot
/// be parsed. TransportError propagates.
JudgedItem judge_pair(ChatClient& judge, const EndpointConfig& endpoint,
                      const TranslationPair& pair, const EvaluationOptions& options);

/// Seeded uniform sample of `sample_size` pairs (drawn from the pairs
/// ordered by record_id), judged with at most endpoint.max_concurrency
/// calls in flight.
SystemEvaluation evaluate_system(std::span<const TranslationPair> pairs, ChatClient& judge,
                                 const EndpointConfig& endpoint, const EvaluationOptions& options);

struct BiasReport {
    std::vector<std::string> systems;
    std::vector<std::string> judges;
    std::string reference;
    std::map<std::string, std::map<std::string, double>> scores_by_judge;
    std::map<std::string, std::map<std::string, double>> gaps_to_reference;
    std::map<std::string, double> mean_over_judges;
    bool ranking_stable = true;

    nlohmann::ordered_json to_json() const;
};

/// Gaps are reference score minus system score per judge. The ranking is
/// stable when no two judges order any pair of systems strictly opposite
/// ways; a tie under one judge is compatible with either order.
BiasReport build_bias_report(std::vector<std::string> systems, std::vector<std::string> judges,
                             std::map<std::string, std::map<std::string, double>> scores_by_judge,
                             const std::string& reference);

struct NamedSystem {
    std::string name;
    std::vector<TranslationPair> pairs;
};

struct NamedJudge {
    std::string name;
    ChatClient* client = nullptr;
    EndpointConfig endpoint;
};

struct CrossJudgeResult {
    BiasReport report;
    /// judges.size() x systems.size(), judge-major.
    std::vector<SystemEvaluation> evaluations;
};

/// Judges the same seeded sample of record ids for every (system, judge)
/// combination. Each judge receives its (item, system) jobs in its own
/// shuffled order. Requires at least two judges and identical record_id
/// coverage across systems.
CrossJudgeResult cross_judge_check(std::span<const NamedSystem> systems,
                                   std::span<const NamedJudge> judges,
                                   const std::string& reference_system, std::size_t sample_size,
                                   std::uint64_t seed, const EvaluationOptions& base = {});

} // namespace tf2::judge

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tf2/bleu.hpp"
#include "tf2/chat.hpp"
#include "tf2/judge.hpp"
#include "tf2/translate.hpp"

namespace tf2 {
struct KvConfig;
}

namespace tf2::bench {

using corpus::RecordId;

struct SystemSpec {
    std::string name;
    EndpointConfig endpoint;
    int max_output_tokens = 1024;
    /// Overrides ExperimentConfig::temperatures when non-empty.
    std::vector<double> temperatures;
    /// Recorded as llm_name in emitted records; defaults to the model name.
    std::string llm_name;
};

/// "tuned minus base" comparison between two rows, each addressed by
/// system name and temperature.
struct DeltaSpec {
    std::string tuned;
    double tuned_temperature = 0.0;
    std::string base;
    double base_temperature = 0.0;
};

inline const std::vector<double> kDefaultTemperatures = {0.0, 0.2, 1.0};

/// Experiment file (key = value, see kv_config.hpp):
///
///     seed = 42
///     sample_size = 100
///     temperatures = 0.0, 0.2, 1.0
///     references = refs.jsonl        # parallel-record JSONL, reference = translated_fable
///     output_dir = out
///
///     [judge o3-mini]
///     base_url = https://api.example.com/v1
///     model = o3-mini
///     api_key_env = JUDGE_API_KEY
///
///     [system tf2-12b]
///     base_url = http://localhost:8000/v1
///     model = tf2-12b
///     temperatures = 0.5             # optional per-system override
///     max_output_tokens = 1024
///
///     [delta]
///     tuned = tf2-12b@0.0
///     base = gemma-3-12b@0.0
///
/// Relative paths resolve against the experiment file's directory.
struct ExperimentConfig {
    std::vector<SystemSpec> systems;
    std::vector<double> temperatures = kDefaultTemperatures;
    std::size_t sample_size = 100;
    std::uint64_t seed = 42;
    EndpointConfig judge;
    std::string judge_name;
    std::filesystem::path reference_set;
    std::filesystem::path output_dir;
    std::vector<DeltaSpec> deltas;

    void validate() const;

    static ExperimentConfig from_config(const KvConfig& config,
                                        const std::filesystem::path& base_dir);
    static ExperimentConfig load(const std::filesystem::path& path);
};

struct BenchRow {
    std::string system;
    double temperature = 0.0;
    std::optional<judge::SystemEvaluation> evaluation;
    std::optional<bleu::BleuResult> bleu;
    std::size_t sampled = 0;
    std::size_t translated = 0;
    /// Empty when every stage completed.
    std::string error;

    std::string label() const;
};

struct Delta {
    std::string tuned;
    std::string base;
    std::optional<double> avg_score;
    std::optional<double> bleu;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::vector<Delta> deltas;
    std::vector<RecordId> sample_ids;
    bool partial = false;
    std::vector<std::filesystem::path> rendered;

    nlohmann::ordered_json to_json() const;
};

/// Temperatures rendered the way labels show them: "0.0", "0.2", "1.0".
std::string format_temperature(double t);

struct RunHooks {
    ClientFactory client_factory;
    std::function<std::int64_t()> clock;
    Sleeper sleep;
};

/// For each (system, temperature): translate the seeded reference sample,
/// judge the translations, and score BLEU against the reference
/// translations. Raw translations and judge output are written under
/// `<output_dir>/artifacts/`. A stage failure is recorded on its row and
/// the run continues with the next row.
BenchReport run_experiment(const ExperimentConfig& config, const RunHooks& hooks = {});

/// Throws ValidationError when a spec names a row that does not exist.
std::vector<Delta> compute_deltas(const std::vector<BenchRow>& rows,
                                  const std::vector<DeltaSpec>& specs);

enum class Format { Markdown, Csv };

/// "markdown"/"md" or "csv"; ValidationError otherwise.
Format parse_format(const std::string& name);

/// Rubric table (2 decimals, best value per column in bold), BLEU table
/// (4 decimals) and delta table.
std::string render_markdown(const BenchReport& report);

/// One line per row: rubric means, avg, count, BLEU, best-column flags.
std::string render_csv(const BenchReport& report);

std::string render_deltas_csv(const BenchReport& report);

/// For each row, the rubric columns (five dimensions then "avg") holding the
/// best value in that column after 2-decimal rounding. Ties share the flag.
std::vector<std::vector<std::string>> best_columns(const BenchReport& report);

/// Writes report.md, or report.csv + deltas.csv, into `dir`.
std::vector<std::filesystem::path> render_report(const BenchReport& report, Format format,
                                                 const std::filesystem::path& dir);

} // namespace tf2::bench

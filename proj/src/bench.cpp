#include "tf2/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "tf2/corpus.hpp"
#include "tf2/error.hpp"
#include "tf2/format.hpp"
#include "tf2/kv_config.hpp"
#include "tf2/rng.hpp"

namespace tf2::bench {
namespace {

constexpr const char* kNull = "null";

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::vector<double> parse_temperatures(const std::vector<std::string>& items,
                                       const std::string& where) {
    std::vector<double> out;
    for (const auto& item : items) {
        out.push_back(parse_double(item, where));
    }
    return out;
}

// "name@0.2" -> (name, 0.2); a bare name means T = 0.0.
std::pair<std::string, double> parse_row_ref(const std::string& text) {
    const auto at = text.rfind('@');
    if (at == std::string::npos) {
        return {text, 0.0};
    }
    return {text.substr(0, at), parse_double(text.substr(at + 1), "delta temperature")};
}

std::string safe_name(const std::string& s) {
    std::string out;
    for (unsigned char c : s) {
        out.push_back(std::isalnum(c) || c == '-' || c == '_' || c == '.' ? static_cast<char>(c)
                                                                          : '_');
    }
    return out;
}

std::string md_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '|') {
            out += "\\|";
        } else if (c == '\n') {
            out += ' ';
        } else {
            out += c;
        }
    }
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::string signed_fixed(double v, int digits) {
    std::string s = format_fixed(v, digits);
    return s[0] == '-' ? s : "+" + s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    corpus::write_file_atomically(path, text);
}

constexpr std::array<std::string_view, 6> kRubricColumns = {
    "accuracy", "fluency", "coherence", "style", "cultural", "avg",
};

std::optional<double> rubric_value(const BenchRow& row, std::size_t column) {
    if (!row.evaluation || row.evaluation->count == 0) {
        return std::nullopt;
    }
    if (column < 5) {
        return row.evaluation->per_dimension_mean[column];
    }
    return row.evaluation->avg_score;
}

} // namespace

void ExperimentConfig::validate() const {
    if (systems.empty()) {
        throw ValidationError("experiment has no [system] sections");
    }
    if (temperatures.empty()) {
        throw ValidationError("experiment temperatures must be non-empty");
    }
    if (sample_size < 1) {
        throw ValidationError("experiment sample_size must be >= 1");
    }
    std::set<std::string> names;
    for (const auto& s : systems) {
        if (!names.insert(s.name).second) {
            throw ValidationError("duplicate system name \"" + s.name + "\"");
        }
        s.endpoint.validate();
        for (double t : s.temperatures.empty() ? temperatures : s.temperatures) {
            translate::DecodingParams{t, s.max_output_tokens}.validate();
        }
    }
    judge.validate();
    if (reference_set.empty()) {
        throw ValidationError("experiment needs a references path");
    }
    if (output_dir.empty()) {
        throw ValidationError("experiment needs an output_dir");
    }
}

ExperimentConfig ExperimentConfig::from_config(const KvConfig& config,
                                               const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    const auto& g = config.global;
    cfg.seed = static_cast<std::uint64_t>(g.get_int("seed", static_cast<long long>(kDefaultSeed)));
    const auto sample = g.get_int("sample_size", 100);
    if (sample < 1) {
        throw ValidationError("sample_size must be >= 1");
    }
    cfg.sample_size = static_cast<std::size_t>(sample);
    if (g.has("temperatures")) {
        cfg.temperatures = parse_temperatures(g.get_list("temperatures"), "temperatures");
    }
    cfg.reference_set = resolve(base_dir, g.require("references"));
    cfg.output_dir = resolve(base_dir, g.get_or("output_dir", "bench-out"));

    const auto judges = config.all("judge");
    if (judges.size() != 1) {
        throw ValidationError("experiment needs exactly one [judge] section, found " +
                              std::to_string(judges.size()));
    }
    cfg.judge = EndpointConfig::from_section(*judges.front());
    cfg.judge_name = judges.front()->name.empty() ? cfg.judge.model_name : judges.front()->name;

    for (const auto* s : config.all("system")) {
        if (s->name.empty()) {
            throw ValidationError("[system] section at line " + std::to_string(s->line) +
                                  " needs a name");
        }
        SystemSpec spec;
        spec.name = s->name;
        spec.endpoint = EndpointConfig::from_section(*s);
        spec.max_output_tokens = static_cast<int>(s->get_int("max_output_tokens", 1024));
        if (s->has("temperatures")) {
            spec.temperatures = parse_temperatures(s->get_list("temperatures"), s->label());
        }
        spec.llm_name = s->get_or("llm_name", spec.endpoint.model_name);
        cfg.systems.push_back(std::move(spec));
    }
    for (const auto* d : config.all("delta")) {
        DeltaSpec spec;
        std::tie(spec.tuned, spec.tuned_temperature) = parse_row_ref(d->require("tuned"));
        std::tie(spec.base, spec.base_temperature) = parse_row_ref(d->require("base"));
        cfg.deltas.push_back(std::move(spec));
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    return from_config(KvConfig::load(path), path.parent_path());
}

std::string format_temperature(double t) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), t);
    std::string s(buf.data(), ec == std::errc{} ? end : buf.data());
    if (s.find_first_of(".e") == std::string::npos) {
        s += ".0";
    }
    return s;
}

std::string BenchRow::label() const {
    return system + " (T=" + format_temperature(temperature) + ")";
}

nlohmann::ordered_json BenchReport::to_json() const {
    nlohmann::ordered_json j;
    j["partial"] = partial;
    j["sample_ids"] = sample_ids;
    auto rows_json = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json o;
        o["system"] = r.system;
        o["temperature"] = r.temperature;
        o["sampled"] = r.sampled;
        o["translated"] = r.translated;
        o["evaluation"] = r.evaluation ? r.evaluation->to_json() : nlohmann::ordered_json();
        o["bleu"] = r.bleu ? r.bleu->to_json() : nlohmann::ordered_json();
        o["error"] = r.error.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(r.error);
        rows_json.push_back(std::move(o));
    }
    j["rows"] = std::move(rows_json);
    auto deltas_json = nlohmann::ordered_json::array();
    for (const auto& d : deltas) {
        deltas_json.push_back({
            {"tuned", d.tuned},
            {"base", d.base},
            {"avg_score", d.avg_score ? nlohmann::ordered_json(*d.avg_score) : nlohmann::ordered_json()},
            {"bleu", d.bleu ? nlohmann::ordered_json(*d.bleu) : nlohmann::ordered_json()},
        });
    }
    j["deltas"] = std::move(deltas_json);
    return j;
}

BenchReport run_experiment(const ExperimentConfig& config, const RunHooks& hooks) {
    config.validate();
    const auto factory = hooks.client_factory ? hooks.client_factory : default_client_factory();

    const auto loaded = corpus::load_parallel_records(config.reference_set);
    for (const auto& e : loaded.skipped) {
        spdlog::warn("{}:{}: skipped reference line: {}", config.reference_set.string(), e.line,
                     e.message);
    }
    const auto& refs = loaded.records;
    if (config.sample_size > refs.size()) {
        throw ValidationError("sample_size " + std::to_string(config.sample_size) +
                              " exceeds the " + std::to_string(refs.size()) +
                              " usable reference records");
    }

    Rng rng(config.seed);
    auto picks = rng.sample_indices(refs.size(), config.sample_size);
    std::sort(picks.begin(), picks.end());

    BenchReport report;
    std::vector<corpus::SourceFable> sample;
    for (std::size_t idx : picks) {
        sample.push_back({static_cast<RecordId>(idx), refs[idx].fable});
        report.sample_ids.push_back(static_cast<RecordId>(idx));
    }

    const auto artifacts = config.output_dir / "artifacts";
    std::filesystem::create_directories(artifacts);
    {
        nlohmann::ordered_json meta;
        meta["seed"] = config.seed;
        meta["sample_size"] = config.sample_size;
        meta["sample_ids"] = report.sample_ids;
        meta["judge"] = config.judge_name;
        write_text(artifacts / "run.json", meta.dump(2) + "\n");
    }

    auto judge_client = factory(config.judge);

    for (const auto& system : config.systems) {
        const auto& temps = system.temperatures.empty() ? config.temperatures : system.temperatures;
        std::unique_ptr<ChatClient> client;
        std::string client_error;
        try {
            client = factory(system.endpoint);
        } catch (const Error& e) {
            client_error = e.what();
        }

        for (double t : temps) {
            BenchRow row;
            row.system = system.name;
            row.temperature = t;
            row.sampled = sample.size();
            if (!client) {
                row.error = "endpoint: " + client_error;
                report.partial = true;
                report.rows.push_back(std::move(row));
                continue;
            }
            const auto dir = artifacts / (safe_name(system.name) + "_T" + format_temperature(t));
            std::filesystem::create_directories(dir);
            try {
                translate::RunOptions opts;
                opts.llm_name = system.llm_name;
                opts.clock = hooks.clock;
                opts.sleep = hooks.sleep;
                opts.keep_results = true;
                const auto run = translate::translate_corpus(
                    *client, system.endpoint, std::span<const corpus::SourceFable>(sample),
                    translate::DecodingParams{t, system.max_output_tokens},
                    dir / "translations.jsonl", opts);
                row.translated = run.succeeded;
                write_text(dir / "translate_summary.json", [&] {
                    auto j = run.to_json();
                    j.erase("wall_seconds");
                    return j.dump(2) + "\n";
                }());
                if (run.failed > 0) {
                    row.error = std::to_string(run.failed) + " translation(s) failed";
                }
                if (run.results.empty()) {
                    throw Error("no successful translations");
                }

                std::vector<judge::TranslationPair> pairs;
                std::vector<std::string> candidates;
                std::vector<std::string> references;
                for (const auto& r : run.results) {
                    pairs.push_back({r.record_id, refs[r.record_id].fable, r.output_text});
                    candidates.push_back(r.output_text);
                    references.push_back(refs[r.record_id].translated_fable);
                }
                row.bleu = bleu::corpus_bleu(candidates, references);

                judge::EvaluationOptions eval_opts;
                eval_opts.system_name = row.label();
                eval_opts.judge_name = config.judge_name;
                eval_opts.sample_size = pairs.size();
                eval_opts.seed = config.seed;
                eval_opts.sleep = hooks.sleep;
                row.evaluation =
                    judge::evaluate_system(pairs, *judge_client, config.judge, eval_opts);
                write_text(dir / "judge.json", row.evaluation->to_json(true).dump(2) + "\n");
                write_text(dir / "bleu.json", row.bleu->to_json().dump(2) + "\n");
            } catch (const Error& e) {
                row.error = row.error.empty() ? e.what() : row.error + "; " + e.what();
            }
            if (!row.error.empty()) {
                report.partial = true;
                spdlog::warn("{}: {}", row.label(), row.error);
            }
            report.rows.push_back(std::move(row));
        }
    }

    report.deltas = compute_deltas(report.rows, config.deltas);
    report.rendered = render_report(report, Format::Markdown, config.output_dir);
    for (auto& p : render_report(report, Format::Csv, config.output_dir)) {
        report.rendered.push_back(std::move(p));
    }
    write_text(config.output_dir / "report.json", report.to_json().dump(2) + "\n");
    return report;
}

std::vector<Delta> compute_deltas(const std::vector<BenchRow>& rows,
                                  const std::vector<DeltaSpec>& specs) {
    auto find = [&](const std::string& name, double t) -> const BenchRow& {
        for (const auto& r : rows) {
            if (r.system == name && r.temperature == t) {
                return r;
            }
        }
        throw ValidationError("delta refers to missing row " + name + " (T=" +
                              format_temperature(t) + ")");
    };
    std::vector<Delta> out;
    for (const auto& spec : specs) {
        const auto& tuned = find(spec.tuned, spec.tuned_temperature);
        const auto& base = find(spec.base, spec.base_temperature);
        Delta d;
        d.tuned = tuned.label();
        d.base = base.label();
        const auto ta = rubric_value(tuned, 5);
        const auto ba = rubric_value(base, 5);
        if (ta && ba) {
            d.avg_score = *ta - *ba;
        }
        if (tuned.bleu && base.bleu) {
            d.bleu = tuned.bleu->score - base.bleu->score;
        }
        out.push_back(std::move(d));
    }
    return out;
}

Format parse_format(const std::string& name) {
    if (name == "markdown" || name == "md") {
        return Format::Markdown;
    }
    if (name == "csv") {
        return Format::Csv;
    }
    throw ValidationError("unknown report format \"" + name + "\" (expected markdown or csv)");
}

std::vector<std::vector<std::string>> best_columns(const BenchReport& report) {
    std::vector<std::vector<std::string>> flags(report.rows.size());
    for (std::size_t c = 0; c < kRubricColumns.size(); ++c) {
        std::optional<double> best;
        for (const auto& row : report.rows) {
            if (auto v = rubric_value(row, c)) {
                const double r = round_decimal(*v, 2);
                best = best ? std::max(*best, r) : r;
            }
        }
        if (!best) {
            continue;
        }
        for (std::size_t i = 0; i < report.rows.size(); ++i) {
            if (auto v = rubric_value(report.rows[i], c); v && round_decimal(*v, 2) == *best) {
                flags[i].emplace_back(kRubricColumns[c]);
            }
        }
    }
    return flags;
}

std::string render_markdown(const BenchReport& report) {
    if (report.rows.empty()) {
        throw ValidationError("cannot render an empty report");
    }
    const auto flags = best_columns(report);
    std::ostringstream md;
    md << "## Rubric scores\n\n"
       << "| System | Accuracy | Fluency | Coherence | Style | Cultural | Avg. Score | Count |\n"
       << "|---|---:|---:|---:|---:|---:|---:|---:|\n";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& row = report.rows[i];
        md << "| " << md_escape(row.label()) << " |";
        for (std::size_t c = 0; c < kRubricColumns.size(); ++c) {
            const auto v = rubric_value(row, c);
            if (!v) {
                md << ' ' << kNull << " |";
                continue;
            }
            const bool best = std::find(flags[i].begin(), flags[i].end(), kRubricColumns[c]) !=
                              flags[i].end();
            const auto text = format_fixed(*v, 2);
            md << ' ' << (best ? "**" + text + "**" : text) << " |";
        }
        md << ' ' << (row.evaluation ? std::to_string(row.evaluation->count) : kNull) << " |\n";
    }

    md << "\n## BLEU\n\n| System | BLEU | Notes |\n|---|---:|---|\n";
    for (const auto& row : report.rows) {
        std::string notes =
            std::to_string(row.translated) + "/" + std::to_string(row.sampled) + " translated";
        if (!row.error.empty()) {
            notes += "; " + row.error;
        }
        md << "| " << md_escape(row.label()) << " | "
           << (row.bleu ? format_fixed(row.bleu->score, 4) : kNull) << " | " << md_escape(notes)
           << " |\n";
    }

    if (!report.deltas.empty()) {
        md << "\n## Deltas (tuned - base)\n\n| Tuned | Base | Avg. Score | BLEU |\n|---|---|---:|---:|\n";
        for (const auto& d : report.deltas) {
            md << "| " << md_escape(d.tuned) << " | " << md_escape(d.base) << " | "
               << (d.avg_score ? signed_fixed(*d.avg_score, 2) : kNull) << " | "
               << (d.bleu ? signed_fixed(*d.bleu, 4) : kNull) << " |\n";
        }
    }
    if (report.partial) {
        md << "\nPartial run: at least one row has a failed stage.\n";
    }
    return md.str();
}

std::string render_csv(const BenchReport& report) {
    if (report.rows.empty()) {
        throw ValidationError("cannot render an empty report");
    }
    const auto flags = best_columns(report);
    std::ostringstream csv;
    csv << "system,temperature,accuracy,fluency,coherence,style,cultural,avg_score,count,"
           "excluded,bleu,best,error\n";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& row = report.rows[i];
        csv << csv_field(row.system) << ',' << format_temperature(row.temperature);
        for (std::size_t c = 0; c < kRubricColumns.size(); ++c) {
            const auto v = rubric_value(row, c);
            csv << ',' << (v ? format_fixed(*v, 2) : kNull);
        }
        csv << ',' << (row.evaluation ? std::to_string(row.evaluation->count) : kNull) << ','
            << (row.evaluation ? std::to_string(row.evaluation->excluded.size()) : kNull) << ','
            << (row.bleu ? format_fixed(row.bleu->score, 4) : kNull) << ',';
        std::string best;
        for (const auto& f : flags[i]) {
            best += (best.empty() ? "" : ";") + f;
        }
        csv << csv_field(best) << ',' << csv_field(row.error) << '\n';
    }
    return csv.str();
}

std::string render_deltas_csv(const BenchReport& report) {
    std::ostringstream csv;
    csv << "tuned,base,avg_score_delta,bleu_delta\n";
    for (const auto& d : report.deltas) {
        csv << csv_field(d.tuned) << ',' << csv_field(d.base) << ','
            << (d.avg_score ? signed_fixed(*d.avg_score, 2) : kNull) << ','
            << (d.bleu ? signed_fixed(*d.bleu, 4) : kNull) << '\n';
    }
    return csv.str();
}

std::vector<std::filesystem::path> render_report(const BenchReport& report, Format format,
                                                 const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    if (format == Format::Markdown) {
        const auto text = render_markdown(report);
        write_text(dir / "report.md", text);
        return {dir / "report.md"};
    }
    const auto rows = render_csv(report);
    const auto deltas = render_deltas_csv(report);
    write_text(dir / "report.csv", rows);
    write_text(dir / "deltas.csv", deltas);
    return {dir / "report.csv", dir / "deltas.csv"};
}

} // namespace tf2::bench

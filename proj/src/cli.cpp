#include "tf2/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tf2/bench.hpp"
#include "tf2/bleu.hpp"
#include "tf2/corpus.hpp"
#include "tf2/cost.hpp"
#include "tf2/error.hpp"
#include "tf2/judge.hpp"
#include "tf2/kv_config.hpp"
#include "tf2/rng.hpp"
#include "tf2/translate.hpp"

namespace tf2::cli {
namespace {

namespace fs = std::filesystem;

void setup_logging(const std::string& level) {
    static const auto logger = [] {
        auto l = spdlog::stderr_color_mt("tf2");
        spdlog::set_default_logger(l);
        return l;
    }();
    const auto lvl = spdlog::level::from_str(level);
    if (lvl == spdlog::level::off && level != "off") {
        throw ValidationError("unknown log level \"" + level + "\"");
    }
    logger->set_level(lvl);
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const TransportError*>(&e)) {
        return "transport";
    }
    if (dynamic_cast<const IoError*>(&e)) {
        return "io";
    }
    if (dynamic_cast<const JudgeParseError*>(&e)) {
        return "parse";
    }
    if (dynamic_cast<const ValidationError*>(&e)) {
        return "validation";
    }
    return "error";
}

void report_error(std::ostream& err, bool json, const std::string& kind, const std::string& msg) {
    if (json) {
        nlohmann::ordered_json j;
        j["error"] = {{"kind", kind}, {"message", msg}};
        err << j.dump() << '\n';
    } else {
        err << "error: " << msg << '\n';
    }
}

std::vector<std::string> read_field(const fs::path& path, const std::string& field) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<std::string> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) {
            continue;
        }
        const auto where = path.string() + ":" + std::to_string(line_no);
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw ValidationError(where + ": not a JSON object");
        }
        if (!j.contains(field) || !j[field].is_string()) {
            throw ValidationError(where + ": missing string field \"" + field + "\"");
        }
        out.push_back(j[field].get<std::string>());
    }
    return out;
}

std::vector<judge::TranslationPair> read_system(const fs::path& path) {
    const auto loaded = corpus::load_parallel_records(path);
    if (!loaded.skipped.empty()) {
        const auto& first = loaded.skipped.front();
        throw ValidationError(path.string() + ":" + std::to_string(first.line) + ": " +
                              first.message + " (" + std::to_string(loaded.skipped.size()) +
                              " invalid line(s); record ids are positional so none may be skipped)");
    }
    std::vector<judge::TranslationPair> pairs;
    for (std::size_t i = 0; i < loaded.records.size(); ++i) {
        pairs.push_back({i, loaded.records[i].fable, loaded.records[i].translated_fable});
    }
    return pairs;
}

cost::TokenPair parse_token_pair(const std::string& text) {
    const auto slash = text.find('/');
    if (slash == std::string::npos) {
        const auto v = static_cast<std::uint64_t>(parse_int(text, "token count"));
        return {v, v};
    }
    return {static_cast<std::uint64_t>(parse_int(text.substr(0, slash), "input tokens")),
            static_cast<std::uint64_t>(parse_int(text.substr(slash + 1), "output tokens"))};
}

nlohmann::ordered_json range_json(const cost::RangeEstimate& r) {
    return {
        {"low", cost::format_dollars(r.low.total_dollars)},
        {"mid", cost::format_dollars(r.mid.total_dollars)},
        {"high", cost::format_dollars(r.high.total_dollars)},
    };
}

void write_json_file(const fs::path& path, const nlohmann::ordered_json& j) {
    corpus::write_file_atomically(path, j.dump(2) + "\n");
}

int run_checked(const std::function<int()>& body, std::ostream& err, bool json_errors) {
    try {
        return body();
    } catch (const TransportError& e) {
        report_error(err, json_errors, "transport", e.what());
        return kExitTransport;
    } catch (const Error& e) {
        report_error(err, json_errors, error_kind(e), e.what());
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        report_error(err, json_errors, "validation", e.what());
        return kExitValidation;
    } catch (const fs::filesystem_error& e) {
        report_error(err, json_errors, "io", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        report_error(err, json_errors, "error", e.what());
        return kExitValidation;
    }
}

} // namespace

GlobalConfig GlobalConfig::load(const fs::path& path) {
    const auto kv = KvConfig::load(path);
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        fs::path rel(p);
        return rel.is_absolute() ? rel : base / rel;
    };
    GlobalConfig cfg;
    if (auto p = kv.global.get("pricing")) {
        cfg.pricing_path = resolve(*p);
    }
    if (kv.global.has("seed")) {
        cfg.default_seed = static_cast<std::uint64_t>(kv.global.get_int("seed", 0));
    }
    cfg.log_level = kv.global.get_or("log_level", cfg.log_level);
    if (auto p = kv.global.get("output_dir")) {
        cfg.output_dir = resolve(*p);
    }
    for (const auto* s : kv.all("endpoint")) {
        if (s->name.empty()) {
            throw ValidationError(path.string() + ": [endpoint] sections need a name");
        }
        cfg.endpoints.emplace(s->name, EndpointConfig::from_section(*s));
    }
    return cfg;
}

EndpointConfig GlobalConfig::resolve_endpoint(const std::string& name_or_path) const {
    if (auto it = endpoints.find(name_or_path); it != endpoints.end()) {
        return it->second;
    }
    if (fs::exists(name_or_path)) {
        const auto kv = KvConfig::load(name_or_path);
        if (kv.global.has("base_url")) {
            auto cfg = EndpointConfig::from_section(kv.global);
            if (cfg.name.empty()) {
                cfg.name = fs::path(name_or_path).stem().string();
            }
            return cfg;
        }
        const auto sections = kv.all("endpoint");
        if (sections.size() == 1) {
            return EndpointConfig::from_section(*sections.front());
        }
        throw ValidationError(name_or_path + ": expected top-level endpoint keys or one [endpoint] section");
    }
    throw ValidationError("unknown endpoint profile or file \"" + name_or_path + "\"");
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
             const ClientFactory& factory_in) {
    const ClientFactory factory = factory_in ? factory_in : default_client_factory();

    CLI::App app{"Literary translation pipeline: corpus tooling, translation, judging, BLEU, cost "
                 "projections and benchmarks",
                 "tf2"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed_flag;
    bool json_errors = false;
    std::string log_level;
    app.add_option("--config", config_path, "Global config file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed_flag, "Seed for every stochastic step (default 42)");
    app.add_flag("--json-errors", json_errors, "Report errors on stderr as JSON");
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

    // corpus
    auto* corpus_cmd = app.add_subcommand("corpus", "Parallel-corpus JSONL tools");
    corpus_cmd->require_subcommand(1);
    std::string corpus_in;
    std::string corpus_out;
    auto* validate_cmd = corpus_cmd->add_subcommand("validate", "Check records against the schema");
    validate_cmd->add_option("--in", corpus_in, "Record JSONL")->required();
    auto* dedupe_cmd = corpus_cmd->add_subcommand("dedupe", "Drop repeated prompt hashes");
    dedupe_cmd->add_option("--in", corpus_in, "Record JSONL")->required();
    dedupe_cmd->add_option("--out", corpus_out, "Output JSONL")->required();
    auto* split_cmd = corpus_cmd->add_subcommand("split", "Seeded train/validation/test split");
    corpus::SplitCounts counts;
    std::string split_dir;
    split_cmd->add_option("--in", corpus_in, "Record JSONL")->required();
    split_cmd->add_option("--train", counts.train)->required();
    split_cmd->add_option("--val", counts.validation)->required();
    split_cmd->add_option("--test", counts.test)->required();
    split_cmd->add_option("--out-dir", split_dir, "Directory for train/validation/test.jsonl")
        ->required();

    // translate
    auto* translate_cmd = app.add_subcommand("translate", "Translate fables through an endpoint");
    translate_cmd->require_subcommand(1);
    auto* translate_run = translate_cmd->add_subcommand("run", "Batch-translate a fable JSONL");
    std::string endpoint_ref;
    std::string fables_in;
    std::string pairs_out;
    double temperature = 0.0;
    std::optional<int> concurrency;
    std::optional<std::size_t> limit;
    int max_tokens = 1024;
    std::string llm_name;
    std::string translation_model;
    translate_run->add_option("--endpoint", endpoint_ref, "Endpoint file or profile")->required();
    translate_run->add_option("--in", fables_in, "Source fables JSONL")->required();
    translate_run->add_option("--out", pairs_out, "Output record JSONL")->required();
    translate_run->add_option("--temperature", temperature)->capture_default_str();
    translate_run->add_option("--concurrency", concurrency, "Max requests in flight");
    translate_run->add_option("--limit", limit, "Translate at most N fables");
    translate_run->add_option("--max-tokens", max_tokens)->capture_default_str();
    translate_run->add_option("--llm-name", llm_name, "llm_name field (default: model)");
    translate_run->add_option("--translation-model", translation_model,
                              "translation_model field (default: llm_name)");

    // judge
    auto* judge_cmd = app.add_subcommand("judge", "Rubric evaluation with an LLM judge");
    judge_cmd->require_subcommand(1);
    auto* judge_run = judge_cmd->add_subcommand("run", "Judge one or more systems");
    std::vector<std::string> system_files;
    std::vector<std::string> judge_refs;
    std::size_t judge_n = 100;
    std::string judge_out;
    std::string reference_system;
    judge_run->add_option("--systems", system_files, "Record JSONL per system")->required();
    judge_run->add_option("--judge", judge_refs, "Judge endpoint file(s) or profile(s)")
        ->required();
    judge_run->add_option("--n", judge_n, "Sample size")->capture_default_str();
    judge_run->add_option("--out", judge_out, "Evaluation JSON")->required();
    judge_run->add_option("--reference", reference_system,
                          "Reference system for gaps (default: first system)");

    // bleu
    auto* bleu_cmd = app.add_subcommand("bleu", "Corpus BLEU (0-1 scale)");
    bleu_cmd->require_subcommand(1);
    auto* bleu_score = bleu_cmd->add_subcommand("score", "Score candidates against references");
    std::string cand_path;
    std::string ref_path;
    std::string field = "translated_fable";
    bleu_score->add_option("--candidates", cand_path)->required();
    bleu_score->add_option("--references", ref_path)->required();
    bleu_score->add_option("--field", field)->capture_default_str();

    // cost
    auto* cost_cmd = app.add_subcommand("cost", "API and rental cost projections");
    cost_cmd->require_subcommand(1);
    std::string pricing_path;
    std::string model;
    std::uint64_t items = cost::kCorpusItems;
    std::uint64_t tok_in = cost::kMidTokens.in;
    std::uint64_t tok_out = cost::kMidTokens.out;
    std::string reasoning = "0";
    auto* estimate_cmd = cost_cmd->add_subcommand("estimate", "Cost of one token scenario");
    for (auto* sub : {estimate_cmd}) {
        sub->add_option("--pricing", pricing_path, "Pricing table (default: built-in)");
        sub->add_option("--model", model)->required();
        sub->add_option("--items", items)->capture_default_str();
        sub->add_option("--in", tok_in, "Input tokens per item")->capture_default_str();
        sub->add_option("--out", tok_out, "Output tokens per item")->capture_default_str();
        sub->add_option("--reasoning", reasoning, "Reasoning tokens per visible output token")
            ->capture_default_str();
    }
    std::string low = "300/300";
    std::string mid = "450/450";
    std::string high = "600/600";
    std::vector<std::string> multipliers{"0.5", "1", "3"};
    auto* range_cmd = cost_cmd->add_subcommand("range", "Low/mid/high token scenarios");
    auto* sweep_cmd = cost_cmd->add_subcommand("sweep", "Ranges across reasoning multipliers");
    for (auto* sub : {range_cmd, sweep_cmd}) {
        sub->add_option("--pricing", pricing_path, "Pricing table (default: built-in)");
        sub->add_option("--model", model)->required();
        sub->add_option("--items", items)->capture_default_str();
        sub->add_option("--low", low, "IN/OUT tokens per item")->capture_default_str();
        sub->add_option("--mid", mid)->capture_default_str();
        sub->add_option("--high", high)->capture_default_str();
    }
    range_cmd->add_option("--reasoning", reasoning)->capture_default_str();
    sweep_cmd->add_option("--multipliers", multipliers)->delimiter(',')->capture_default_str();
    auto* rental_cmd = cost_cmd->add_subcommand("rental", "Cluster rental cost");
    std::string hours;
    std::string rate = "10.80";
    rental_cmd->add_option("--hours", hours, "Cluster-hours")->required();
    rental_cmd->add_option("--rate", rate, "Dollars per cluster-hour")->capture_default_str();
    auto* pricing_cmd = cost_cmd->add_subcommand("pricing", "Print the pricing table");
    pricing_cmd->add_option("--pricing", pricing_path, "Pricing table (default: built-in)");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "End-to-end experiments");
    bench_cmd->require_subcommand(1);
    auto* bench_run = bench_cmd->add_subcommand("run", "Run an experiment file");
    std::string experiment_path;
    bench_run->add_option("--config", experiment_path, "Experiment file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        if (json_errors) {
            report_error(err, true, "usage", e.what());
        } else {
            err << e.what() << "\n\n" << app.help();
        }
        return kExitValidation;
    }

    return run_checked(
        [&]() -> int {
            GlobalConfig global;
            if (!config_path.empty()) {
                global = GlobalConfig::load(config_path);
            }
            setup_logging(log_level.empty() ? global.log_level : log_level);
            const std::uint64_t seed = seed_flag.value_or(global.default_seed.value_or(kDefaultSeed));
            spdlog::debug("seed {}", seed);

            auto pricing = [&]() {
                if (!pricing_path.empty()) {
                    return cost::PricingTable::load(pricing_path);
                }
                if (global.pricing_path) {
                    return cost::PricingTable::load(*global.pricing_path);
                }
                return cost::PricingTable::defaults();
            };

            if (*validate_cmd) {
                const auto loaded = corpus::load_parallel_records(corpus_in);
                nlohmann::ordered_json j;
                j["valid"] = loaded.records.size();
                j["invalid"] = loaded.skipped.size();
                auto errors = nlohmann::ordered_json::array();
                for (const auto& e : loaded.skipped) {
                    errors.push_back({{"line", e.line}, {"message", e.message}});
                }
                j["errors"] = std::move(errors);
                out << j.dump(2) << '\n';
                return loaded.skipped.empty() ? kExitOk : kExitValidation;
            }
            if (*dedupe_cmd) {
                auto loaded = corpus::load_parallel_records(corpus_in);
                const auto input = loaded.records.size();
                auto result = corpus::dedupe(std::move(loaded.records));
                corpus::emit_parallel_records(result.records, corpus_out);
                nlohmann::ordered_json j;
                j["input"] = input;
                j["output"] = result.records.size();
                j["removed"] = result.removed;
                j["skipped_lines"] = loaded.skipped.size();
                out << j.dump(2) << '\n';
                return kExitOk;
            }
            if (*split_cmd) {
                auto loaded = corpus::load_parallel_records(corpus_in);
                auto split = corpus::split_corpus(std::move(loaded.records), counts, seed);
                fs::create_directories(split_dir);
                corpus::emit_parallel_records(split.train, fs::path(split_dir) / "train.jsonl");
                corpus::emit_parallel_records(split.validation,
                                              fs::path(split_dir) / "validation.jsonl");
                corpus::emit_parallel_records(split.test, fs::path(split_dir) / "test.jsonl");
                nlohmann::ordered_json j;
                j["seed"] = seed;
                j["train"] = split.train.size();
                j["validation"] = split.validation.size();
                j["test"] = split.test.size();
                j["skipped_lines"] = loaded.skipped.size();
                out << j.dump(2) << '\n';
                return kExitOk;
            }
            if (*translate_run) {
                auto endpoint = global.resolve_endpoint(endpoint_ref);
                if (concurrency) {
                    endpoint.max_concurrency = *concurrency;
                }
                endpoint.validate();
                const translate::DecodingParams params{temperature, max_tokens};
                params.validate();
                auto client = factory(endpoint);
                corpus::FableReader reader(fables_in, limit);
                translate::RunOptions opts;
                opts.llm_name = llm_name;
                opts.translation_model = translation_model;
                const auto summary = translate::translate_corpus(
                    *client, endpoint, [&] { return reader.next(); }, params, pairs_out, opts);
                auto j = summary.to_json();
                j["skipped_lines"] = reader.skipped().size();
                j["failure_log"] = translate::default_failure_log(pairs_out).string();
                out << j.dump(2) << '\n';
                return summary.failed == 0 ? kExitOk : kExitTransport;
            }
            if (*judge_run) {
                std::vector<judge::NamedSystem> systems;
                for (const auto& f : system_files) {
                    systems.push_back({fs::path(f).stem().string(), read_system(f)});
                }
                std::vector<EndpointConfig> judge_cfgs;
                std::vector<std::unique_ptr<ChatClient>> clients;
                for (const auto& ref : judge_refs) {
                    judge_cfgs.push_back(global.resolve_endpoint(ref));
                    clients.push_back(factory(judge_cfgs.back()));
                }
                nlohmann::ordered_json result;
                result["seed"] = seed;
                result["sample_size"] = judge_n;
                auto evals = nlohmann::ordered_json::array();
                if (judge_cfgs.size() == 1) {
                    for (const auto& sys : systems) {
                        judge::EvaluationOptions opts;
                        opts.system_name = sys.name;
                        opts.judge_name = judge_cfgs[0].name;
                        opts.sample_size = judge_n;
                        opts.seed = seed;
                        evals.push_back(
                            judge::evaluate_system(sys.pairs, *clients[0], judge_cfgs[0], opts)
                                .to_json(true));
                    }
                    result["evaluations"] = std::move(evals);
                } else {
                    std::vector<judge::NamedJudge> judges;
                    for (std::size_t i = 0; i < judge_cfgs.size(); ++i) {
                        judges.push_back({judge_cfgs[i].name, clients[i].get(), judge_cfgs[i]});
                    }
                    const auto ref = reference_system.empty() ? systems.front().name : reference_system;
                    const auto cross =
                        judge::cross_judge_check(systems, judges, ref, judge_n, seed);
                    for (const auto& ev : cross.evaluations) {
                        evals.push_back(ev.to_json(true));
                    }
                    result["evaluations"] = std::move(evals);
                    result["bias_report"] = cross.report.to_json();
                }
                write_json_file(judge_out, result);
                out << "wrote " << judge_out << '\n';
                return kExitOk;
            }
            if (*bleu_score) {
                const auto cands = read_field(cand_path, field);
                const auto refs = read_field(ref_path, field);
                out << bleu::corpus_bleu(cands, refs).to_json().dump(2) << '\n';
                return kExitOk;
            }
            if (*estimate_cmd) {
                const auto table = pricing();
                const auto& entry = table.find(model);
                const auto est = cost::estimate_cost(
                    {items, tok_in, tok_out, cost::parse_decimal(reasoning)}, entry);
                auto j = est.to_json();
                nlohmann::ordered_json o;
                o["model"] = entry.model;
                o["total"] = cost::format_dollars(est.total_dollars);
                o.update(j);
                out << o.dump(2) << '\n';
                return kExitOk;
            }
            if (*range_cmd || *sweep_cmd) {
                const auto table = pricing();
                const auto& entry = table.find(model);
                const auto lo = parse_token_pair(low);
                const auto mi = parse_token_pair(mid);
                const auto hi = parse_token_pair(high);
                nlohmann::ordered_json o;
                o["model"] = entry.model;
                o["items"] = items;
                if (*range_cmd) {
                    o["reasoning"] = reasoning;
                    o.update(range_json(cost::range_estimate(entry, items, lo, mi, hi,
                                                             cost::parse_decimal(reasoning))));
                } else {
                    std::vector<cost::Rational> mults;
                    for (const auto& m : multipliers) {
                        mults.push_back(cost::parse_decimal(m));
                    }
                    auto rows = nlohmann::ordered_json::array();
                    for (const auto& row : cost::sensitivity_sweep(entry, items, lo, mi, hi, mults)) {
                        auto r = range_json(row.range);
                        r["multiplier"] = cost::format_decimal(row.multiplier, 2);
                        rows.push_back(std::move(r));
                    }
                    o["rows"] = std::move(rows);
                }
                out << o.dump(2) << '\n';
                return kExitOk;
            }
            if (*rental_cmd) {
                const auto total = cost::rental_cost(cost::parse_decimal(hours), cost::parse_decimal(rate));
                nlohmann::ordered_json o;
                o["cluster_hours"] = hours;
                o["rate"] = rate;
                o["total"] = cost::format_dollars(total);
                o["total_dollars"] = cost::format_decimal(total, 2);
                out << o.dump(2) << '\n';
                return kExitOk;
            }
            if (*pricing_cmd) {
                out << pricing().serialize();
                return kExitOk;
            }
            if (*bench_run) {
                auto cfg = bench::ExperimentConfig::load(experiment_path);
                if (seed_flag) {
                    cfg.seed = *seed_flag;
                }
                bench::RunHooks hooks;
                hooks.client_factory = factory;
                const auto report = bench::run_experiment(cfg, hooks);
                nlohmann::ordered_json o;
                o["rows"] = report.rows.size();
                o["partial"] = report.partial;
                auto files = nlohmann::ordered_json::array();
                for (const auto& p : report.rendered) {
                    files.push_back(p.string());
                }
                o["rendered"] = std::move(files);
                out << o.dump(2) << '\n';
                return report.partial ? kExitTransport : kExitOk;
            }
            throw ValidationError("no subcommand selected");
        },
        err, json_errors);
}

} // namespace tf2::cli

#include "tf2/translate.hpp"

#include <algorithm>
#include <atomic>
#include <ctime>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <variant>

#include <spdlog/spdlog.h>

#include "tf2/error.hpp"

namespace tf2::translate {
namespace {

bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

std::int64_t unix_now() {
    return static_cast<std::int64_t>(std::time(nullptr));
}

using Outcome = std::variant<corpus::ParallelRecord, FailureEntry>;

// Accepts completions in any order and writes them strictly by sequence
// number, so the output files follow input order.
class OrderedSink {
public:
    OrderedSink(const std::filesystem::path& records, const std::filesystem::path& failures)
        : records_(records), failures_(std::make_unique<std::ofstream>(failures, std::ios::trunc)) {
        if (!*failures_) {
            throw IoError("cannot open failure log " + failures.string() + " for writing");
        }
    }

    void complete(std::uint64_t seq, Outcome outcome) {
        std::lock_guard lock(mu_);
        pending_.emplace(seq, std::move(outcome));
        while (!pending_.empty() && pending_.begin()->first == next_seq_) {
            write(pending_.begin()->second);
            pending_.erase(pending_.begin());
            ++next_seq_;
        }
    }

    void finish() {
        std::lock_guard lock(mu_);
        records_.flush();
        failures_->flush();
        if (!*failures_) {
            throw IoError("failure log write failed");
        }
    }

private:
    void write(const Outcome& outcome) {
        if (const auto* rec = std::get_if<corpus::ParallelRecord>(&outcome)) {
            records_.write(*rec);
        } else {
            const auto& f = std::get<FailureEntry>(outcome);
            nlohmann::ordered_json j;
            j["record_id"] = f.record_id;
            j["cause"] = f.cause;
            *failures_ << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
        }
    }

    std::mutex mu_;
    corpus::RecordWriter records_;
    std::unique_ptr<std::ofstream> failures_;
    std::map<std::uint64_t, Outcome> pending_;
    std::uint64_t next_seq_ = 0;
};

} // namespace

void DecodingParams::validate() const {
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
        throw ValidationError("temperature must be in [0, 2], got " + std::to_string(temperature));
    }
    if (max_output_tokens < 1) {
        throw ValidationError("max_output_tokens must be >= 1");
    }
}

std::string build_translation_prompt(const SourceFable& fable) {
    if (is_blank(fable.text)) {
        throw ValidationError("fable " + std::to_string(fable.id) + " has empty text");
    }
    std::string prompt(kInstructionPrefix);
    prompt += '\n';
    prompt += fable.text;
    return prompt;
}

std::int64_t estimate_tokens(std::string_view text) {
    std::int64_t code_points = 0;
    for (unsigned char c : text) {
        if ((c & 0xC0) != 0x80) {
            ++code_points;
        }
    }
    return (code_points + 3) / 4;
}

TranslationResult translate_one(ChatClient& client, const EndpointConfig& endpoint,
                                const SourceFable& fable, const DecodingParams& params,
                                const Sleeper& sleep) {
    params.validate();
    TranslationResult result;
    result.record_id = fable.id;
    result.prompt_used = build_translation_prompt(fable);

    ChatRequest request;
    request.model = endpoint.model_name;
    request.messages.push_back({"user", result.prompt_used});
    request.temperature = params.temperature;
    request.max_tokens = params.max_output_tokens;

    auto outcome = complete_with_retry(client, request, RetryPolicy::from(endpoint), fable.id,
                                       sleep ? sleep : real_sleeper());
    result.attempts = outcome.attempts;
    result.latency = outcome.latency;
    if (is_blank(outcome.response.content)) {
        throw EmptyOutputError("empty completion for record " + std::to_string(fable.id));
    }
    result.output_text = std::move(outcome.response.content);
    if (outcome.response.usage) {
        result.input_tokens = outcome.response.usage->prompt_tokens;
        result.output_tokens = outcome.response.usage->completion_tokens;
    } else {
        result.input_tokens = estimate_tokens(result.prompt_used);
        result.output_tokens = estimate_tokens(result.output_text);
        result.tokens_estimated = true;
    }
    return result;
}

nlohmann::ordered_json RunSummary::to_json() const {
    nlohmann::ordered_json j;
    j["succeeded"] = succeeded;
    j["failed"] = failed;
    j["input_tokens"] = input_tokens;
    j["output_tokens"] = output_tokens;
    j["tokens_estimated"] = estimated_token_results > 0;
    j["estimated_token_results"] = estimated_token_results;
    j["wall_seconds"] = wall_seconds;
    auto failures_json = nlohmann::ordered_json::array();
    for (const auto& f : failures) {
        failures_json.push_back({{"record_id", f.record_id}, {"cause", f.cause}});
    }
    j["failures"] = std::move(failures_json);
    return j;
}

std::filesystem::path default_failure_log(const std::filesystem::path& sink) {
    auto p = sink;
    p += ".failures.jsonl";
    return p;
}

RunSummary translate_corpus(ChatClient& client, const EndpointConfig& endpoint,
                            const FableSource& source, const DecodingParams& params,
                            const std::filesystem::path& sink, RunOptions options) {
    endpoint.validate();
    params.validate();
    if (options.llm_name.empty()) {
        options.llm_name = endpoint.model_name;
    }
    if (options.translation_model.empty()) {
        options.translation_model = options.llm_name;
    }
    if (options.llm_name.empty()) {
        throw ValidationError("translation run needs a model name for llm_name");
    }
    if (!options.clock) {
        options.clock = unix_now;
    }
    if (!options.sleep) {
        options.sleep = real_sleeper();
    }

    OrderedSink out(sink, options.failure_log.value_or(default_failure_log(sink)));

    const auto start = std::chrono::steady_clock::now();
    std::mutex source_mu;
    std::uint64_t next_seq = 0;
    std::optional<RecordId> last_id;
    bool exhausted = false;

    std::mutex summary_mu;
    RunSummary summary;
    std::vector<std::pair<std::uint64_t, TranslationResult>> results;

    std::atomic<bool> abort{false};
    std::exception_ptr fatal;

    auto worker = [&] {
        while (!abort.load()) {
            std::optional<SourceFable> fable;
            std::uint64_t seq = 0;
            {
                std::lock_guard lock(source_mu);
                if (exhausted) {
                    return;
                }
                try {
                    fable = source();
                } catch (...) {
                    exhausted = true;
                    throw;
                }
                if (!fable) {
                    exhausted = true;
                    return;
                }
                if (last_id && fable->id <= *last_id) {
                    exhausted = true;
                    throw ValidationError("fable ids must be strictly increasing; saw " +
                                          std::to_string(fable->id) + " after " +
                                          std::to_string(*last_id));
                }
                last_id = fable->id;
                seq = next_seq++;
            }

            std::optional<TranslationResult> result;
            std::string cause;
            for (int attempt = 0; attempt <= options.empty_output_regenerations; ++attempt) {
                try {
                    result = translate_one(client, endpoint, *fable, params, options.sleep);
                    break;
                } catch (const EmptyOutputError& e) {
                    cause = std::string("empty output: ") + e.what();
                } catch (const TransportError& e) {
                    cause = std::string("transport: ") + e.what();
                    break;
                } catch (const ValidationError& e) {
                    cause = std::string("validation: ") + e.what();
                    break;
                }
            }

            if (result) {
                corpus::ParallelRecord rec;
                rec.fable = fable->text;
                rec.translated_fable = result->output_text;
                rec.prompt_hash = corpus::compute_prompt_hash(result->prompt_used);
                rec.llm_name = options.llm_name;
                rec.translation_model = options.translation_model;
                rec.generation_timestamp = options.clock();
                out.complete(seq, std::move(rec));
                std::lock_guard lock(summary_mu);
                ++summary.succeeded;
                summary.input_tokens += result->input_tokens;
                summary.output_tokens += result->output_tokens;
                summary.estimated_token_results += result->tokens_estimated ? 1 : 0;
                if (options.keep_results) {
                    results.emplace_back(seq, std::move(*result));
                }
            } else {
                spdlog::warn("record {} failed: {}", fable->id, cause);
                FailureEntry failure{fable->id, cause};
                out.complete(seq, failure);
                std::lock_guard lock(summary_mu);
                ++summary.failed;
                summary.failures.push_back(std::move(failure));
            }
        }
    };

    auto guarded = [&] {
        try {
            worker();
        } catch (...) {
            std::lock_guard lock(summary_mu);
            if (!fatal) {
                fatal = std::current_exception();
            }
            abort.store(true);
        }
    };

    {
        std::vector<std::jthread> pool;
        for (int i = 0; i < endpoint.max_concurrency; ++i) {
            pool.emplace_back(guarded);
        }
    }
    if (fatal) {
        std::rethrow_exception(fatal);
    }
    out.finish();

    std::sort(results.begin(), results.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [seq, r] : results) {
        summary.results.push_back(std::move(r));
    }
    std::sort(summary.failures.begin(), summary.failures.end(),
              [](const auto& a, const auto& b) { return a.record_id < b.record_id; });
    summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return summary;
}

RunSummary translate_corpus(ChatClient& client, const EndpointConfig& endpoint,
                            std::span<const SourceFable> fables, const DecodingParams& params,
                            const std::filesystem::path& sink, RunOptions options) {
    std::vector<const SourceFable*> ordered;
    ordered.reserve(fables.size());
    for (const auto& f : fables) {
        ordered.push_back(&f);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto* a, const auto* b) { return a->id < b->id; });
    std::size_t next = 0;
    FableSource source = [&]() -> std::optional<SourceFable> {
        if (next >= ordered.size()) {
            return std::nullopt;
        }
        return *ordered[next++];
    };
    return translate_corpus(client, endpoint, source, params, sink, std::move(options));
}

} // namespace tf2::translate

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tf2/chat.hpp"
#include "tf2/corpus.hpp"

namespace tf2::translate {

using corpus::RecordId;
using corpus::SourceFable;

inline constexpr std::string_view kInstructionPrefix =
    "Translate the following fable from English to Romanian:";

struct DecodingParams {
    double temperature = 0.0;
    int max_output_tokens = 1024;

    void validate() const;
};

struct TranslationResult {
    RecordId record_id = 0;
    std::string output_text;
    std::string prompt_used;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    /// True when the endpoint did not report usage and counts were estimated.
    bool tokens_estimated = false;
    std::chrono::milliseconds latency{0};
    int attempts = 0;
};

/// Instruction line, newline, fable text. Throws ValidationError on an
/// empty fable.
std::string build_translation_prompt(const SourceFable& fable);

/// ceil(code points / 4). Used when the endpoint omits usage counts.
std::int64_t estimate_tokens(std::string_view text);

/// One completion for one fable, with transport retries per `endpoint`.
/// Throws TransportError when retries are exhausted and EmptyOutputError
/// when the completion is blank.
TranslationResult translate_one(ChatClient& client, const EndpointConfig& endpoint,
                                const SourceFable& fable, const DecodingParams& params,
                                const Sleeper& sleep = real_sleeper());

struct FailureEntry {
    RecordId record_id = 0;
    std::string cause;

    bool operator==(const FailureEntry&) const = default;
};

struct RunOptions {
    /// Defaults to the endpoint's model_name.
    std::string llm_name;
    /// Defaults to llm_name.
    std::string translation_model;
    /// Unix seconds stamped on each record.
    std::function<std::int64_t()> clock;
    Sleeper sleep;
    /// Extra attempts granted to a fable whose completion came back blank.
    int empty_output_regenerations = 1;
    /// Defaults to `<sink>.failures.jsonl`.
    std::optional<std::filesystem::path> failure_log;
    /// Keep every TranslationResult in RunSummary::results.
    bool keep_results = false;
};

struct RunSummary {
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    /// Results whose token counts were estimated rather than reported.
    std::size_t estimated_token_results = 0;
    double wall_seconds = 0.0;
    std::vector<FailureEntry> failures;
    /// In record_id order; filled only with RunOptions::keep_results.
    std::vector<TranslationResult> results;

    nlohmann::ordered_json to_json() const;
};

/// Pull-style source; returns nullopt at end of input. Record ids must be
/// strictly increasing.
using FableSource = std::function<std::optional<SourceFable>()>;

/// Translates every fable with at most endpoint.max_concurrency requests
/// in flight. Successes go to `sink` as ParallelRecords and failures to the
/// failure log, both in record_id order. Both files are opened before the
/// first request, so an unwritable sink aborts with IoError up front.
RunSummary translate_corpus(ChatClient& client, const EndpointConfig& endpoint,
                            const FableSource& source, const DecodingParams& params,
                            const std::filesystem::path& sink, RunOptions options = {});

/// Convenience overload; fables are processed in record_id order.
RunSummary translate_corpus(ChatClient& client, const EndpointConfig& endpoint,
                            std::span<const SourceFable> fables, const DecodingParams& params,
                            const std::filesystem::path& sink, RunOptions options = {});

std::filesystem::path default_failure_log(const std::filesystem::path& sink);

} // namespace tf2::translate

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tf2 {

struct ConfigSection;

/// Where and how to reach a chat-completion endpoint. The API key itself
/// never appears here: `api_key_ref` names the environment variable that
/// holds it (empty means no Authorization header).
struct EndpointConfig {
    std::string name;
    std::string base_url;
    std::string model_name;
    std::string api_key_ref;
    double timeout_seconds = 120.0;
    int max_retries = 3;
    int max_concurrency = 4;
    /// First retry delay; later ones double.
    double backoff_initial_seconds = 1.0;

    /// Throws ValidationError on a broken invariant.
    void validate() const;

    /// Reads base_url, model, api_key_env, timeout, max_retries,
    /// max_concurrency and backoff from a config section.
    static EndpointConfig from_section(const ConfigSection& section);
};

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
};

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct ChatResponse {
    std::string content;
    std::optional<TokenUsage> usage;
};

/// Request body in the OpenAI-compatible chat-completions shape.
nlohmann::json to_wire(const ChatRequest& request);

/// Extracts choices[0].message.content and usage from a response body.
/// Throws TransportError (status 200) when the body has the wrong shape.
ChatResponse parse_wire_response(const std::string& body);

/// A synchronous chat-completion transport. Implementations must be safe to
/// call from several threads at once. Failures are reported as
/// TransportError carrying the HTTP status (0 when no response arrived).
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

/// POSTs to `<base_url>/chat/completions`.
class HttpChatClient final : public ChatClient {
public:
    /// Throws ValidationError if the key variable is named but unset.
    explicit HttpChatClient(EndpointConfig config);
    ChatResponse complete(const ChatRequest& request) override;

private:
    EndpointConfig config_;
    std::string scheme_host_port_;
    std::string path_;
    std::string api_key_;
};

using ClientFactory = std::function<std::unique_ptr<ChatClient>(const EndpointConfig&)>;

/// HTTP for http(s):// URLs; the in-process stubs for stub:// URLs
/// (see stub_chat.hpp).
ClientFactory default_client_factory();

/// 429, 5xx, and "no response" (0) are worth retrying.
bool is_retryable_status(int status) noexcept;

using Sleeper = std::function<void(std::chrono::duration<double>)>;

Sleeper real_sleeper();

struct RetryPolicy {
    int max_retries = 3;
    double initial_backoff_seconds = 1.0;

    static RetryPolicy from(const EndpointConfig& cfg) {
        return {cfg.max_retries, cfg.backoff_initial_seconds};
    }
};

/// Delay before retry number `retry` (1-based): initial * 2^(retry-1),
/// scaled by a jitter factor in [0.5, 1.0] derived from `jitter_key`.
std::chrono::duration<double> backoff_delay(const RetryPolicy& policy, int retry,
                                            std::uint64_t jitter_key);

struct CallOutcome {
    ChatResponse response;
    int attempts = 0;
    std::chrono::milliseconds latency{0};
};

/// Calls `client` until it succeeds, a non-retryable error occurs, or
/// max_retries retries are spent. On exhaustion rethrows a TransportError
/// with the last status and the attempt count in its message.
CallOutcome complete_with_retry(ChatClient& client, const ChatRequest& request,
                                const RetryPolicy& policy, std::uint64_t jitter_key,
                                const Sleeper& sleep);

/// Runs fn(0..count-1) on at most `concurrency` threads. If any call throws,
/// no further indices are started and the first exception is rethrown
/// after all workers have joined.
void bounded_parallel_for(std::size_t count, std::size_t concurrency,
                          const std::function<void(std::size_t)>& fn);

} // namespace tf2

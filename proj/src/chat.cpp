#include "tf2/chat.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "tf2/error.hpp"
#include "tf2/kv_config.hpp"
#include "tf2/rng.hpp"
#include "tf2/stub_chat.hpp"

namespace tf2 {

void EndpointConfig::validate() const {
    const std::string who = name.empty() ? "endpoint" : "endpoint \"" + name + "\"";
    if (base_url.empty()) {
        throw ValidationError(who + ": base_url is empty");
    }
    if (max_concurrency < 1) {
        throw ValidationError(who + ": max_concurrency must be >= 1");
    }
    if (max_retries < 0) {
        throw ValidationError(who + ": max_retries must be >= 0");
    }
    if (!(timeout_seconds > 0.0)) {
        throw ValidationError(who + ": timeout must be > 0");
    }
    if (!(backoff_initial_seconds >= 0.0)) {
        throw ValidationError(who + ": backoff must be >= 0");
    }
}

EndpointConfig EndpointConfig::from_section(const ConfigSection& s) {
    EndpointConfig cfg;
    cfg.name = s.name;
    cfg.base_url = s.require("base_url");
    cfg.model_name = s.get_or("model", "");
    cfg.api_key_ref = s.get_or("api_key_env", "");
    cfg.timeout_seconds = s.get_double("timeout", cfg.timeout_seconds);
    cfg.max_retries = static_cast<int>(s.get_int("max_retries", cfg.max_retries));
    cfg.max_concurrency = static_cast<int>(s.get_int("max_concurrency", cfg.max_concurrency));
    cfg.backoff_initial_seconds = s.get_double("backoff", cfg.backoff_initial_seconds);
    cfg.validate();
    return cfg;
}

nlohmann::json to_wire(const ChatRequest& request) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
    }
    return {
        {"model", request.model},
        {"messages", std::move(messages)},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
    };
}

ChatResponse parse_wire_response(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error&) {
        throw TransportError("endpoint returned a non-JSON body", 200);
    }
    const auto* content = [&]() -> const nlohmann::json* {
        if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() ||
            j["choices"].empty()) {
            return nullptr;
        }
        const auto& choice = j["choices"][0];
        if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object()) {
            return nullptr;
        }
        const auto& msg = choice["message"];
        if (!msg.contains("content")) {
            return nullptr;
        }
        return &msg["content"];
    }();
    if (content == nullptr) {
        throw TransportError("endpoint response lacks choices[0].message.content", 200);
    }

    ChatResponse out;
    // A null content is an empty completion, not a malformed response.
    if (content->is_string()) {
        out.content = content->get<std::string>();
    } else if (!content->is_null()) {
        throw TransportError("choices[0].message.content is not a string", 200);
    }
    if (j.contains("usage") && j["usage"].is_object()) {
        const auto& u = j["usage"];
        if (u.contains("prompt_tokens") && u["prompt_tokens"].is_number_integer() &&
            u.contains("completion_tokens") && u["completion_tokens"].is_number_integer()) {
            out.usage = TokenUsage{u["prompt_tokens"].get<std::int64_t>(),
                                   u["completion_tokens"].get<std::int64_t>()};
        }
    }
    return out;
}

HttpChatClient::HttpChatClient(EndpointConfig config) : config_(std::move(config)) {
    config_.validate();
    if (config_.model_name.empty()) {
        throw ValidationError("endpoint \"" + config_.name + "\": model is required for HTTP endpoints");
    }
    const auto scheme_end = config_.base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw ValidationError("base_url must start with http:// or https://: " + config_.base_url);
    }
    const auto path_start = config_.base_url.find('/', scheme_end + 3);
    scheme_host_port_ = config_.base_url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') {
        prefix.pop_back();
    }
    path_ = prefix + "/chat/completions";

    if (!config_.api_key_ref.empty()) {
        const char* key = std::getenv(config_.api_key_ref.c_str());
        if (key == nullptr || *key == '\0') {
            throw ValidationError("environment variable " + config_.api_key_ref +
                                  " (API key) is not set");
        }
        api_key_ = key;
    }
}

ChatResponse HttpChatClient::complete(const ChatRequest& request) {
    httplib::Client cli(scheme_host_port_);
    const auto secs = static_cast<time_t>(config_.timeout_seconds);
    const auto usecs =
        static_cast<time_t>((config_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (!api_key_.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key_);
    }
    auto res = cli.Post(path_, headers, to_wire(request).dump(), "application/json");
    if (!res) {
        throw TransportError("request to " + scheme_host_port_ + path_ +
                                 " failed: " + httplib::to_string(res.error()),
                             0);
    }
    if (res->status != 200) {
        throw TransportError("endpoint returned HTTP " + std::to_string(res->status), res->status);
    }
    return parse_wire_response(res->body);
}

ClientFactory default_client_factory() {
    return [](const EndpointConfig& cfg) -> std::unique_ptr<ChatClient> {
        if (cfg.base_url.rfind("stub://", 0) == 0) {
            return make_stub_client(cfg.base_url);
        }
        return std::make_unique<HttpChatClient>(cfg);
    };
}

bool is_retryable_status(int status) noexcept {
    return status == 0 || status == 429 || status >= 500;
}

Sleeper real_sleeper() {
    return [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
}

std::chrono::duration<double> backoff_delay(const RetryPolicy& policy, int retry,
                                            std::uint64_t jitter_key) {
    const double base = policy.initial_backoff_seconds * std::ldexp(1.0, std::max(0, retry - 1));
    const auto bits = splitmix64(jitter_key ^ (static_cast<std::uint64_t>(retry) << 48));
    const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    return std::chrono::duration<double>(base * (0.5 + 0.5 * u));
}

CallOutcome complete_with_retry(ChatClient& client, const ChatRequest& request,
                                const RetryPolicy& policy, std::uint64_t jitter_key,
                                const Sleeper& sleep) {
    const auto start = std::chrono::steady_clock::now();
    for (int attempt = 1;; ++attempt) {
        try {
            CallOutcome out;
            out.response = client.complete(request);
            out.attempts = attempt;
            out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - start);
            return out;
        } catch (const TransportError& e) {
            if (!is_retryable_status(e.status()) || attempt > policy.max_retries) {
                throw TransportError(std::string(e.what()) + " (after " + std::to_string(attempt) +
                                         (attempt == 1 ? " attempt)" : " attempts)"),
                                     e.status());
            }
            spdlog::debug("attempt {} failed ({}), retrying", attempt, e.what());
            sleep(backoff_delay(policy, attempt, jitter_key));
        }
    }
}

void bounded_parallel_for(std::size_t count, std::size_t concurrency,
                          const std::function<void(std::size_t)>& fn) {
    if (count == 0) {
        return;
    }
    const std::size_t workers = std::clamp<std::size_t>(concurrency, 1, count);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mu;

    auto work = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!first_error) {
                    first_error = std::current_exception();
                }
                failed.store(true);
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

} // namespace tf2

#pragma once

#include <array>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include "tf2/chat.hpp"

namespace tf2 {

// In-process endpoints for dry runs and tests. The CLI reaches them through
// base_url values:
//
//   stub://echo                     echo the prompt body (text after the first line)
//   stub://judge?scores=5,4,5,4,5   constant rubric verdict
//   stub://fail?status=503          always fail with the given status

/// Returns the last user message. With `strip_first_line`, drops everything
/// up to and including the first newline, so an instruction-prefixed
/// prompt echoes back only its payload.
class EchoClient final : public ChatClient {
public:
    explicit EchoClient(bool strip_first_line = true, bool report_usage = false)
        : strip_first_line_(strip_first_line), report_usage_(report_usage) {}

    ChatResponse complete(const ChatRequest& request) override;

private:
    bool strip_first_line_;
    bool report_usage_;
};

/// Always answers with the same rubric JSON (accuracy, fluency, coherence,
/// style, cultural).
class ConstantJudgeClient final : public ChatClient {
public:
    explicit ConstantJudgeClient(std::array<int, 5> scores) : scores_(scores) {}

    ChatResponse complete(const ChatRequest& request) override;

private:
    std::array<int, 5> scores_;
};

class FunctionClient final : public ChatClient {
public:
    using Fn = std::function<ChatResponse(const ChatRequest&)>;

    explicit FunctionClient(Fn fn) : fn_(std::move(fn)) {}

    ChatResponse complete(const ChatRequest& request) override { return fn_(request); }

private:
    Fn fn_;
};

/// Fails with an HTTP status, or answers with a response.
struct ScriptStep {
    int fail_status = 0;
    ChatResponse response;

    static ScriptStep fail(int status) { return {status, {}}; }
    static ScriptStep reply(std::string text) { return {0, {std::move(text), std::nullopt}}; }
};

/// Plays steps in call order; the final step repeats once the script runs
/// out. Thread-safe.
class ScriptedClient final : public ChatClient {
public:
    explicit ScriptedClient(std::vector<ScriptStep> steps);

    ChatResponse complete(const ChatRequest& request) override;
    std::size_t calls() const;

private:
    mutable std::mutex mu_;
    std::vector<ScriptStep> steps_;
    std::size_t next_ = 0;
};

/// Builds a stub from a stub:// URL. Throws ValidationError on unknown kinds.
std::unique_ptr<ChatClient> make_stub_client(const std::string& url);

} // namespace tf2

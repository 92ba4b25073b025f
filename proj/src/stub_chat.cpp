#include "tf2/stub_chat.hpp"

#include <map>
#include <sstream>

#include "tf2/error.hpp"
#include "tf2/kv_config.hpp"

namespace tf2 {
namespace {

std::int64_t rough_tokens(const std::string& s) {
    return static_cast<std::int64_t>((s.size() + 3) / 4);
}

} // namespace

ChatResponse EchoClient::complete(const ChatRequest& request) {
    std::string text;
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
        if (it->role == "user") {
            text = it->content;
            break;
        }
    }
    const std::string prompt = text;
    if (strip_first_line_) {
        if (const auto nl = text.find('\n'); nl != std::string::npos) {
            text = text.substr(nl + 1);
        }
    }
    ChatResponse out{text, std::nullopt};
    if (report_usage_) {
        out.usage = TokenUsage{rough_tokens(prompt), rough_tokens(text)};
    }
    return out;
}

ChatResponse ConstantJudgeClient::complete(const ChatRequest&) {
    std::ostringstream os;
    os << "{\"accuracy\": " << scores_[0] << ", \"fluency\": " << scores_[1]
       << ", \"coherence\": " << scores_[2] << ", \"style\": " << scores_[3]
       << ", \"cultural\": " << scores_[4] << "}";
    return {os.str(), std::nullopt};
}

ScriptedClient::ScriptedClient(std::vector<ScriptStep> steps) : steps_(std::move(steps)) {
    if (steps_.empty()) {
        throw ValidationError("ScriptedClient needs at least one step");
    }
}

ChatResponse ScriptedClient::complete(const ChatRequest&) {
    ScriptStep step;
    {
        std::lock_guard lock(mu_);
        step = steps_[std::min(next_, steps_.size() - 1)];
        ++next_;
    }
    if (step.fail_status != 0) {
        throw TransportError("scripted failure HTTP " + std::to_string(step.fail_status),
                             step.fail_status);
    }
    return step.response;
}

std::size_t ScriptedClient::calls() const {
    std::lock_guard lock(mu_);
    return next_;
}

std::unique_ptr<ChatClient> make_stub_client(const std::string& url) {
    constexpr std::string_view kScheme = "stub://";
    if (url.rfind(kScheme, 0) != 0) {
        throw ValidationError("not a stub URL: " + url);
    }
    std::string rest = url.substr(kScheme.size());
    std::string kind = rest;
    std::map<std::string, std::string> params;
    if (const auto q = rest.find('?'); q != std::string::npos) {
        kind = rest.substr(0, q);
        std::stringstream ss(rest.substr(q + 1));
        std::string kv;
        while (std::getline(ss, kv, '&')) {
            const auto eq = kv.find('=');
            if (eq != std::string::npos) {
                params[kv.substr(0, eq)] = kv.substr(eq + 1);
            }
        }
    }

    if (kind == "echo") {
        return std::make_unique<EchoClient>();
    }
    if (kind == "judge") {
        std::array<int, 5> scores{5, 5, 5, 5, 5};
        if (auto it = params.find("scores"); it != params.end()) {
            std::stringstream ss(it->second);
            std::string item;
            std::size_t i = 0;
            while (std::getline(ss, item, ',')) {
                if (i >= scores.size()) {
                    throw ValidationError("stub judge takes exactly five scores: " + url);
                }
                scores[i++] = static_cast<int>(parse_int(item, "stub judge score"));
            }
            if (i != scores.size()) {
                throw ValidationError("stub judge takes exactly five scores: " + url);
            }
        }
        return std::make_unique<ConstantJudgeClient>(scores);
    }
    if (kind == "fail") {
        int status = 503;
        if (auto it = params.find("status"); it != params.end()) {
            status = static_cast<int>(parse_int(it->second, "stub fail status"));
        }
        return std::make_unique<ScriptedClient>(std::vector{ScriptStep::fail(status)});
    }
    throw ValidationError("unknown stub endpoint kind \"" + kind + "\" in " + url);
}

} // namespace tf2

#include <doctest.h>

#include <atomic>
#include <thread>

#include "support/fixtures.hpp"
#include "tf2/error.hpp"
#include "tf2/stub_chat.hpp"
#include "tf2/translate.hpp"

using namespace tf2;
using namespace tf2::translate;
using tf2::testing::TempDir;

namespace {

const Sleeper kNoSleep = [](std::chrono::duration<double>) {};

EndpointConfig stub_endpoint(int concurrency = 4, int retries = 3) {
    EndpointConfig cfg{"stub", "stub://echo", "echo-model"};
    cfg.max_concurrency = concurrency;
    cfg.max_retries = retries;
    return cfg;
}

std::vector<SourceFable> toy_fables(int n) {
    std::vector<SourceFable> out;
    for (int i = 0; i < n; ++i) {
        out.push_back({static_cast<RecordId>(i), tf2::testing::toy_fable(i)});
    }
    return out;
}

RunOptions quiet_options() {
    RunOptions o;
    o.sleep = kNoSleep;
    o.clock = [] { return std::int64_t{1'750'000'000}; };
    return o;
}

// Fable text is the prompt after the instruction line.
std::string fable_of(const ChatRequest& req) {
    const auto& body = req.messages.back().content;
    return body.substr(body.find('\n') + 1);
}

} // namespace

TEST_CASE("prompt is the instruction line then the fable") {
    const SourceFable f{0, "A fox met a crow."};
    CHECK(build_translation_prompt(f) ==
          "Translate the following fable from English to Romanian:\nA fox met a crow.");
    CHECK_THROWS_AS(build_translation_prompt({1, ""}), ValidationError);
}

TEST_CASE("token estimate counts code points") {
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens("abcd") == 1);
    CHECK(estimate_tokens("abcde") == 2);
    // Four two-byte letters are four code points.
    CHECK(estimate_tokens("ăîșț") == 1);
}

TEST_CASE("decoding params bounds") {
    CHECK_NOTHROW((DecodingParams{0.0, 1024}.validate()));
    CHECK_NOTHROW((DecodingParams{2.0, 1}.validate()));
    CHECK_THROWS_AS((DecodingParams{-0.1, 1024}.validate()), ValidationError);
    CHECK_THROWS_AS((DecodingParams{2.1, 1024}.validate()), ValidationError);
    CHECK_THROWS_AS((DecodingParams{0.0, 0}.validate()), ValidationError);
}

TEST_CASE("translate_one with echo stub") {
    EchoClient echo;
    const SourceFable f{5, "The ant worked all summer."};
    const auto r = translate_one(echo, stub_endpoint(), f, {}, kNoSleep);
    CHECK(r.record_id == 5);
    CHECK(r.output_text == f.text);
    CHECK(r.prompt_used == build_translation_prompt(f));
    CHECK(r.attempts == 1);
    CHECK(r.tokens_estimated);
    CHECK(r.input_tokens == estimate_tokens(r.prompt_used));
    CHECK(r.output_tokens == estimate_tokens(f.text));

    EchoClient reporting(true, true);
    CHECK_FALSE(translate_one(reporting, stub_endpoint(), f, {}, kNoSleep).tokens_estimated);
}

TEST_CASE("translate_one passes decoding params through") {
    ChatRequest seen;
    FunctionClient fn([&](const ChatRequest& req) {
        seen = req;
        return ChatResponse{"x", std::nullopt};
    });
    translate_one(fn, stub_endpoint(), {0, "t"}, {0.2, 333}, kNoSleep);
    CHECK(seen.model == "echo-model");
    CHECK(seen.temperature == 0.2);
    CHECK(seen.max_tokens == 333);
    REQUIRE(seen.messages.size() == 1);
    CHECK(seen.messages[0].role == "user");
}

TEST_CASE("transient failures are retried") {
    ScriptedClient client(
        {ScriptStep::fail(500), ScriptStep::fail(500), ScriptStep::reply("Vulpea.")});
    const auto r = translate_one(client, stub_endpoint(4, 3), {0, "The fox."}, {}, kNoSleep);
    CHECK(r.attempts == 3);
    CHECK(r.output_text == "Vulpea.");
}

TEST_CASE("retries are bounded") {
    ScriptedClient client({ScriptStep::fail(502)});
    CHECK_THROWS_AS(translate_one(client, stub_endpoint(4, 2), {0, "x"}, {}, kNoSleep),
                    TransportError);
    CHECK(client.calls() == 3);
}

TEST_CASE("blank completion is an EmptyOutputError") {
    ScriptedClient client({ScriptStep::reply("  \n ")});
    CHECK_THROWS_AS(translate_one(client, stub_endpoint(), {0, "x"}, {}, kNoSleep),
                    EmptyOutputError);
}

TEST_CASE("batch run with failures writes records and a failure log in id order") {
    TempDir dir;
    const auto fables = toy_fables(10);
    FunctionClient client([&](const ChatRequest& req) -> ChatResponse {
        const auto text = fable_of(req);
        if (text == fables[3].text || text == fables[7].text) {
            throw TransportError("bad request", 400);
        }
        return {"RO: " + text, std::nullopt};
    });
    const auto sink = dir / "out.jsonl";
    const auto summary = translate_corpus(client, stub_endpoint(3), fables, {}, sink, quiet_options());
    CHECK(summary.succeeded == 8);
    CHECK(summary.failed == 2);
    REQUIRE(summary.failures.size() == 2);
    CHECK(summary.failures[0].record_id == 3);
    CHECK(summary.failures[1].record_id == 7);

    const auto loaded = corpus::load_parallel_records(sink);
    CHECK(loaded.skipped.empty());
    REQUIRE(loaded.records.size() == 8);
    std::size_t k = 0;
    for (int i = 0; i < 10; ++i) {
        if (i == 3 || i == 7) {
            continue;
        }
        const auto& rec = loaded.records[k++];
        CHECK(rec.fable == fables[i].text);
        CHECK(rec.translated_fable == "RO: " + fables[i].text);
        CHECK(rec.prompt_hash == corpus::compute_prompt_hash(build_translation_prompt(fables[i])));
        CHECK(rec.llm_name == "echo-model");
        CHECK(rec.translation_model == "echo-model");
        CHECK(rec.generation_timestamp == 1'750'000'000);
        CHECK(corpus::record_violations(rec).empty());
    }

    const auto log = tf2::testing::read_lines(default_failure_log(sink));
    REQUIRE(log.size() == 2);
    const auto first = nlohmann::json::parse(log[0]);
    CHECK(first["record_id"] == 3);
    CHECK(first["cause"].get<std::string>().find("transport") != std::string::npos);
    CHECK(nlohmann::json::parse(log[1])["record_id"] == 7);
}

TEST_CASE("concurrency is capped and output order is stable") {
    TempDir dir;
    const auto fables = toy_fables(24);
    std::atomic<int> in_flight{0};
    std::atomic<int> peak{0};
    FunctionClient client([&](const ChatRequest& req) -> ChatResponse {
        const int now = ++in_flight;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        // Earlier fables take longer, so completion order is roughly reversed.
        const auto text = fable_of(req);
        std::size_t idx = 0;
        while (fables[idx].text != text) {
            ++idx;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2 * (24 - idx) / 4));
        --in_flight;
        return {text, std::nullopt};
    });
    const auto sink = dir / "out.jsonl";
    auto opts = quiet_options();
    opts.keep_results = true;
    const auto summary = translate_corpus(client, stub_endpoint(4), fables, {}, sink, opts);
    CHECK(summary.succeeded == 24);
    CHECK(peak.load() <= 4);
    CHECK(peak.load() >= 2);
    const auto loaded = corpus::load_parallel_records(sink);
    REQUIRE(loaded.records.size() == 24);
    for (std::size_t i = 0; i < 24; ++i) {
        CHECK(loaded.records[i].fable == fables[i].text);
    }
    REQUIRE(summary.results.size() == 24);
    for (std::size_t i = 0; i < 24; ++i) {
        CHECK(summary.results[i].record_id == i);
    }
}

TEST_CASE("runs are byte-identical with a fixed clock") {
    TempDir dir;
    const auto fables = toy_fables(12);
    EchoClient echo;
    translate_corpus(echo, stub_endpoint(4), fables, {}, dir / "a.jsonl", quiet_options());
    translate_corpus(echo, stub_endpoint(2), fables, {}, dir / "b.jsonl", quiet_options());
    CHECK(tf2::testing::read_text(dir / "a.jsonl") == tf2::testing::read_text(dir / "b.jsonl"));
}

TEST_CASE("one blank completion is regenerated") {
    TempDir dir;
    ScriptedClient client({ScriptStep::reply(""), ScriptStep::reply("Furnica.")});
    const auto fables = toy_fables(1);
    const auto s = translate_corpus(client, stub_endpoint(1), fables, {}, dir / "o.jsonl",
                                    quiet_options());
    CHECK(s.succeeded == 1);
    CHECK(client.calls() == 2);

    ScriptedClient blank({ScriptStep::reply("")});
    const auto f = translate_corpus(blank, stub_endpoint(1), fables, {}, dir / "p.jsonl",
                                    quiet_options());
    CHECK(f.failed == 1);
    CHECK(blank.calls() == 2);
    REQUIRE(f.failures.size() == 1);
    CHECK(f.failures[0].cause.find("empty output") == 0);
}

TEST_CASE("an unwritable sink fails before any request") {
    ScriptedClient client({ScriptStep::reply("x")});
    const auto fables = toy_fables(3);
    CHECK_THROWS_AS(translate_corpus(client, stub_endpoint(), fables, {},
                                     "/nonexistent-dir/out.jsonl", quiet_options()),
                    IoError);
    CHECK(client.calls() == 0);
}

TEST_CASE("source ids must increase") {
    TempDir dir;
    EchoClient echo;
    std::vector<SourceFable> items{{0, "a"}, {2, "b"}, {1, "c"}};
    std::size_t i = 0;
    FableSource source = [&]() -> std::optional<SourceFable> {
        if (i == items.size()) {
            return std::nullopt;
        }
        return items[i++];
    };
    CHECK_THROWS_AS(translate_corpus(echo, stub_endpoint(1), source, {}, dir / "o.jsonl",
                                     quiet_options()),
                    ValidationError);
}

TEST_CASE("summary json") {
    TempDir dir;
    EchoClient echo;
    const auto fables = toy_fables(2);
    const auto s = translate_corpus(echo, stub_endpoint(), fables, {}, dir / "o.jsonl",
                                    quiet_options());
    const auto j = s.to_json();
    CHECK(j["succeeded"] == 2);
    CHECK(j["failed"] == 0);
    CHECK(j["tokens_estimated"] == true);
    CHECK(j["input_tokens"].get<std::int64_t>() > 0);
}

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "support/fixtures.hpp"
#include "tf2/corpus.hpp"
#include "tf2/error.hpp"
#include "tf2/rng.hpp"

using namespace tf2::corpus;
using tf2::testing::make_record;
using tf2::testing::TempDir;

TEST_CASE("prompt hash uses SHA-256 test vectors") {
    CHECK(compute_prompt_hash("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(compute_prompt_hash("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(is_hex_digest(compute_prompt_hash("Vulpea și corbul")));
}

TEST_CASE("is_hex_digest") {
    const std::string good(64, 'a');
    CHECK(is_hex_digest(good));
    CHECK_FALSE(is_hex_digest(std::string(63, 'a')));
    CHECK_FALSE(is_hex_digest(std::string(65, 'a')));
    CHECK_FALSE(is_hex_digest(std::string(64, 'A')));
    CHECK_FALSE(is_hex_digest(std::string(63, 'a') + "g"));
}

TEST_CASE("source loader skips malformed lines") {
    TempDir dir;
    const auto path = dir / "fables.jsonl";
    tf2::testing::write_text(path, "{\"fable\": \"one\"}\n"
                                   "{\"fable\": \"two\"}\n"
                                   "{\"fable\": \n"
                                   "\n"
                                   "{\"fable\": \"three\"}\n"
                                   "{\"fable\": \"four\", \"extra\": 1}\n");
    const auto loaded = load_source_corpus(path);
    REQUIRE(loaded.fables.size() == 4);
    REQUIRE(loaded.skipped.size() == 1);
    CHECK(loaded.skipped[0].line == 3);
    CHECK(loaded.fables[2] == SourceFable{2, "three"});

    const auto limited = load_source_corpus(path, 2);
    CHECK(limited.fables.size() == 2);

    CHECK_THROWS_AS(load_source_corpus(dir / "missing.jsonl"), tf2::IoError);
}

TEST_CASE("source loader rejects empty and non-string fables") {
    TempDir dir;
    const auto path = dir / "fables.jsonl";
    tf2::testing::write_text(path, "{\"fable\": \"\"}\n{\"fable\": 3}\n[1]\n{\"text\": \"x\"}\n");
    const auto loaded = load_source_corpus(path);
    CHECK(loaded.fables.empty());
    CHECK(loaded.skipped.size() == 4);
}

TEST_CASE("record validation reports every violation") {
    auto r = make_record("fable", "fabulă");
    CHECK(record_violations(r).empty());

    r.prompt_hash = std::string(63, 'a');
    r.generation_timestamp = 0;
    r.llm_name = " ";
    const auto v = record_violations(r);
    CHECK(v.size() == 3);
    try {
        validate_record(r);
        FAIL("expected throw");
    } catch (const tf2::ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("prompt_hash") != std::string::npos);
        CHECK(msg.find("63") != std::string::npos);
        CHECK(msg.find("generation_timestamp") != std::string::npos);
        CHECK(msg.find("llm_name") != std::string::npos);
    }
}

TEST_CASE("serialization keeps schema order and round-trips") {
    const auto r = make_record("The fox \"smiled\".", "Vulpea a zâmbit. Ștefan, țară");
    const auto line = serialize_record(r);
    CHECK(line.find('\n') == std::string::npos);
    const auto j = nlohmann::ordered_json::parse(line);
    std::vector<std::string> keys;
    for (const auto& item : j.items()) {
        keys.push_back(item.key());
    }
    CHECK(keys == std::vector<std::string>{"fable", "translated_fable", "pipeline_stage",
                                           "source_lang", "target_lang", "prompt_hash",
                                           "llm_name", "translation_model",
                                           "generation_timestamp"});
    CHECK(keys.size() == kRecordFieldCount);
    // UTF-8 is written raw, not \u-escaped.
    CHECK(line.find("Ștefan") != std::string::npos);
    CHECK(record_from_json(nlohmann::json::parse(line)) == r);
}

TEST_CASE("record_from_json names the offending field") {
    auto j = nlohmann::json::parse(serialize_record(make_record("a", "b")));
    j.erase("target_lang");
    CHECK_THROWS_WITH_AS(record_from_json(j), doctest::Contains("target_lang"),
                         tf2::ValidationError);

    j = nlohmann::json::parse(serialize_record(make_record("a", "b")));
    j["generation_timestamp"] = "yesterday";
    CHECK_THROWS_WITH_AS(record_from_json(j), doctest::Contains("generation_timestamp"),
                         tf2::ValidationError);
}

TEST_CASE("invalid UTF-8 cannot be serialized") {
    auto r = make_record("ok", std::string("bad \xC3\x28 byte"));
    CHECK_THROWS_AS(serialize_record(r), tf2::ValidationError);
}

TEST_CASE("dedupe keeps the first of each hash") {
    // Groups of size 3, 2, 2 plus three singletons: 10 in, 6 out.
    std::vector<ParallelRecord> records;
    const std::vector<std::string> sources = {"a", "b", "a", "c", "b", "a",
                                              "d", "e", "c", "f"};
    for (std::size_t i = 0; i < sources.size(); ++i) {
        records.push_back(make_record(sources[i], "t" + std::to_string(i)));
    }
    const auto result = dedupe(records);
    CHECK(result.removed == 4);
    REQUIRE(result.records.size() == 6);
    std::vector<std::string> kept;
    for (const auto& r : result.records) {
        kept.push_back(r.translated_fable);
    }
    CHECK(kept == std::vector<std::string>{"t0", "t1", "t3", "t6", "t7", "t9"});
}

TEST_CASE("split is a seeded partition") {
    std::vector<int> items(15);
    std::iota(items.begin(), items.end(), 0);
    const auto a = split_corpus(items, {12, 2, 1}, 42);
    const auto b = split_corpus(items, {12, 2, 1}, 42);
    CHECK(a.train == b.train);
    CHECK(a.validation == b.validation);
    CHECK(a.test == b.test);
    CHECK(a.seed == 42);

    const auto c = split_corpus(items, {12, 2, 1}, 7);
    CHECK(c.train != a.train);

    CHECK_THROWS_AS(split_corpus(items, {12, 2, 2}, 42), tf2::ValidationError);
    CHECK_THROWS_AS(split_corpus(items, {10, 2, 1}, 42), tf2::ValidationError);
}

TEST_CASE("split property: disjoint cover with exact sizes") {
    tf2::Rng gen(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<std::size_t>(gen.below(60));
        const auto train = n == 0 ? 0 : static_cast<std::size_t>(gen.below(n + 1));
        const auto val = static_cast<std::size_t>(gen.below(n - train + 1));
        const SplitCounts counts{train, val, n - train - val};
        std::vector<int> items(n);
        std::iota(items.begin(), items.end(), 0);
        const auto s = split_corpus(items, counts, gen.next());
        REQUIRE(s.train.size() == counts.train);
        REQUIRE(s.validation.size() == counts.validation);
        REQUIRE(s.test.size() == counts.test);
        std::vector<int> all;
        all.insert(all.end(), s.train.begin(), s.train.end());
        all.insert(all.end(), s.validation.begin(), s.validation.end());
        all.insert(all.end(), s.test.begin(), s.test.end());
        std::sort(all.begin(), all.end());
        REQUIRE(all == items);
    }
}

TEST_CASE("the reference split sums to 15000") {
    CHECK(kReferenceSplit.total() == 15000);
}

TEST_CASE("emit then load round-trips") {
    TempDir dir;
    std::vector<ParallelRecord> records;
    for (int i = 0; i < 5; ++i) {
        records.push_back(make_record(tf2::testing::toy_fable(i), "trad " + std::to_string(i)));
    }
    const auto sink = dir / "out.jsonl";
    CHECK(emit_parallel_records(records, sink) == 5);
    const auto loaded = load_parallel_records(sink);
    CHECK(loaded.skipped.empty());
    CHECK(loaded.records == records);
    CHECK_FALSE(std::filesystem::exists(sink.string() + ".tmp"));
}

TEST_CASE("emit validates everything before writing") {
    TempDir dir;
    std::vector<ParallelRecord> records{make_record("a", "b"), make_record("c", "d")};
    records[1].prompt_hash = std::string(63, '0');
    const auto sink = dir / "out.jsonl";
    CHECK_THROWS_WITH_AS(emit_parallel_records(records, sink), doctest::Contains("record 1"),
                         tf2::ValidationError);
    CHECK_FALSE(std::filesystem::exists(sink));
}

TEST_CASE("loading records reports bad lines") {
    TempDir dir;
    const auto path = dir / "records.jsonl";
    auto bad = make_record("x", "y");
    bad.prompt_hash = "abc";
    tf2::testing::write_text(path, serialize_record(make_record("a", "b")) + "\n" +
                                       to_json(bad).dump() + "\n" + "not json\n");
    const auto loaded = load_parallel_records(path);
    CHECK(loaded.records.size() == 1);
    REQUIRE(loaded.skipped.size() == 2);
    CHECK(loaded.skipped[0].line == 2);
    CHECK(loaded.skipped[1].line == 3);
}

TEST_CASE("RecordWriter fails up front on an unwritable path") {
    CHECK_THROWS_AS(RecordWriter("/nonexistent-dir/x.jsonl"), tf2::IoError);
}

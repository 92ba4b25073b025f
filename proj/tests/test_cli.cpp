#include <doctest.h>

#include <sstream>

#include "support/fixtures.hpp"
#include "tf2/cli.hpp"
#include "tf2/corpus.hpp"

using tf2::testing::read_text;
using tf2::testing::TempDir;
using tf2::testing::write_text;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "tf2");
    args.push_back("--log-level");
    args.push_back("off");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = tf2::cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

void write_records(const std::filesystem::path& path, int n, const std::string& prefix = "RO ") {
    std::vector<tf2::corpus::ParallelRecord> records;
    for (int i = 0; i < n; ++i) {
        const auto f = tf2::testing::toy_fable(i);
        records.push_back(tf2::testing::make_record(f, prefix + f));
    }
    tf2::corpus::emit_parallel_records(records, path);
}

} // namespace

TEST_CASE("usage errors exit 1") {
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({"cost"}).code == 1);
    CHECK(run({"cost", "estimate"}).code == 1);
    const auto r = run({"cost", "estimate", "--json-errors"});
    CHECK(r.code == 1);
    CHECK(nlohmann::json::parse(r.err)["error"]["kind"] == "usage");
}

TEST_CASE("help exits 0") {
    const auto r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("translate") != std::string::npos);
}

TEST_CASE("cost commands") {
    auto r = run({"cost", "estimate", "--model", "gpt-4.1"});
    CHECK(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["total"] == "$13,500.00");

    r = run({"cost", "range", "--model", "gpt-o3-mini", "--reasoning", "1"});
    CHECK(r.code == 0);
    const auto range = nlohmann::json::parse(r.out);
    CHECK(range["low"] == "$8,910.00");
    CHECK(range["mid"] == "$13,365.00");
    CHECK(range["high"] == "$17,820.00");

    r = run({"cost", "sweep", "--model", "gpt-o3", "--multipliers", "0.5,3"});
    CHECK(r.code == 0);
    const auto sweep = nlohmann::json::parse(r.out);
    REQUIRE(sweep["rows"].size() == 2);
    CHECK(sweep["rows"][1]["high"] == "$61,200.00");

    r = run({"cost", "rental", "--hours", "32"});
    CHECK(nlohmann::json::parse(r.out)["total"] == "$345.60");

    r = run({"cost", "estimate", "--model", "nope", "--json-errors"});
    CHECK(r.code == 1);
    const auto err = nlohmann::json::parse(r.err);
    CHECK(err["error"]["kind"] == "validation");
    CHECK(r.out.empty());

    r = run({"cost", "estimate", "--model", "gpt-4.1", "--pricing", "/nonexistent.cfg"});
    CHECK(r.code == 1);
}

TEST_CASE("translate run with stubs") {
    TempDir dir;
    tf2::testing::write_fable_file(dir / "fables.jsonl", 5);
    write_text(dir / "echo.cfg", "base_url = stub://echo\nmodel = echo\n");
    write_text(dir / "down.cfg", "base_url = stub://fail?status=503\nmodel = m\nmax_retries = 0\n");

    auto r = run({"translate", "run", "--endpoint", (dir / "echo.cfg").string(), "--in",
                  (dir / "fables.jsonl").string(), "--out", (dir / "out.jsonl").string(),
                  "--concurrency", "2"});
    CHECK(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["succeeded"] == 5);
    CHECK(tf2::corpus::load_parallel_records(dir / "out.jsonl").records.size() == 5);

    r = run({"translate", "run", "--endpoint", (dir / "down.cfg").string(), "--in",
             (dir / "fables.jsonl").string(), "--out", (dir / "down.jsonl").string()});
    CHECK(r.code == 2);
    CHECK(tf2::testing::read_lines(dir / "down.jsonl.failures.jsonl").size() == 5);
}

TEST_CASE("validation failures have no side effects") {
    TempDir dir;
    tf2::testing::write_fable_file(dir / "fables.jsonl", 2);
    write_text(dir / "echo.cfg", "base_url = stub://echo\nmodel = echo\n");
    const auto r = run({"translate", "run", "--endpoint", (dir / "echo.cfg").string(), "--in",
                        (dir / "fables.jsonl").string(), "--out", (dir / "out.jsonl").string(),
                        "--temperature", "5"});
    CHECK(r.code == 1);
    CHECK_FALSE(std::filesystem::exists(dir / "out.jsonl"));
    CHECK_FALSE(std::filesystem::exists(dir / "out.jsonl.failures.jsonl"));

    const auto bad_endpoint = run({"translate", "run", "--endpoint", "no-such-profile", "--in",
                                   (dir / "fables.jsonl").string(), "--out",
                                   (dir / "x.jsonl").string()});
    CHECK(bad_endpoint.code == 1);
    CHECK_FALSE(std::filesystem::exists(dir / "x.jsonl"));
}

TEST_CASE("endpoint profiles from the global config") {
    TempDir dir;
    tf2::testing::write_fable_file(dir / "fables.jsonl", 3);
    write_text(dir / "tf2.cfg", "seed = 9\n[endpoint local]\nbase_url = stub://echo\nmodel = e\n");
    const auto r = run({"--config", (dir / "tf2.cfg").string(), "translate", "run", "--endpoint",
                        "local", "--in", (dir / "fables.jsonl").string(), "--out",
                        (dir / "o.jsonl").string()});
    CHECK(r.code == 0);
}

TEST_CASE("corpus commands") {
    TempDir dir;
    write_records(dir / "recs.jsonl", 10);
    auto r = run({"corpus", "validate", "--in", (dir / "recs.jsonl").string()});
    CHECK(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["valid"] == 10);

    write_text(dir / "bad.jsonl", read_text(dir / "recs.jsonl") + "{\"fable\": 1}\n");
    r = run({"corpus", "validate", "--in", (dir / "bad.jsonl").string()});
    CHECK(r.code == 1);
    CHECK(nlohmann::json::parse(r.out)["errors"][0]["line"] == 11);

    write_text(dir / "dups.jsonl", read_text(dir / "recs.jsonl") + read_text(dir / "recs.jsonl"));
    r = run({"corpus", "dedupe", "--in", (dir / "dups.jsonl").string(), "--out",
             (dir / "dedup.jsonl").string()});
    CHECK(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["removed"] == 10);
    CHECK(read_text(dir / "dedup.jsonl") == read_text(dir / "recs.jsonl"));

    r = run({"corpus", "split", "--in", (dir / "recs.jsonl").string(), "--train", "8", "--val",
             "1", "--test", "1", "--out-dir", (dir / "split").string(), "--seed", "3"});
    CHECK(r.code == 0);
    CHECK(tf2::testing::read_lines(dir / "split/train.jsonl").size() == 8);
    CHECK(tf2::testing::read_lines(dir / "split/test.jsonl").size() == 1);

    r = run({"corpus", "split", "--in", (dir / "recs.jsonl").string(), "--train", "8", "--val",
             "1", "--test", "2", "--out-dir", (dir / "split2").string()});
    CHECK(r.code == 1);
    CHECK_FALSE(std::filesystem::exists(dir / "split2/train.jsonl"));
}

TEST_CASE("bleu score") {
    TempDir dir;
    write_records(dir / "a.jsonl", 4);
    auto r = run({"bleu", "score", "--candidates", (dir / "a.jsonl").string(), "--references",
                  (dir / "a.jsonl").string()});
    CHECK(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["score"].get<double>() == doctest::Approx(1.0));

    write_records(dir / "b.jsonl", 3);
    r = run({"bleu", "score", "--candidates", (dir / "a.jsonl").string(), "--references",
             (dir / "b.jsonl").string()});
    CHECK(r.code == 1);
}

TEST_CASE("judge run with one and two judges") {
    TempDir dir;
    write_records(dir / "ref.jsonl", 8, "RO ");
    write_records(dir / "tuned.jsonl", 8, "TR ");
    write_text(dir / "j1.cfg", "base_url = stub://judge?scores=5,5,5,5,5\nmodel = j\n");
    write_text(dir / "j2.cfg", "base_url = stub://judge?scores=4,4,4,4,4\nmodel = k\n");

    auto r = run({"judge", "run", "--systems", (dir / "ref.jsonl").string(), "--judge",
                  (dir / "j1.cfg").string(), "--n", "5", "--out", (dir / "one.json").string()});
    CHECK(r.code == 0);
    const auto one = nlohmann::json::parse(read_text(dir / "one.json"));
    CHECK(one["evaluations"][0]["count"] == 5);
    CHECK(one["evaluations"][0]["system_name"] == "ref");

    r = run({"judge", "run", "--systems", (dir / "ref.jsonl").string(),
             (dir / "tuned.jsonl").string(), "--judge", (dir / "j1.cfg").string(),
             (dir / "j2.cfg").string(), "--n", "4", "--out", (dir / "two.json").string()});
    CHECK(r.code == 0);
    const auto two = nlohmann::json::parse(read_text(dir / "two.json"));
    CHECK(two["evaluations"].size() == 4);
    CHECK(two["bias_report"]["reference"] == "ref");
    CHECK(two["bias_report"]["ranking_stable"] == true);

    r = run({"judge", "run", "--systems", (dir / "ref.jsonl").string(), "--judge",
             (dir / "j1.cfg").string(), "--n", "50", "--out", (dir / "big.json").string()});
    CHECK(r.code == 1);
    CHECK_FALSE(std::filesystem::exists(dir / "big.json"));
}

TEST_CASE("bench run exit codes") {
    TempDir dir;
    write_records(dir / "refs.jsonl", 6);
    const std::string common = "sample_size = 3\ntemperatures = 0.0\nreferences = refs.jsonl\n"
                               "output_dir = out\n[judge j]\nbase_url = stub://judge\n";
    write_text(dir / "ok.cfg", common + "[system s]\nbase_url = stub://echo\nmodel = m\n");
    write_text(dir / "partial.cfg", common + "[system s]\nbase_url = stub://fail?status=500\n"
                                             "model = m\nmax_retries = 0\n");
    CHECK(run({"bench", "run", "--config", (dir / "ok.cfg").string()}).code == 0);
    CHECK(std::filesystem::exists(dir / "out/report.md"));
    CHECK(run({"bench", "run", "--config", (dir / "partial.cfg").string()}).code == 2);
}

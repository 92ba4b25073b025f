#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "tf2/corpus.hpp"

namespace tf2::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("tf2-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        lines.push_back(line);
    }
    return lines;
}

/// Short English fable number `i`, distinct for every i.
inline std::string toy_fable(int i) {
    static const char* animals[] = {"fox", "crow", "tortoise", "hare", "lion", "mouse", "ant",
                                    "grasshopper"};
    static const char* morals[] = {"patience wins", "pride comes before a fall",
                                   "kindness is repaid", "work before play"};
    std::ostringstream s;
    s << "Fable " << i << ": a clever " << animals[i % 8] << " met a tired "
      << animals[(i + 3) % 8] << " near the river. They talked until sunset, and the "
      << animals[i % 8] << " learned that " << morals[i % 4] << ".";
    return s.str();
}

/// A fable JSONL file with `n` toy fables.
inline void write_fable_file(const std::filesystem::path& path, int n) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    for (int i = 0; i < n; ++i) {
        out << nlohmann::json{{"fable", toy_fable(i)}}.dump() << '\n';
    }
}

/// A schema-valid record whose prompt hash is derived from `fable`.
inline corpus::ParallelRecord make_record(const std::string& fable, const std::string& translation,
                                          std::int64_t timestamp = 1'700'000'000) {
    corpus::ParallelRecord r;
    r.fable = fable;
    r.translated_fable = translation;
    r.prompt_hash = corpus::compute_prompt_hash(fable);
    r.llm_name = "stub-model";
    r.translation_model = "stub-model";
    r.generation_timestamp = timestamp;
    return r;
}

} // namespace tf2::testing

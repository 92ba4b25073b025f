#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace tf2::corpus {

using RecordId = std::uint64_t;

/// An English source story. `id` is its 0-based position among the valid
/// lines of the input file; it orders outputs but is never serialized.
struct SourceFable {
    RecordId id = 0;
    std::string text;

    bool operator==(const SourceFable&) const = default;
};

inline constexpr std::string_view kStageTranslation = "translation";
inline constexpr std::string_view kSourceLanguage = "English";
inline constexpr std::string_view kTargetLanguage = "Romanian";

/// One line of the parallel corpus. Field order here is the serialized
/// order.
struct ParallelRecord {
    std::string fable;
    std::string translated_fable;
    std::string pipeline_stage{kStageTranslation};
    std::string source_lang{kSourceLanguage};
    std::string target_lang{kTargetLanguage};
    std::string prompt_hash;
    std::string llm_name;
    std::string translation_model;
    std::int64_t generation_timestamp = 0;

    bool operator==(const ParallelRecord&) const = default;
};

inline constexpr std::size_t kRecordFieldCount = 9;

/// A line that could not be turned into a value. Line numbers are 1-based.
struct LineError {
    std::size_t line = 0;
    std::string message;
};

/// Lazily reads SourceFables from a JSONL file. Blank lines are ignored;
/// any other line that is not a JSON object with a non-empty string
/// "fable" field is skipped and recorded.
class FableReader {
public:
    explicit FableReader(const std::filesystem::path& path,
                         std::optional<std::size_t> limit = std::nullopt);

    std::optional<SourceFable> next();

    const std::vector<LineError>& skipped() const noexcept { return skipped_; }

private:
    std::ifstream in_;
    std::optional<std::size_t> limit_;
    std::size_t line_no_ = 0;
    RecordId next_id_ = 0;
    std::vector<LineError> skipped_;
};

struct LoadedFables {
    std::vector<SourceFable> fables;
    std::vector<LineError> skipped;
};

/// Throws IoError when the file cannot be opened.
LoadedFables load_source_corpus(const std::filesystem::path& path,
                                std::optional<std::size_t> limit = std::nullopt);

/// Lowercase hex SHA-256 of the UTF-8 bytes of `prompt`.
std::string compute_prompt_hash(std::string_view prompt);

/// True iff `s` is exactly 64 lowercase hex characters.
bool is_hex_digest(std::string_view s) noexcept;

/// Human-readable list of violated record invariants; empty when valid.
std::vector<std::string> record_violations(const ParallelRecord& record);

/// Throws ValidationError listing every violation.
void validate_record(const ParallelRecord& record);

nlohmann::ordered_json to_json(const ParallelRecord& record);

/// Throws ValidationError naming the first missing or mistyped field, then
/// runs validate_record.
ParallelRecord record_from_json(const nlohmann::json& j);

/// Compact single-line JSON in schema field order, UTF-8, no trailing
/// newline. Validates first.
std::string serialize_record(const ParallelRecord& record);

struct LoadedRecords {
    std::vector<ParallelRecord> records;
    std::vector<LineError> skipped;
};

LoadedRecords load_parallel_records(const std::filesystem::path& path);

struct DedupeResult {
    std::vector<ParallelRecord> records;
    std::size_t removed = 0;
};

/// Keeps the first record for each prompt_hash, preserving order.
DedupeResult dedupe(std::vector<ParallelRecord> records);

struct SplitCounts {
    std::size_t train = 0;
    std::size_t validation = 0;
    std::size_t test = 0;

    std::size_t total() const noexcept { return train + validation + test; }
};

inline constexpr SplitCounts kReferenceSplit{12000, 1500, 1500};

template <typename T>
struct CorpusSplit {
    std::vector<T> train;
    std::vector<T> validation;
    std::vector<T> test;
    std::uint64_t seed = 0;
};

/// Seeded uniform shuffle followed by contiguous slicing.
/// Throws ValidationError when counts do not sum to the input size.
template <typename T>
CorpusSplit<T> split_corpus(std::vector<T> items, SplitCounts counts, std::uint64_t seed);

/// Appends validated records to a JSONL file, one per line. The file is
/// opened (and truncated) on construction so unwritable sinks fail before
/// any work starts. Not thread-safe: one writer per sink.
class RecordWriter {
public:
    explicit RecordWriter(const std::filesystem::path& path);

    void write(const ParallelRecord& record);
    void flush();
    std::size_t written() const noexcept { return written_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t written_ = 0;
};

/// Validates every record, then writes them all. If any record is invalid
/// nothing is written and a ValidationError names the record index and
/// violation. The sink is replaced atomically.
std::size_t emit_parallel_records(std::span<const ParallelRecord> records,
                                  const std::filesystem::path& sink);

/// Writes `contents` to `path` through a temporary sibling and a rename.
void write_file_atomically(const std::filesystem::path& path, std::string_view contents);

} // namespace tf2::corpus

#include "tf2/corpus_split.ipp"

#include "tf2/corpus.hpp"

#include <array>
#include <sstream>
#include <unordered_set>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "tf2/error.hpp"

namespace tf2::corpus {
namespace {

bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

constexpr std::array<const char*, 8> kStringFields = {
    "fable",      "translated_fable", "pipeline_stage",   "source_lang",
    "target_lang", "prompt_hash",     "llm_name",         "translation_model",
};

std::string dump_line(const nlohmann::ordered_json& j) {
    try {
        return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
    } catch (const nlohmann::json::type_error& e) {
        throw ValidationError(std::string("record is not valid UTF-8: ") + e.what());
    }
}

} // namespace

FableReader::FableReader(const std::filesystem::path& path, std::optional<std::size_t> limit)
    : in_(path, std::ios::binary), limit_(limit) {
    if (!in_) {
        throw IoError("cannot open source corpus " + path.string());
    }
}

std::optional<SourceFable> FableReader::next() {
    if (limit_ && next_id_ >= *limit_) {
        return std::nullopt;
    }
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        strip_cr(line);
        if (is_blank(line)) {
            continue;
        }
        std::string problem;
        try {
            const auto j = nlohmann::json::parse(line);
            if (!j.is_object()) {
                problem = "line is not a JSON object";
            } else if (!j.contains("fable")) {
                problem = "missing \"fable\" field";
            } else if (!j["fable"].is_string()) {
                problem = "\"fable\" is not a string";
            } else if (is_blank(j["fable"].get_ref<const std::string&>())) {
                problem = "\"fable\" is empty";
            } else {
                return SourceFable{next_id_++, j["fable"].get<std::string>()};
            }
        } catch (const nlohmann::json::parse_error& e) {
            problem = std::string("malformed JSON: ") + e.what();
        }
        spdlog::warn("skipping line {}: {}", line_no_, problem);
        skipped_.push_back({line_no_, std::move(problem)});
    }
    return std::nullopt;
}

LoadedFables load_source_corpus(const std::filesystem::path& path,
                                std::optional<std::size_t> limit) {
    FableReader reader(path, limit);
    LoadedFables out;
    while (auto fable = reader.next()) {
        out.fables.push_back(std::move(*fable));
    }
    out.skipped = reader.skipped();
    return out;
}

std::string compute_prompt_hash(std::string_view prompt) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(prompt.data(), prompt.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0x0f]);
    }
    return out;
}

bool is_hex_digest(std::string_view s) noexcept {
    if (s.size() != 64) {
        return false;
    }
    for (char c : s) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
            return false;
        }
    }
    return true;
}

std::vector<std::string> record_violations(const ParallelRecord& r) {
    std::vector<std::string> v;
    auto required = [&v](const std::string& value, const char* name) {
        if (is_blank(value)) {
            v.push_back(std::string(name) + ": missing or empty");
        }
    };
    required(r.fable, "fable");
    required(r.translated_fable, "translated_fable");
    required(r.pipeline_stage, "pipeline_stage");
    required(r.source_lang, "source_lang");
    required(r.target_lang, "target_lang");
    required(r.llm_name, "llm_name");
    required(r.translation_model, "translation_model");
    if (!is_hex_digest(r.prompt_hash)) {
        v.push_back("prompt_hash: expected 64 lowercase hex characters, got " +
                    std::to_string(r.prompt_hash.size()) + " characters");
    }
    if (r.generation_timestamp <= 0) {
        v.push_back("generation_timestamp: must be a positive Unix time, got " +
                    std::to_string(r.generation_timestamp));
    }
    return v;
}

void validate_record(const ParallelRecord& record) {
    const auto v = record_violations(record);
    if (v.empty()) {
        return;
    }
    std::string msg = "invalid record: ";
    for (std::size_t i = 0; i < v.size(); ++i) {
        msg += (i ? "; " : "") + v[i];
    }
    throw ValidationError(msg);
}

nlohmann::ordered_json to_json(const ParallelRecord& r) {
    nlohmann::ordered_json j;
    j["fable"] = r.fable;
    j["translated_fable"] = r.translated_fable;
    j["pipeline_stage"] = r.pipeline_stage;
    j["source_lang"] = r.source_lang;
    j["target_lang"] = r.target_lang;
    j["prompt_hash"] = r.prompt_hash;
    j["llm_name"] = r.llm_name;
    j["translation_model"] = r.translation_model;
    j["generation_timestamp"] = r.generation_timestamp;
    return j;
}

ParallelRecord record_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ValidationError("record is not a JSON object");
    }
    for (const char* name : kStringFields) {
        if (!j.contains(name)) {
            throw ValidationError(std::string("missing field \"") + name + "\"");
        }
        if (!j[name].is_string()) {
            throw ValidationError(std::string("field \"") + name + "\" must be a string");
        }
    }
    if (!j.contains("generation_timestamp")) {
        throw ValidationError("missing field \"generation_timestamp\"");
    }
    if (!j["generation_timestamp"].is_number_integer()) {
        throw ValidationError("field \"generation_timestamp\" must be an integer");
    }
    ParallelRecord r;
    r.fable = j["fable"].get<std::string>();
    r.translated_fable = j["translated_fable"].get<std::string>();
    r.pipeline_stage = j["pipeline_stage"].get<std::string>();
    r.source_lang = j["source_lang"].get<std::string>();
    r.target_lang = j["target_lang"].get<std::string>();
    r.prompt_hash = j["prompt_hash"].get<std::string>();
    r.llm_name = j["llm_name"].get<std::string>();
    r.translation_model = j["translation_model"].get<std::string>();
    r.generation_timestamp = j["generation_timestamp"].get<std::int64_t>();
    validate_record(r);
    return r;
}

std::string serialize_record(const ParallelRecord& record) {
    validate_record(record);
    return dump_line(to_json(record));
}

LoadedRecords load_parallel_records(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open record file " + path.string());
    }
    LoadedRecords out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (is_blank(line)) {
            continue;
        }
        try {
            out.records.push_back(record_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            out.skipped.push_back({line_no, std::string("malformed JSON: ") + e.what()});
        } catch (const ValidationError& e) {
            out.skipped.push_back({line_no, e.what()});
        }
    }
    return out;
}

DedupeResult dedupe(std::vector<ParallelRecord> records) {
    DedupeResult out;
    std::unordered_set<std::string> seen;
    out.records.reserve(records.size());
    for (auto& r : records) {
        if (seen.insert(r.prompt_hash).second) {
            out.records.push_back(std::move(r));
        } else {
            ++out.removed;
        }
    }
    return out;
}

RecordWriter::RecordWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
}

void RecordWriter::write(const ParallelRecord& record) {
    const std::string line = serialize_record(record) + "\n";
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    if (!out_) {
        throw IoError("write failed on " + path_.string());
    }
    ++written_;
}

void RecordWriter::flush() {
    out_.flush();
    if (!out_) {
        throw IoError("flush failed on " + path_.string());
    }
}

std::size_t emit_parallel_records(std::span<const ParallelRecord> records,
                                  const std::filesystem::path& sink) {
    std::string body;
    for (std::size_t i = 0; i < records.size(); ++i) {
        try {
            body += serialize_record(records[i]);
        } catch (const ValidationError& e) {
            throw ValidationError("record " + std::to_string(i) + ": " + e.what());
        }
        body += '\n';
    }
    write_file_atomically(sink, body);
    return records.size();
}

void write_file_atomically(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + tmp.string() + " for writing");
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError("write failed on " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move output into place at " + path.string());
    }
}

} // namespace tf2::corpus

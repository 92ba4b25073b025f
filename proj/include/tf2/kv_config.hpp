#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tf2 {

/// One `[kind name]` block (or the unnamed leading block) of a key-value
/// config file.
///
/// File syntax:
///
///     # comment
///     key = value            # trailing comment
///     quoted = "value # kept"
///
///     [endpoint judge]
///     base_url = http://localhost:8000/v1
///
/// Keys are case-sensitive. A key may appear once per section.
struct ConfigSection {
    std::string kind;
    std::string name;
    std::map<std::string, std::string> values;
    int line = 0;

    bool has(const std::string& key) const { return values.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;
    std::string require(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// Comma-separated list; empty items are dropped.
    std::vector<std::string> get_list(const std::string& key) const;

    std::string label() const;
};

struct KvConfig {
    std::string origin;
    ConfigSection global;
    std::vector<ConfigSection> sections;

    static KvConfig parse(const std::string& text, const std::string& origin = "<string>");
    static KvConfig load(const std::filesystem::path& path);

    const ConfigSection* find(const std::string& kind, const std::string& name) const;
    std::vector<const ConfigSection*> all(const std::string& kind) const;
};

double parse_double(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);
bool parse_bool(const std::string& text, const std::string& what);

} // namespace tf2

#include "tf2/kv_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "tf2/error.hpp"

namespace tf2 {
namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Drops a trailing comment that is not inside double quotes.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') {
            quoted = !quoted;
        } else if (s[i] == '#' && !quoted) {
            return s.substr(0, i);
        }
    }
    return s;
}

std::string unquote(const std::string& v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
        return v.substr(1, v.size() - 2);
    }
    return v;
}

} // namespace

std::optional<std::string> ConfigSection::get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::string ConfigSection::require(const std::string& key) const {
    auto v = get(key);
    if (!v) {
        throw ValidationError(label() + ": missing required key \"" + key + "\"");
    }
    return *v;
}

std::string ConfigSection::get_or(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

double ConfigSection::get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    return v ? parse_double(*v, label() + "." + key) : fallback;
}

long long ConfigSection::get_int(const std::string& key, long long fallback) const {
    auto v = get(key);
    return v ? parse_int(*v, label() + "." + key) : fallback;
}

bool ConfigSection::get_bool(const std::string& key, bool fallback) const {
    auto v = get(key);
    return v ? parse_bool(*v, label() + "." + key) : fallback;
}

std::vector<std::string> ConfigSection::get_list(const std::string& key) const {
    std::vector<std::string> out;
    auto v = get(key);
    if (!v) {
        return out;
    }
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

std::string ConfigSection::label() const {
    if (kind.empty()) {
        return "[global]";
    }
    return name.empty() ? "[" + kind + "]" : "[" + kind + " " + name + "]";
}

KvConfig KvConfig::parse(const std::string& text, const std::string& origin) {
    KvConfig cfg;
    cfg.origin = origin;
    ConfigSection* current = &cfg.global;

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) {
            continue;
        }
        const auto where = origin + ":" + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ValidationError(where + ": unterminated section header");
            }
            const std::string header = trim(std::string_view(line).substr(1, line.size() - 2));
            if (header.empty()) {
                throw ValidationError(where + ": empty section header");
            }
            ConfigSection section;
            const auto sp = header.find_first_of(" \t");
            section.kind = header.substr(0, sp);
            section.name = sp == std::string::npos ? "" : trim(header.substr(sp));
            section.line = line_no;
            cfg.sections.push_back(std::move(section));
            current = &cfg.sections.back();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(where + ": expected key = value");
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = unquote(trim(std::string_view(line).substr(eq + 1)));
        if (key.empty()) {
            throw ValidationError(where + ": empty key");
        }
        if (!current->values.emplace(key, value).second) {
            throw ValidationError(where + ": duplicate key \"" + key + "\" in " + current->label());
        }
    }
    return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open config file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

const ConfigSection* KvConfig::find(const std::string& kind, const std::string& name) const {
    for (const auto& s : sections) {
        if (s.kind == kind && s.name == name) {
            return &s;
        }
    }
    return nullptr;
}

std::vector<const ConfigSection*> KvConfig::all(const std::string& kind) const {
    std::vector<const ConfigSection*> out;
    for (const auto& s : sections) {
        if (s.kind == kind) {
            out.push_back(&s);
        }
    }
    return out;
}

double parse_double(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
        throw ValidationError(what + ": not a number: \"" + text + "\"");
    }
    return value;
}

long long parse_int(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
        throw ValidationError(what + ": not an integer: \"" + text + "\"");
    }
    return value;
}

bool parse_bool(const std::string& text, const std::string& what) {
    std::string t = trim(text);
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t == "true" || t == "yes" || t == "1" || t == "on") {
        return true;
    }
    if (t == "false" || t == "no" || t == "0" || t == "off") {
        return false;
    }
    throw ValidationError(what + ": not a boolean: \"" + text + "\"");
}

} // namespace tf2

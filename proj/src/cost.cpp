#include "tf2/cost.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "tf2/error.hpp"
#include "tf2/kv_config.hpp"

namespace tf2::cost {
namespace {

using boost::multiprecision::cpp_int;

const Rational kMillion = 1'000'000;

Rational tokens(std::uint64_t n) {
    return Rational(cpp_int(n));
}

} // namespace

Rational parse_decimal(std::string_view text) {
    std::string t(text);
    t.erase(0, t.find_first_not_of(" \t"));
    t.erase(t.find_last_not_of(" \t") + 1);
    bool negative = false;
    std::size_t i = 0;
    if (!t.empty() && (t[0] == '-' || t[0] == '+')) {
        negative = t[0] == '-';
        i = 1;
    }
    cpp_int numerator = 0;
    cpp_int denominator = 1;
    bool seen_digit = false;
    bool seen_dot = false;
    for (; i < t.size(); ++i) {
        const char c = t[i];
        if (c >= '0' && c <= '9') {
            numerator = numerator * 10 + (c - '0');
            if (seen_dot) {
                denominator *= 10;
            }
            seen_digit = true;
        } else if (c == '.' && !seen_dot) {
            seen_dot = true;
        } else {
            seen_digit = false;
            break;
        }
    }
    if (!seen_digit) {
        throw ValidationError("not a decimal number: \"" + std::string(text) + "\"");
    }
    Rational r(numerator, denominator);
    return negative ? Rational(-r) : r;
}

std::string format_decimal(const Rational& value, int digits) {
    cpp_int scale = 1;
    for (int i = 0; i < digits; ++i) {
        scale *= 10;
    }
    const bool negative = value < 0;
    const Rational scaled = (negative ? Rational(-value) : value) * scale;
    const cpp_int num = boost::multiprecision::numerator(scaled);
    const cpp_int den = boost::multiprecision::denominator(scaled);
    const cpp_int rounded = (2 * num + den) / (2 * den);

    std::string digits_str = rounded.str();
    if (digits > 0) {
        if (digits_str.size() <= static_cast<std::size_t>(digits)) {
            digits_str.insert(0, static_cast<std::size_t>(digits) + 1 - digits_str.size(), '0');
        }
        digits_str.insert(digits_str.size() - static_cast<std::size_t>(digits), ".");
    }
    if (negative && rounded != 0) {
        digits_str.insert(0, "-");
    }
    return digits_str;
}

std::string format_dollars(const Rational& value) {
    std::string plain = format_decimal(value, 2);
    const bool negative = !plain.empty() && plain[0] == '-';
    if (negative) {
        plain.erase(0, 1);
    }
    const auto dot = plain.find('.');
    std::string int_part = plain.substr(0, dot);
    std::string grouped;
    for (std::size_t i = 0; i < int_part.size(); ++i) {
        if (i > 0 && (int_part.size() - i) % 3 == 0) {
            grouped.push_back(',');
        }
        grouped.push_back(int_part[i]);
    }
    return std::string(negative ? "-$" : "$") + grouped + plain.substr(dot);
}

double to_double(const Rational& value) {
    return value.convert_to<double>();
}

void PricingEntry::validate() const {
    if (model.empty()) {
        throw ValidationError("pricing entry has no model name");
    }
    if (price_in < 0 || price_out < 0) {
        throw ValidationError("pricing for " + model + ": prices must be non-negative");
    }
}

const PricingEntry& PricingTable::find(std::string_view model) const {
    for (const auto& e : entries) {
        if (e.model == model) {
            return e;
        }
    }
    std::string known;
    for (const auto& e : entries) {
        known += (known.empty() ? "" : ", ") + e.model;
    }
    throw ValidationError("no pricing for model \"" + std::string(model) + "\" (known: " + known +
                          ")");
}

PricingTable PricingTable::parse(const std::string& text, const std::string& origin) {
    PricingTable table;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        std::istringstream fields(line);
        std::string model, p_in, p_out, reasoning;
        if (!(fields >> model >> p_in >> p_out >> reasoning)) {
            throw ValidationError(origin + ":" + std::to_string(line_no) +
                                  ": expected model price_in price_out reasoning_as_output");
        }
        const auto where = origin + ":" + std::to_string(line_no);
        PricingEntry e;
        e.model = model;
        try {
            e.price_in = parse_decimal(p_in);
            e.price_out = parse_decimal(p_out);
            e.bills_reasoning_as_output = parse_bool(reasoning, "reasoning_as_output");
        } catch (const ValidationError& err) {
            throw ValidationError(where + ": " + err.what());
        }
        std::string notes;
        std::getline(fields, notes);
        const auto nb = notes.find_first_not_of(" \t");
        e.notes = nb == std::string::npos ? "" : notes.substr(nb);
        while (!e.notes.empty() && (e.notes.back() == '\r' || e.notes.back() == ' ')) {
            e.notes.pop_back();
        }
        try {
            e.validate();
        } catch (const ValidationError& err) {
            throw ValidationError(where + ": " + err.what());
        }
        if (!seen.insert(e.model).second) {
            throw ValidationError(where + ": duplicate model \"" + e.model + "\"");
        }
        table.entries.push_back(std::move(e));
    }
    return table;
}

PricingTable PricingTable::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open pricing file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

PricingTable PricingTable::defaults() {
    return parse(R"(# model         price_in  price_out  reasoning_as_output  notes
gpt-4.1         2.00      8.00       no    Standard API pricing (Aug 2025)
gpt-4.1-mini    0.40      1.60       no    Lower capacity, same billing rules
gpt-o3          2.00      8.00       yes   Reasoning tokens billed as output
gpt-o3-mini     1.10      4.40       yes   Same reasoning token policy
deepl-api-pro   100.00    100.00     no    Per-character tariff expressed per token
)",
                 "<defaults>");
}

std::string PricingTable::serialize() const {
    std::ostringstream os;
    os << "# model  price_in  price_out  reasoning_as_output  notes\n";
    for (const auto& e : entries) {
        os << e.model << ' ' << format_decimal(e.price_in, 2) << ' '
           << format_decimal(e.price_out, 2) << ' '
           << (e.bills_reasoning_as_output ? "yes" : "no");
        if (!e.notes.empty()) {
            os << ' ' << e.notes;
        }
        os << '\n';
    }
    return os.str();
}

nlohmann::ordered_json CostEstimate::to_json() const {
    nlohmann::ordered_json j;
    j["total_dollars"] = format_decimal(total_dollars, 2);
    j["input_dollars"] = format_decimal(input_dollars, 2);
    j["output_dollars"] = format_decimal(output_dollars, 2);
    j["tokens_in"] = format_decimal(tokens_in, 0);
    j["tokens_out_visible"] = format_decimal(tokens_out_visible, 0);
    j["tokens_reasoning"] = format_decimal(tokens_reasoning, 0);
    return j;
}

CostEstimate estimate_cost(const CostScenario& scenario, const PricingEntry& pricing) {
    pricing.validate();
    if (scenario.reasoning_multiplier < 0) {
        throw ValidationError("reasoning multiplier must be non-negative");
    }
    CostEstimate e;
    e.tokens_in = tokens(scenario.n_items) * tokens(scenario.tokens_in_per_item);
    e.tokens_out_visible = tokens(scenario.n_items) * tokens(scenario.tokens_out_per_item);
    e.tokens_reasoning = pricing.bills_reasoning_as_output
                             ? Rational(scenario.reasoning_multiplier * e.tokens_out_visible)
                             : Rational(0);
    e.input_dollars = e.tokens_in / kMillion * pricing.price_in;
    e.output_dollars = (e.tokens_out_visible + e.tokens_reasoning) / kMillion * pricing.price_out;
    e.total_dollars = e.input_dollars + e.output_dollars;
    return e;
}

RangeEstimate range_estimate(const PricingEntry& pricing, std::uint64_t n_items, TokenPair low,
                             TokenPair mid, TokenPair high, const Rational& multiplier) {
    if (!(low.in <= mid.in && mid.in <= high.in && low.out <= mid.out && mid.out <= high.out)) {
        throw ValidationError("token scenarios must satisfy low <= mid <= high for input and output");
    }
    auto at = [&](TokenPair t) {
        return estimate_cost({n_items, t.in, t.out, multiplier}, pricing);
    };
    return {at(low), at(mid), at(high)};
}

std::vector<SweepRow> sensitivity_sweep(const PricingEntry& pricing, std::uint64_t n_items,
                                        TokenPair low, TokenPair mid, TokenPair high,
                                        std::span<const Rational> multipliers) {
    if (multipliers.empty()) {
        throw ValidationError("sensitivity sweep needs at least one multiplier");
    }
    std::vector<SweepRow> rows;
    rows.reserve(multipliers.size());
    for (const auto& m : multipliers) {
        rows.push_back({m, range_estimate(pricing, n_items, low, mid, high, m)});
    }
    return rows;
}

std::vector<Rational> default_reasoning_multipliers() {
    return {Rational(1, 2), Rational(1), Rational(3)};
}

Rational rental_cost(const Rational& cluster_hours, const Rational& rate_per_cluster_hour) {
    if (cluster_hours < 0) {
        throw ValidationError("cluster hours must be non-negative");
    }
    if (rate_per_cluster_hour < 0) {
        throw ValidationError("cluster-hour rate must be non-negative");
    }
    return cluster_hours * rate_per_cluster_hour;
}

} // namespace tf2::cost

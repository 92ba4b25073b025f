#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

namespace tf2::cost {

/// Exact arithmetic for prices, token totals and dollars. Published cost
/// figures are exact products of decimal prices and integer token counts,
/// so nothing here goes through binary floating point.
using Rational = boost::multiprecision::cpp_rational;

/// Parses "12", "0.40", "10.80" exactly. Throws ValidationError otherwise.
Rational parse_decimal(std::string_view text);

/// Half-up rounding to `digits` decimals, e.g. "13500.00".
std::string format_decimal(const Rational& value, int digits);

/// "$13,500.00"
std::string format_dollars(const Rational& value);

double to_double(const Rational& value);

struct PricingEntry {
    std::string model;
    /// Dollars per million input tokens.
    Rational price_in;
    /// Dollars per million output tokens.
    Rational price_out;
    bool bills_reasoning_as_output = false;
    std::string notes;

    void validate() const;
};

/// Pricing file format, one model per line, whitespace-separated:
///
///     # model        price_in  price_out  reasoning_as_output  notes...
///     gpt-4.1        2.00      8.00       no                   Standard API pricing
///
/// Prices are dollars per million tokens. Lines starting with '#' and
/// blank lines are ignored. Model names are unique and case-sensitive.
struct PricingTable {
    std::vector<PricingEntry> entries;

    /// Throws ValidationError listing known models when absent.
    const PricingEntry& find(std::string_view model) const;

    static PricingTable parse(const std::string& text, const std::string& origin = "<string>");
    static PricingTable load(const std::filesystem::path& path);

    /// Published Aug-2025 rates. The DeepL row carries a per-token
    /// equivalent of its per-character tariff.
    static PricingTable defaults();

    std::string serialize() const;
};

struct CostScenario {
    std::uint64_t n_items = 0;
    std::uint64_t tokens_in_per_item = 0;
    std::uint64_t tokens_out_per_item = 0;
    /// Hidden reasoning tokens as a multiple of visible output tokens.
    Rational reasoning_multiplier = 0;
};

struct CostEstimate {
    Rational total_dollars;
    Rational tokens_in;
    Rational tokens_out_visible;
    Rational tokens_reasoning;
    Rational input_dollars;
    Rational output_dollars;

    nlohmann::ordered_json to_json() const;
};

/// total = T_in/1e6 * P_in + (T_out + T_reason)/1e6 * P_out, where
/// T_reason = multiplier * T_out for models that bill reasoning as output
/// and 0 otherwise.
CostEstimate estimate_cost(const CostScenario& scenario, const PricingEntry& pricing);

struct TokenPair {
    std::uint64_t in = 0;
    std::uint64_t out = 0;
};

inline constexpr TokenPair kLowTokens{300, 300};
inline constexpr TokenPair kMidTokens{450, 450};
inline constexpr TokenPair kHighTokens{600, 600};
inline constexpr std::uint64_t kCorpusItems = 3'000'000;

struct RangeEstimate {
    CostEstimate low;
    CostEstimate mid;
    CostEstimate high;
};

/// Throws ValidationError unless low <= mid <= high componentwise.
RangeEstimate range_estimate(const PricingEntry& pricing, std::uint64_t n_items, TokenPair low,
                             TokenPair mid, TokenPair high, const Rational& multiplier);

struct SweepRow {
    Rational multiplier;
    RangeEstimate range;
};

std::vector<SweepRow> sensitivity_sweep(const PricingEntry& pricing, std::uint64_t n_items,
                                        TokenPair low, TokenPair mid, TokenPair high,
                                        std::span<const Rational> multipliers);

/// The low / medium / high reasoning settings: 0.5, 1, 3.
std::vector<Rational> default_reasoning_multipliers();

/// Dollars per cluster-hour of the rented 8-GPU node.
inline const Rational kClusterHourRate = Rational(1080, 100);

/// rate * hours. Throws ValidationError for negative inputs.
Rational rental_cost(const Rational& cluster_hours, const Rational& rate_per_cluster_hour = kClusterHourRate);

} // namespace tf2::cost

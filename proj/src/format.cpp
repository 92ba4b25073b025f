#include "tf2/format.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include "tf2/error.hpp"

namespace tf2 {

std::string format_fixed(double value, int digits) {
    if (digits < 0) {
        throw ValidationError("format_fixed: digits must be non-negative");
    }
    if (!std::isfinite(value)) {
        return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
    }
    std::array<char, 512> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), std::fabs(value),
                                   std::chars_format::fixed);
    if (ec != std::errc{}) {
        throw Error("format_fixed: conversion failed");
    }
    std::string text(buf.data(), end);

    std::string int_part = text;
    std::string frac_part;
    if (const auto dot = text.find('.'); dot != std::string::npos) {
        int_part = text.substr(0, dot);
        frac_part = text.substr(dot + 1);
    }

    const bool round_up = frac_part.size() > static_cast<std::size_t>(digits) &&
                          frac_part[static_cast<std::size_t>(digits)] >= '5';
    frac_part.resize(static_cast<std::size_t>(digits), '0');

    std::string all = int_part + frac_part;
    if (round_up) {
        int i = static_cast<int>(all.size()) - 1;
        for (; i >= 0; --i) {
            if (all[static_cast<std::size_t>(i)] == '9') {
                all[static_cast<std::size_t>(i)] = '0';
            } else {
                ++all[static_cast<std::size_t>(i)];
                break;
            }
        }
        if (i < 0) {
            all.insert(all.begin(), '1');
        }
    }

    const auto int_len = all.size() - static_cast<std::size_t>(digits);
    std::string out = all.substr(0, int_len);
    if (digits > 0) {
        out += '.';
        out += all.substr(int_len);
    }
    const bool is_zero = out.find_first_not_of("0.") == std::string::npos;
    if (std::signbit(value) && !is_zero) {
        out.insert(out.begin(), '-');
    }
    return out;
}

double round_decimal(double value, int digits) {
    return std::strtod(format_fixed(value, digits).c_str(), nullptr);
}

} // namespace tf2

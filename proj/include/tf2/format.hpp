#pragma once

#include <string>

namespace tf2 {

/// Fixed-point rendering with `digits` decimals, rounding half away from
/// zero on the shortest round-trip decimal form of `value`. 4.835 renders
/// as "4.84" even though the nearest double is slightly below 4.835,
/// which is how hand-computed tables round.
std::string format_fixed(double value, int digits);

/// `value` rounded the same way, parsed back to double.
double round_decimal(double value, int digits);

} // namespace tf2

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>

#include "tf2/error.hpp"
#include "tf2/format.hpp"

using tf2::format_fixed;

TEST_CASE("rounds half up on the shortest decimal form") {
    // The double nearest (4.82 + 4.85) / 2 sits just below 4.835.
    const double mean = (4.82 + 4.85) / 2;
    char digits[32];
    std::snprintf(digits, sizeof digits, "%.20f", mean);
    CHECK(std::string(digits).rfind("4.8349", 0) == 0);
    CHECK(format_fixed(mean, 2) == "4.84");
    CHECK(format_fixed(4.92 - 4.82, 2) == "0.10");
    CHECK(format_fixed(0.125, 2) == "0.13");
    CHECK(format_fixed(2.0, 2) == "2.00");
    CHECK(format_fixed(0.0926, 4) == "0.0926");
}

TEST_CASE("carries through nines and keeps sign") {
    CHECK(format_fixed(9.995, 2) == "10.00");
    CHECK(format_fixed(-1.005, 2) == "-1.01");
    CHECK(format_fixed(-0.001, 2) == "0.00");
    CHECK(format_fixed(3.7, 0) == "4");
}

TEST_CASE("non-finite values and bad digit counts") {
    CHECK(format_fixed(std::nan(""), 2) == "nan");
    CHECK(format_fixed(-INFINITY, 2) == "-inf");
    CHECK_THROWS_AS(format_fixed(1.0, -1), tf2::ValidationError);
}

TEST_CASE("round_decimal parses the rendered text back") {
    CHECK(tf2::round_decimal(4.8349999, 2) == 4.83);
    CHECK(tf2::round_decimal(4.835, 2) == 4.84);
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace tf2 {

inline constexpr std::uint64_t kDefaultSeed = 42;

/// Seeded generator used for every stochastic choice (splits, samples,
/// presentation order). std::mt19937_64 output is fixed by the standard;
/// the bounded draw and shuffle are implemented here rather than through
/// std::uniform_int_distribution / std::shuffle, whose results differ
/// between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    /// Uniform real in [0, 1).
    double unit();

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        shuffle(std::span<T>(items));
    }

    /// `count` distinct indices drawn uniformly from [0, population),
    /// returned in draw order (partial Fisher-Yates).
    std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count);

private:
    std::mt19937_64 engine_;
};

/// Stateless 64-bit mixer; used for jitter that must not consume the
/// shared generator.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

} // namespace tf2

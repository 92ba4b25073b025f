#pragma once

#include <utility>

#include "tf2/error.hpp"
#include "tf2/rng.hpp"

namespace tf2::corpus {

template <typename T>
CorpusSplit<T> split_corpus(std::vector<T> items, SplitCounts counts, std::uint64_t seed) {
    if (counts.total() != items.size()) {
        throw ValidationError("split counts sum to " + std::to_string(counts.total()) +
                              " but the corpus has " + std::to_string(items.size()) +
                              " records");
    }
    Rng rng(seed);
    rng.shuffle(items);

    CorpusSplit<T> out;
    out.seed = seed;
    auto first = std::make_move_iterator(items.begin());
    out.train.assign(first, first + static_cast<std::ptrdiff_t>(counts.train));
    first += static_cast<std::ptrdiff_t>(counts.train);
    out.validation.assign(first, first + static_cast<std::ptrdiff_t>(counts.validation));
    first += static_cast<std::ptrdiff_t>(counts.validation);
    out.test.assign(first, first + static_cast<std::ptrdiff_t>(counts.test));
    return out;
}

} // namespace tf2::corpus

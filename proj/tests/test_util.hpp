#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "klsh/corpus.hpp"

namespace klsh::fixtures {

/// Random L1-normalized histogram with roughly `sparsity` of its bins zeroed.
inline std::vector<double> random_histogram(std::mt19937_64& rng, std::size_t d, double sparsity = 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> h(d);
    double total = 0.0;
    for (auto& v : h) {
        v = u(rng) < sparsity ? 0.0 : u(rng);
        total += v;
    }
    if (total == 0.0) {
        h[0] = 1.0;
        total = 1.0;
    }
    for (auto& v : h) v /= total;
    return h;
}

inline Corpus random_corpus(std::size_t n, std::size_t d, std::uint64_t seed, double sparsity = 0.0) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) rows.push_back(random_histogram(rng, d, sparsity));
    return Corpus::from_rows(rows);
}

}  // namespace klsh::fixtures

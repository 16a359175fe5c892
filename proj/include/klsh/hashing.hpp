#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "klsh/corpus.hpp"
#include "klsh/error.hpp"
#include "klsh/kernel.hpp"
#include "klsh/spectral.hpp"

namespace klsh {

/// A packed b-bit code. Bit i lives in word i / 64 at position i % 64, which
/// serializes to byte i / 8, bit i % 8 in little-endian order. Padding is zero.
struct HashCode {
    std::size_t bits = 0;
    std::vector<std::uint64_t> words;

    HashCode() = default;
    explicit HashCode(std::size_t nbits) : bits(nbits), words(word_count(nbits), 0) {}

    [[nodiscard]] static constexpr std::size_t word_count(std::size_t nbits) noexcept {
        return (nbits + 63) / 64;
    }

    [[nodiscard]] bool get(std::size_t i) const noexcept { return (words[i / 64] >> (i % 64)) & 1U; }
    void set(std::size_t i) noexcept { words[i / 64] |= std::uint64_t{1} << (i % 64); }

    friend bool operator==(const HashCode&, const HashCode&) = default;
};

namespace detail {

[[nodiscard]] inline std::size_t popcount_xor(std::span<const std::uint64_t> a,
                                              std::span<const std::uint64_t> b) noexcept {
    std::size_t total = 0;
    for (std::size_t i = 0; i < a.size(); ++i) total += static_cast<std::size_t>(std::popcount(a[i] ^ b[i]));
    return total;
}

}  // namespace detail

[[nodiscard]] inline std::size_t hamming(const HashCode& a, const HashCode& b) {
    if (a.bits != b.bits) {
        throw ValidationError("hamming: code lengths differ (" + std::to_string(a.bits) + " vs " +
                              std::to_string(b.bits) + ")");
    }
    return detail::popcount_xor(a.words, b.words);
}

/// Bit l is set iff projections[l] >= 0, so a zero projection hashes to 1.
[[nodiscard]] inline HashCode code_from_projections(std::span<const double> projections) {
    HashCode code(projections.size());
    for (std::size_t i = 0; i < projections.size(); ++i) {
        if (projections[i] >= 0.0) code.set(i);
    }
    return code;
}

enum class HashVariant {
    clt,       ///< KLSH: w = K_r^{-1/2} e_S over t sampled anchors
    gaussian,  ///< KPCA+LSH: standard-normal hyperplanes in the embedded space
};

[[nodiscard]] inline std::string_view to_string(HashVariant v) noexcept {
    return v == HashVariant::clt ? "clt" : "gaussian";
}

/// b hash functions over a projection model. For clt, weights is b x m and
/// row l is applied to the raw anchor kernel vector. For gaussian, weights is
/// b x r and row l is applied to the embedding.
struct HashBank {
    ProjectionModel model;
    HashVariant variant = HashVariant::clt;
    std::size_t bits = 0;
    std::size_t t = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd weights;
    std::vector<std::vector<std::uint32_t>> subsets;  // clt only: S_t per bit
};

using Rng = std::mt19937_64;

/// k distinct indices drawn uniformly from [0, n), in draw order
/// (partial Fisher-Yates).
[[nodiscard]] inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                                         Rng& rng) {
    if (k > n) throw ValidationError("cannot sample " + std::to_string(k) + " of " + std::to_string(n));
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    return pool;
}

/// Draws the hash functions for an existing model. Draws are sequential on rng.
[[nodiscard]] inline HashBank train_bank_on_model(ProjectionModel model, HashVariant variant,
                                                  std::size_t bits, std::size_t t, Rng& rng,
                                                  std::uint64_t seed_label = 0) {
    if (bits == 0) throw ValidationError("bits must be at least 1");
    const std::size_t m = model.m();
    HashBank bank;
    bank.variant = variant;
    bank.bits = bits;
    bank.t = t;
    bank.seed = seed_label;

    if (variant == HashVariant::clt) {
        if (model.variant != EmbeddingVariant::klsh) {
            throw ValidationError("clt hashing requires the centered (klsh) embedding");
        }
        if (t == 0 || t >= m) {
            throw ValidationError("t must satisfy 1 <= t < m (t=" + std::to_string(t) +
                                  ", m=" + std::to_string(m) + ")");
        }
        bank.weights.resize(static_cast<Eigen::Index>(bits), static_cast<Eigen::Index>(m));
        bank.subsets.reserve(bits);
        Eigen::VectorXd indicator(static_cast<Eigen::Index>(m));
        for (std::size_t l = 0; l < bits; ++l) {
            const auto picked = sample_without_replacement(m, t, rng);
            indicator.setZero();
            std::vector<std::uint32_t> subset;
            subset.reserve(t);
            for (std::size_t j : picked) {
                indicator[static_cast<Eigen::Index>(j)] = 1.0;
                subset.push_back(static_cast<std::uint32_t>(j));
            }
            bank.weights.row(static_cast<Eigen::Index>(l)) =
                inv_sqrt_times(model.spectrum, model.rank, indicator).transpose();
            bank.subsets.push_back(std::move(subset));
        }
    } else {
        std::normal_distribution<double> normal(0.0, 1.0);
        bank.weights.resize(static_cast<Eigen::Index>(bits), static_cast<Eigen::Index>(model.rank));
        for (Eigen::Index l = 0; l < bank.weights.rows(); ++l) {
            for (Eigen::Index c = 0; c < bank.weights.cols(); ++c) bank.weights(l, c) = normal(rng);
        }
    }
    bank.model = std::move(model);
    return bank;
}

struct BankConfig {
    std::size_t m = 1000;
    std::size_t t = 50;
    std::size_t bits = 256;
    std::optional<std::size_t> rank;  // empty: numeric rank
    HashVariant variant = HashVariant::clt;
    EmbeddingVariant embedding = EmbeddingVariant::klsh;
    bool center_queries = false;
    std::uint64_t seed = 0;
};

/// Samples m anchors from the corpus, builds the projection model and draws the
/// hash functions. The anchor sample comes first on the seeded generator.
[[nodiscard]] inline HashBank train_bank(const Corpus& points, const KernelSpec& kernel,
                                         const BankConfig& config) {
    kernel.validate();
    if (config.m == 0 || config.m > points.size()) {
        throw ValidationError("m must satisfy 1 <= m <= corpus size (m=" + std::to_string(config.m) +
                              ", n=" + std::to_string(points.size()) + ")");
    }
    if (config.variant == HashVariant::clt && config.t >= config.m) {
        throw ValidationError("t must be smaller than m");
    }
    Rng rng(config.seed);
    const auto positions = sample_without_replacement(points.size(), config.m, rng);
    ModelOptions options;
    options.rank = config.rank;
    options.variant = config.embedding;
    options.center_queries = config.center_queries;
    ProjectionModel model = build_model(points.subset(positions), kernel, options);
    return train_bank_on_model(std::move(model), config.variant, config.bits, config.t, rng, config.seed);
}

/// Projections of a block of kernel vectors (m x B); returns b x B.
[[nodiscard]] inline Eigen::MatrixXd project_kernel_block(const HashBank& bank, const Eigen::MatrixXd& block) {
    if (bank.variant == HashVariant::clt) {
        if (bank.model.center_queries) {
            Eigen::MatrixXd centered = block.colwise() - bank.model.gram_row_means;
            const Eigen::RowVectorXd col_means = block.colwise().mean();
            centered.rowwise() -= col_means;
            centered.array() += bank.model.gram_mean;
            return bank.weights * centered;
        }
        return bank.weights * block;
    }
    return bank.weights * embed_kernel_block(bank.model, block);
}

[[nodiscard]] inline HashCode hash_kernel_vector(const HashBank& bank, const Eigen::VectorXd& k) {
    Eigen::VectorXd projections;
    if (bank.variant == HashVariant::clt) {
        projections = bank.weights * (bank.model.center_queries ? bank.model.center_kernel_vector(k) : k);
    } else {
        projections = bank.weights * embed_kernel_vector(bank.model, k);
    }
    return code_from_projections({projections.data(), static_cast<std::size_t>(projections.size())});
}

[[nodiscard]] inline HashCode hash_point(const HashBank& bank, std::span<const double> x) {
    return hash_kernel_vector(bank, bank.model.kernel_vector(x));
}

}  // namespace klsh

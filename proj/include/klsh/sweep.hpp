#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "klsh/corpus.hpp"
#include "klsh/error.hpp"
#include "klsh/hashing.hpp"
#include "klsh/kernel.hpp"
#include "klsh/retrieval.hpp"
#include "klsh/spectral.hpp"

namespace klsh {

/// Hashing method as selected on the command line.
enum class Method {
    clt,               ///< KLSH (centered Gram, CLT hyperplanes)
    gaussian,          ///< KPCA+LSH (centered Gram, Gaussian hyperplanes)
    nystrom_baseline,  ///< uncentered Gram, Gaussian hyperplanes
};

[[nodiscard]] inline Method parse_method(std::string_view name) {
    if (name == "clt") return Method::clt;
    if (name == "gaussian") return Method::gaussian;
    if (name == "nystrom-baseline" || name == "nystrom") return Method::nystrom_baseline;
    throw ValidationError("unknown variant '" + std::string(name) + "' (expected clt, gaussian or nystrom-baseline)");
}

[[nodiscard]] inline std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::clt: return "clt";
        case Method::gaussian: return "gaussian";
        case Method::nystrom_baseline: return "nystrom-baseline";
    }
    return "unknown";
}

[[nodiscard]] inline HashVariant hash_variant(Method m) noexcept {
    return m == Method::clt ? HashVariant::clt : HashVariant::gaussian;
}

[[nodiscard]] inline EmbeddingVariant embedding_variant(Method m) noexcept {
    return m == Method::nystrom_baseline ? EmbeddingVariant::nystrom : EmbeddingVariant::klsh;
}

struct SweepConfig {
    KernelSpec kernel;                              // scale field is overridden per sweep point
    std::vector<double> scales{1.0};
    std::vector<std::optional<std::size_t>> ranks{std::nullopt};  // nullopt: numeric rank
    std::size_t m = 1000;
    std::size_t t = 50;
    std::size_t bits = 256;
    Method method = Method::clt;
    bool center_queries = false;
    std::uint64_t seed = 0;
    std::vector<std::size_t> recall_at{1, 10, 100};

    void validate(std::size_t corpus_size) const {
        if (scales.empty() || ranks.empty() || recall_at.empty()) {
            throw ValidationError("scale, rank and recall lists must be nonempty");
        }
        for (double s : scales) {
            if (!(s > 0.0)) throw ValidationError("scales must be positive");
        }
        for (const auto& r : ranks) {
            if (r && *r == 0) throw ValidationError("ranks must be at least 1");
        }
        for (std::size_t R : recall_at) {
            if (R == 0) throw ValidationError("recall-at values must be at least 1");
        }
        if (m == 0 || m > corpus_size) throw ValidationError("m must satisfy 1 <= m <= corpus size");
        if (method == Method::clt && (t == 0 || t >= m)) throw ValidationError("t must satisfy 1 <= t < m");
        if (bits == 0) throw ValidationError("bits must be at least 1");
    }
};

/// Recall@R for every (scale, rank) pair. Each scale reuses the same anchor
/// sample; within a scale every rank reuses the same random draws, so only
/// the swept parameter changes between curves.
[[nodiscard]] inline std::vector<EvalReport> run_sweep(const Corpus& corpus, const Corpus& queries,
                                                       std::span<const std::uint32_t> truth,
                                                       const SweepConfig& config) {
    config.validate(corpus.size());
    if (queries.size() != truth.size()) throw ValidationError("one ground-truth id per query required");
    const std::size_t max_R = std::min(corpus.size(), *std::max_element(config.recall_at.begin(), config.recall_at.end()));

    std::vector<EvalReport> reports;
    for (double scale : config.scales) {
        KernelSpec kernel = config.kernel;
        kernel.scale = scale;
        Rng rng(config.seed);
        const auto positions = sample_without_replacement(corpus.size(), config.m, rng);
        ModelOptions options;
        options.variant = embedding_variant(config.method);
        options.center_queries = config.center_queries;
        const ProjectionModel full = build_model(corpus.subset(positions), kernel, options);

        std::vector<HashBank> banks;
        std::vector<std::string> labels;
        for (const auto& requested : config.ranks) {
            const std::size_t rank = std::min(requested.value_or(full.numeric_rank()), full.numeric_rank());
            Rng bank_rng = rng;
            banks.push_back(train_bank_on_model(full.with_rank(rank), hash_variant(config.method), config.bits,
                                                config.t, bank_rng, config.seed));
            labels.push_back(requested ? std::to_string(*requested) : "full");
        }
        std::vector<const HashBank*> bank_ptrs;
        for (const auto& b : banks) bank_ptrs.push_back(&b);
        const auto corpus_codes = hash_corpus(bank_ptrs, corpus);
        const auto query_codes = hash_corpus(bank_ptrs, queries);

        for (std::size_t b = 0; b < banks.size(); ++b) {
            const auto retrieved = retrieve_all(corpus_codes[b], query_codes[b], max_R);
            EvalReport report = recall_at_R(retrieved, truth, config.recall_at);
            report.params = {std::string(to_string(kernel.base)), kernel.normalize, scale, config.m,
                             config.method == Method::clt ? config.t : 0, config.bits, banks[b].model.rank,
                             labels[b], std::string(to_string(config.method)), config.seed};
            reports.push_back(std::move(report));
        }
    }
    return reports;
}

}  // namespace klsh

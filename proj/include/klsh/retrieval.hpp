#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "klsh/corpus.hpp"
#include "klsh/error.hpp"
#include "klsh/hashing.hpp"
#include "klsh/kernel.hpp"
#include "klsh/parallel.hpp"

namespace klsh {

/// Packed codes for a corpus, one identifier per code.
class CodeSet {
public:
    CodeSet() = default;
    explicit CodeSet(std::size_t bits) : bits_(bits), stride_(HashCode::word_count(bits)) {}

    [[nodiscard]] std::size_t bits() const noexcept { return bits_; }
    [[nodiscard]] std::size_t size() const noexcept { return ids_.size(); }
    [[nodiscard]] std::size_t words_per_code() const noexcept { return stride_; }
    [[nodiscard]] std::uint32_t id(std::size_t i) const noexcept { return ids_[i]; }
    [[nodiscard]] const std::vector<std::uint32_t>& ids() const noexcept { return ids_; }

    [[nodiscard]] std::span<const std::uint64_t> words(std::size_t i) const noexcept {
        return {words_.data() + i * stride_, stride_};
    }

    [[nodiscard]] HashCode code(std::size_t i) const {
        HashCode c(bits_);
        std::copy_n(words_.begin() + static_cast<std::ptrdiff_t>(i * stride_), stride_, c.words.begin());
        return c;
    }

    void push_back(const HashCode& code, std::uint32_t id) {
        if (code.bits != bits_) throw ValidationError("code length does not match code set");
        words_.insert(words_.end(), code.words.begin(), code.words.end());
        ids_.push_back(id);
    }

    /// Resizes to n codes so blocks can be filled in place.
    void resize(std::size_t n) {
        words_.assign(n * stride_, 0);
        ids_.assign(n, 0);
    }

    void assign(std::size_t i, const HashCode& code, std::uint32_t id) {
        std::copy(code.words.begin(), code.words.end(), words_.begin() + static_cast<std::ptrdiff_t>(i * stride_));
        ids_[i] = id;
    }

    [[nodiscard]] bool ids_unique() const {
        std::unordered_set<std::uint32_t> seen(ids_.begin(), ids_.end());
        return seen.size() == ids_.size();
    }

private:
    std::size_t bits_ = 0;
    std::size_t stride_ = 0;
    std::vector<std::uint64_t> words_;
    std::vector<std::uint32_t> ids_;
};

inline constexpr std::size_t kHashBlock = 512;

/// Hashes a corpus with several banks that share one projection model's
/// anchors and kernel, computing each block of kernel vectors once.
[[nodiscard]] inline std::vector<CodeSet> hash_corpus(std::span<const HashBank* const> banks,
                                                      const Corpus& points) {
    std::vector<CodeSet> out;
    if (banks.empty()) return out;
    const ProjectionModel& base = banks.front()->model;
    for (const HashBank* bank : banks) {
        if (!(bank->model.kernel == base.kernel) || bank->model.anchors.values != base.anchors.values) {
            throw ValidationError("hash_corpus: banks must share anchors and kernel");
        }
        out.emplace_back(bank->bits);
        out.back().resize(points.size());
    }
    for (std::size_t begin = 0; begin < points.size(); begin += kHashBlock) {
        const std::size_t end = std::min(points.size(), begin + kHashBlock);
        const Eigen::MatrixXd block = base.kernel_block(points, begin, end);
        for (std::size_t b = 0; b < banks.size(); ++b) {
            const Eigen::MatrixXd projections = project_kernel_block(*banks[b], block);
            for (Eigen::Index c = 0; c < projections.cols(); ++c) {
                const Eigen::VectorXd column = projections.col(c);
                const std::size_t i = begin + static_cast<std::size_t>(c);
                out[b].assign(i, code_from_projections({column.data(), static_cast<std::size_t>(column.size())}),
                              points.ids[i]);
            }
        }
    }
    return out;
}

[[nodiscard]] inline CodeSet hash_corpus(const HashBank& bank, const Corpus& points) {
    const HashBank* one[] = {&bank};
    return std::move(hash_corpus(one, points).front());
}

/// The R nearest codes by Hamming distance, ties broken by ascending id.
/// Exhaustive over the set.
[[nodiscard]] inline std::vector<std::uint32_t> rank_hamming(const CodeSet& codes, const HashCode& query,
                                                             std::size_t R) {
    if (query.bits != codes.bits()) throw ValidationError("rank_hamming: query bits do not match code set");
    if (R > codes.size()) throw ValidationError("rank_hamming: R exceeds code set size");
    std::vector<std::pair<std::size_t, std::uint32_t>> keyed(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        keyed[i] = {detail::popcount_xor(codes.words(i), query.words), codes.id(i)};
    }
    std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(R), keyed.end());
    std::vector<std::uint32_t> ids(R);
    for (std::size_t i = 0; i < R; ++i) ids[i] = keyed[i].second;
    return ids;
}

struct ScoredId {
    std::uint32_t id = 0;
    double score = 0.0;
};

/// Exhaustive kernel ranking: descending similarity, ties by ascending id.
[[nodiscard]] inline std::vector<ScoredId> exact_nn_scored(const KernelSpec& kernel, const Corpus& corpus,
                                                           std::span<const double> query, std::size_t topk) {
    kernel.validate();
    if (corpus.empty()) throw ValidationError("exact_nn: empty corpus");
    topk = std::min(topk, corpus.size());
    std::vector<ScoredId> scored(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        scored[i] = {corpus.ids[i], eval_kernel(kernel, query, corpus.row(i))};
    }
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(topk), scored.end(),
                      [](const ScoredId& a, const ScoredId& b) {
                          return a.score != b.score ? a.score > b.score : a.id < b.id;
                      });
    scored.resize(topk);
    return scored;
}

[[nodiscard]] inline std::vector<std::uint32_t> exact_nn(const KernelSpec& kernel, const Corpus& corpus,
                                                         std::span<const double> query, std::size_t topk) {
    const auto scored = exact_nn_scored(kernel, corpus, query, topk);
    std::vector<std::uint32_t> ids(scored.size());
    std::transform(scored.begin(), scored.end(), ids.begin(), [](const ScoredId& s) { return s.id; });
    return ids;
}

struct GroundTruth {
    std::vector<std::uint32_t> nearest;  // one id per query
    std::size_t tied_queries = 0;        // queries whose top similarity is shared
};

/// Exact nearest neighbour per query under the untransformed kernel.
[[nodiscard]] inline GroundTruth ground_truth(const KernelSpec& kernel, const Corpus& corpus,
                                              const Corpus& queries) {
    const KernelSpec truth_kernel = kernel.untransformed();
    GroundTruth out;
    out.nearest.resize(queries.size());
    std::vector<char> tied(queries.size(), 0);
    parallel_for(
        queries.size(),
        [&](std::size_t begin, std::size_t end) {
            for (std::size_t q = begin; q < end; ++q) {
                const auto top = exact_nn_scored(truth_kernel, corpus, queries.row(q), 2);
                out.nearest[q] = top.front().id;
                tied[q] = top.size() > 1 && top[0].score == top[1].score;
            }
        },
        4);
    out.tied_queries = static_cast<std::size_t>(std::count(tied.begin(), tied.end(), 1));
    return out;
}

/// Parameters echoed into every report.
struct RunParams {
    std::string kernel;
    bool normalize = false;
    double scale = 1.0;
    std::size_t m = 0;
    std::size_t t = 0;
    std::size_t bits = 0;
    std::size_t rank = 0;
    std::string rank_label;  // "full" for the numeric rank, else the number
    std::string variant;
    std::uint64_t seed = 0;
};

struct EvalReport {
    std::map<std::size_t, double> recall_at;
    RunParams params;
    std::size_t queries = 0;
    std::size_t tied_queries = 0;
};

/// Fraction of queries whose true neighbour appears in the first R entries
/// of its retrieved list, for each R.
[[nodiscard]] inline EvalReport recall_at_R(const std::vector<std::vector<std::uint32_t>>& retrieved,
                                            std::span<const std::uint32_t> truth,
                                            std::span<const std::size_t> Rs) {
    if (truth.empty()) throw ValidationError("recall_at_R: empty query set");
    if (retrieved.size() != truth.size()) throw ValidationError("recall_at_R: one truth id per query required");
    EvalReport report;
    report.queries = truth.size();
    for (std::size_t R : Rs) {
        std::size_t hits = 0;
        for (std::size_t q = 0; q < truth.size(); ++q) {
            const auto& list = retrieved[q];
            const auto stop = list.begin() + static_cast<std::ptrdiff_t>(std::min(R, list.size()));
            if (std::find(list.begin(), stop, truth[q]) != stop) ++hits;
        }
        report.recall_at[R] = static_cast<double>(hits) / static_cast<double>(truth.size());
    }
    return report;
}

/// Hamming-ranks every query code against the corpus codes.
[[nodiscard]] inline std::vector<std::vector<std::uint32_t>> retrieve_all(const CodeSet& corpus_codes,
                                                                          const CodeSet& query_codes,
                                                                          std::size_t R) {
    R = std::min(R, corpus_codes.size());
    std::vector<std::vector<std::uint32_t>> out(query_codes.size());
    parallel_for(
        query_codes.size(),
        [&](std::size_t begin, std::size_t end) {
            for (std::size_t q = begin; q < end; ++q) out[q] = rank_hamming(corpus_codes, query_codes.code(q), R);
        },
        4);
    return out;
}

}  // namespace klsh

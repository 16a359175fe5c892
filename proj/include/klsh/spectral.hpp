#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "klsh/corpus.hpp"
#include "klsh/error.hpp"
#include "klsh/kernel.hpp"
#include "klsh/parallel.hpp"

namespace klsh {

/// Eigenvalues at or below this fraction of the largest are treated as zero.
inline constexpr double kEigenFloor = 1e-10;

/// Eigendecomposition of a symmetric PSD matrix: eigenvalues descending and
/// clamped at zero, eigenvectors as orthonormal columns in the same order.
struct Spectrum {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }

    /// Number of eigenvalues strictly above kEigenFloor * lambda_1.
    [[nodiscard]] std::size_t numeric_rank() const noexcept {
        if (values.size() == 0 || !(values[0] > 0.0)) return 0;
        const double floor = kEigenFloor * values[0];
        std::size_t r = 0;
        while (r < size() && values[static_cast<Eigen::Index>(r)] > floor) ++r;
        return r;
    }
};

/// Symmetric eigendecomposition, deterministic for identical input bits.
/// Eigenvector signs are fixed so the first nonzero component is positive.
[[nodiscard]] inline Spectrum sym_eig(const Eigen::MatrixXd& matrix) {
    const Eigen::Index m = matrix.rows();
    if (m == 0 || matrix.cols() != m) throw ValidationError("sym_eig requires a nonempty square matrix");
    const double scale = std::max(matrix.cwiseAbs().maxCoeff(), 1e-300);
    const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8 * scale) {
        throw ValidationError("sym_eig input is not symmetric (max asymmetry " + std::to_string(asym) + ")");
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        const Eigen::MatrixXd& v = solver.eigenvectors();
        const double residual =
            (matrix * v - v * solver.eigenvalues().asDiagonal()).norm();
        throw NumericError("eigensolver did not converge (residual norm " + std::to_string(residual) + ")");
    }

    Spectrum out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();

    const double top = out.values[0];
    const double tolerance = 1e-8 * std::max(top, 0.0);
    for (Eigen::Index i = 0; i < m; ++i) {
        double& lambda = out.values[i];
        if (lambda < 0.0) {
            if (lambda < -tolerance && top > 0.0) {
                throw NumericError("matrix is not positive semidefinite (eigenvalue " +
                                   std::to_string(lambda) + ")");
            }
            lambda = 0.0;
        }
        auto column = out.vectors.col(i);
        for (Eigen::Index r = 0; r < m; ++r) {
            if (std::abs(column[r]) > 1e-12) {
                if (column[r] < 0.0) column = -column;
                break;
            }
        }
    }
    return out;
}

enum class EmbeddingVariant {
    klsh,     ///< centered anchor Gram
    nystrom,  ///< uncentered anchor Gram
};

[[nodiscard]] inline std::string_view to_string(EmbeddingVariant v) noexcept {
    return v == EmbeddingVariant::klsh ? "klsh" : "nystrom";
}

struct ModelOptions {
    /// Requested rank; empty means the numeric rank (vanilla KLSH).
    std::optional<std::size_t> rank;
    EmbeddingVariant variant = EmbeddingVariant::klsh;
    /// Center out-of-sample kernel vectors as strict KPCA would. Off by
    /// default: hashing uses the raw kernel vector.
    bool center_queries = false;
};

/// Anchors plus the spectrum of their (centered) Gram matrix, truncated to a
/// rank. Shared substrate for KLSH, KPCA+LSH and the Nystrom embedding.
struct ProjectionModel {
    Corpus anchors;
    KernelSpec kernel;
    Spectrum spectrum;
    std::size_t rank = 0;
    EmbeddingVariant variant = EmbeddingVariant::klsh;
    bool center_queries = false;

    Eigen::VectorXd anchor_self;      // base self-similarities (normalization)
    Eigen::VectorXd gram_row_means;   // uncentered Gram row means
    double gram_mean = 0.0;           // uncentered Gram grand mean
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t m() const noexcept { return anchors.size(); }
    [[nodiscard]] std::size_t numeric_rank() const noexcept { return spectrum.numeric_rank(); }

    /// Same anchors and spectrum at another rank in [1, numeric_rank].
    [[nodiscard]] ProjectionModel with_rank(std::size_t r) const {
        if (r == 0 || r > numeric_rank()) {
            throw ValidationError("rank " + std::to_string(r) + " outside [1, " +
                                  std::to_string(numeric_rank()) + "]");
        }
        ProjectionModel out = *this;
        out.rank = r;
        return out;
    }

    [[nodiscard]] Eigen::VectorXd kernel_vector(std::span<const double> x) const {
        Eigen::VectorXd k(static_cast<Eigen::Index>(m()));
        klsh::kernel_vector(kernel, anchors, anchor_self, x, {k.data(), m()});
        return k;
    }

    /// Kernel vectors of points [begin, end) as the columns of an m x B matrix.
    [[nodiscard]] Eigen::MatrixXd kernel_block(const Corpus& points, std::size_t begin,
                                               std::size_t end) const {
        Eigen::MatrixXd block(static_cast<Eigen::Index>(m()), static_cast<Eigen::Index>(end - begin));
        parallel_for(
            end - begin,
            [&](std::size_t lo, std::size_t hi) {
                for (std::size_t c = lo; c < hi; ++c) {
                    klsh::kernel_vector(kernel, anchors, anchor_self, points.row(begin + c),
                                        {block.col(static_cast<Eigen::Index>(c)).data(), m()});
                }
            },
            16);
        return block;
    }

    /// KPCA query centering: k - (1/m) K 1 - mean(k) 1 + (1/m^2) sum(K).
    [[nodiscard]] Eigen::VectorXd center_kernel_vector(const Eigen::VectorXd& k) const {
        Eigen::VectorXd out = k - gram_row_means;
        out.array() += gram_mean - k.mean();
        return out;
    }
};

/// Builds the model from a fixed anchor set.
[[nodiscard]] inline ProjectionModel build_model(Corpus anchors, const KernelSpec& kernel,
                                                 const ModelOptions& options = {}) {
    kernel.validate();
    if (anchors.empty()) throw ValidationError("model requires at least one anchor");
    if (options.rank && *options.rank == 0) throw ValidationError("rank must be at least 1");

    ProjectionModel model;
    model.kernel = kernel;
    model.variant = options.variant;
    model.center_queries = options.center_queries && options.variant == EmbeddingVariant::klsh;
    model.anchor_self = self_similarities(kernel, anchors);
    model.anchors = std::move(anchors);

    const GramMatrix raw = gram(kernel, model.anchors);
    model.gram_row_means = raw.entries.rowwise().mean();
    model.gram_mean = raw.entries.mean();
    model.spectrum = sym_eig(options.variant == EmbeddingVariant::klsh ? center(raw).entries : raw.entries);

    const std::size_t numeric = model.spectrum.numeric_rank();
    if (numeric == 0) throw NumericError("numeric rank 0");
    model.rank = numeric;
    if (options.rank) {
        if (*options.rank > numeric) {
            model.warnings.push_back("requested rank " + std::to_string(*options.rank) +
                                     " exceeds numeric rank " + std::to_string(numeric) +
                                     "; using " + std::to_string(numeric));
        } else {
            model.rank = *options.rank;
        }
    }
    return model;
}

/// Embedding D_r^{-1/2} U_r^T k of an already computed kernel vector, at the
/// given rank (defaults to the model rank). Applies query centering when the
/// model asks for it.
[[nodiscard]] inline Eigen::VectorXd embed_kernel_vector(const ProjectionModel& model,
                                                         const Eigen::VectorXd& k,
                                                         std::optional<std::size_t> rank = {}) {
    const auto r = static_cast<Eigen::Index>(rank.value_or(model.rank));
    const Eigen::VectorXd kv = model.center_queries ? model.center_kernel_vector(k) : k;
    Eigen::VectorXd out = model.spectrum.vectors.leftCols(r).transpose() * kv;
    out.array() /= model.spectrum.values.head(r).array().sqrt();
    return out;
}

/// Embeds many kernel vectors (columns) at once; returns r x B.
[[nodiscard]] inline Eigen::MatrixXd embed_kernel_block(const ProjectionModel& model,
                                                        const Eigen::MatrixXd& block) {
    const auto r = static_cast<Eigen::Index>(model.rank);
    Eigen::MatrixXd out;
    if (model.center_queries) {
        Eigen::MatrixXd centered = block.colwise() - model.gram_row_means;
        const Eigen::RowVectorXd col_means = block.colwise().mean();
        centered.rowwise() -= col_means;
        centered.array() += model.gram_mean;
        out = model.spectrum.vectors.leftCols(r).transpose() * centered;
    } else {
        out = model.spectrum.vectors.leftCols(r).transpose() * block;
    }
    const Eigen::VectorXd inv_sqrt = model.spectrum.values.head(r).array().sqrt().inverse();
    out = inv_sqrt.asDiagonal() * out;
    return out;
}

[[nodiscard]] inline Eigen::VectorXd embed(const ProjectionModel& model, std::span<const double> x) {
    return embed_kernel_vector(model, model.kernel_vector(x));
}

/// U_r D_r^{-1/2} U_r^T v: the rank-r inverse square root of the decomposed
/// matrix applied to v.
[[nodiscard]] inline Eigen::VectorXd inv_sqrt_times(const Spectrum& spectrum, std::size_t rank,
                                                    const Eigen::VectorXd& v) {
    if (rank == 0 || rank > spectrum.numeric_rank()) {
        throw ValidationError("rank " + std::to_string(rank) + " outside [1, " +
                              std::to_string(spectrum.numeric_rank()) + "]");
    }
    if (static_cast<std::size_t>(v.size()) != spectrum.size()) {
        throw ValidationError("inv_sqrt_times: vector length does not match spectrum");
    }
    const auto r = static_cast<Eigen::Index>(rank);
    const auto basis = spectrum.vectors.leftCols(r);
    Eigen::VectorXd coeffs = basis.transpose() * v;
    coeffs.array() /= spectrum.values.head(r).array().sqrt();
    return basis * coeffs;
}

struct DecayRow {
    std::size_t k = 0;
    double lambda = 0.0;     // covariance scale (Gram eigenvalue / m)
    double delta = 0.0;      // (lambda_k - lambda_{k+1}) / 2, covariance scale
    double tail_mass = 0.0;  // sum_{i>k} lambda_i / sum_i lambda_i
    bool zero_eigengap = false;
};

/// Spectral decay table for 1-based k. Eigenvalues are divided by m so they
/// estimate the covariance operator's spectrum.
[[nodiscard]] inline std::vector<DecayRow> decay_report(const Spectrum& spectrum,
                                                        std::span<const std::size_t> ks) {
    const std::size_t m = spectrum.size();
    const double total = spectrum.values.sum();
    const double gap_tolerance = kEigenFloor * std::max(spectrum.values.size() ? spectrum.values[0] : 0.0, 0.0);
    std::vector<DecayRow> rows;
    rows.reserve(ks.size());
    for (std::size_t k : ks) {
        if (k == 0 || k >= m) {
            throw ValidationError("decay_report: k=" + std::to_string(k) + " outside [1, " +
                                  std::to_string(m - 1) + "]");
        }
        const double lk = spectrum.values[static_cast<Eigen::Index>(k - 1)];
        const double lnext = spectrum.values[static_cast<Eigen::Index>(k)];
        DecayRow row;
        row.k = k;
        row.lambda = lk / static_cast<double>(m);
        row.delta = (lk - lnext) / (2.0 * static_cast<double>(m));
        row.tail_mass = total > 0.0 ? spectrum.values.tail(static_cast<Eigen::Index>(m - k)).sum() / total : 0.0;
        row.zero_eigengap = (lk - lnext) <= gap_tolerance;
        if (row.zero_eigengap) row.delta = 0.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace klsh

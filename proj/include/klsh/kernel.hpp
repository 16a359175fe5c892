#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "klsh/corpus.hpp"
#include "klsh/error.hpp"
#include "klsh/parallel.hpp"

namespace klsh {

enum class BaseKernel { chi2, intersection, linear };

[[nodiscard]] inline std::string_view to_string(BaseKernel k) noexcept {
    switch (k) {
        case BaseKernel::chi2: return "chi2";
        case BaseKernel::intersection: return "intersection";
        case BaseKernel::linear: return "linear";
    }
    return "unknown";
}

[[nodiscard]] inline BaseKernel parse_base_kernel(std::string_view name) {
    if (name == "chi2") return BaseKernel::chi2;
    if (name == "intersection") return BaseKernel::intersection;
    if (name == "linear") return BaseKernel::linear;
    throw ValidationError("unknown kernel '" + std::string(name) +
                          "' (expected chi2, intersection or linear)");
}

/// Which similarity is measured: a base histogram kernel, optional cosine-style
/// normalization, and the exponential transform exp(s * (k - 1)).
/// A scale of exactly 1 leaves the kernel untransformed.
struct KernelSpec {
    BaseKernel base = BaseKernel::chi2;
    bool normalize = false;
    double scale = 1.0;

    void validate() const {
        if (!(scale > 0.0) || !std::isfinite(scale)) {
            throw ValidationError("kernel scale must be a positive finite number");
        }
    }

    [[nodiscard]] bool transformed() const noexcept { return scale != 1.0; }

    /// Same kernel with the monotone transform removed; ground truth is
    /// always measured under this one.
    [[nodiscard]] KernelSpec untransformed() const noexcept {
        KernelSpec out = *this;
        out.scale = 1.0;
        return out;
    }

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

namespace detail {

inline void check_same_dim(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw ValidationError("kernel dimension mismatch: " + std::to_string(x.size()) +
                              " vs " + std::to_string(y.size()));
    }
}

[[nodiscard]] inline double base_value(BaseKernel base, std::span<const double> x,
                                       std::span<const double> y) noexcept {
    double sum = 0.0;
    const std::size_t d = x.size();
    switch (base) {
        case BaseKernel::chi2:
            for (std::size_t i = 0; i < d; ++i) {
                const double den = x[i] + y[i];
                // 0/0 summands are taken at their limit, 0
                if (den > 0.0) sum += 2.0 * x[i] * y[i] / den;
            }
            break;
        case BaseKernel::intersection:
            for (std::size_t i = 0; i < d; ++i) sum += std::min(x[i], y[i]);
            break;
        case BaseKernel::linear:
            for (std::size_t i = 0; i < d; ++i) sum += x[i] * y[i];
            break;
    }
    return sum;
}

/// Applies normalization (given both self-similarities) and the transform.
[[nodiscard]] inline double finish(const KernelSpec& spec, double raw, double self_x,
                                   double self_y) noexcept {
    double value = raw;
    if (spec.normalize) value = raw / std::sqrt(self_x * self_y);
    if (spec.transformed()) value = std::exp(spec.scale * (value - 1.0));
    return value;
}

}  // namespace detail

/// Self-similarity of the base kernel; required for normalization.
/// Throws on a zero vector when normalization is requested.
[[nodiscard]] inline double self_similarity(const KernelSpec& spec, std::span<const double> x) {
    const double s = detail::base_value(spec.base, x, x);
    if (spec.normalize && !(s > 0.0)) throw ValidationError("degenerate point");
    return s;
}

[[nodiscard]] inline double eval_kernel(const KernelSpec& spec, std::span<const double> x,
                                        std::span<const double> y) {
    spec.validate();
    detail::check_same_dim(x, y);
    const double raw = detail::base_value(spec.base, x, y);
    if (!spec.normalize) return detail::finish(spec, raw, 1.0, 1.0);
    return detail::finish(spec, raw, self_similarity(spec, x), self_similarity(spec, y));
}

/// Per-point base self-similarities of a corpus (all ones when normalization
/// is off, since they are then unused).
[[nodiscard]] inline Eigen::VectorXd self_similarities(const KernelSpec& spec,
                                                       const Corpus& points) {
    Eigen::VectorXd out = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(points.size()));
    if (!spec.normalize) return out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        try {
            out[static_cast<Eigen::Index>(i)] = self_similarity(spec, points.row(i));
        } catch (const ValidationError& e) {
            throw ValidationError(std::string(e.what()) + " at index " + std::to_string(i));
        }
    }
    return out;
}

/// Kernel values between one point and every anchor, written to out.
inline void kernel_vector(const KernelSpec& spec, const Corpus& anchors,
                          const Eigen::VectorXd& anchor_self, std::span<const double> x,
                          std::span<double> out) {
    detail::check_same_dim(x, anchors.row(0));
    const double self_x = spec.normalize ? self_similarity(spec, x) : 1.0;
    for (std::size_t j = 0; j < anchors.size(); ++j) {
        const double raw = detail::base_value(spec.base, x, anchors.row(j));
        out[j] = detail::finish(spec, raw, self_x, anchor_self[static_cast<Eigen::Index>(j)]);
    }
}

/// m x m symmetric kernel matrix, optionally double-centered.
struct GramMatrix {
    Eigen::MatrixXd entries;
    bool centered = false;

    [[nodiscard]] Eigen::Index size() const noexcept { return entries.rows(); }
};

/// Uncentered Gram matrix over the given points. With normalization on, the
/// diagonal is set to exactly 1 (before any transform, which maps 1 to 1).
[[nodiscard]] inline GramMatrix gram(const KernelSpec& spec, const Corpus& points) {
    spec.validate();
    if (points.empty()) throw ValidationError("gram requires at least one point");
    const auto n = static_cast<Eigen::Index>(points.size());
    const Eigen::VectorXd self = self_similarities(spec, points);
    GramMatrix g;
    g.entries.resize(n, n);
    parallel_for(
        points.size(),
        [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                for (std::size_t j = i; j < points.size(); ++j) {
                    const auto jj = static_cast<Eigen::Index>(j);
                    double v = 1.0;
                    if (i != j || !spec.normalize) {
                        const double raw =
                            detail::base_value(spec.base, points.row(i), points.row(j));
                        v = detail::finish(spec, raw, self[ii], self[jj]);
                    }
                    g.entries(ii, jj) = v;
                    g.entries(jj, ii) = v;
                }
            }
        },
        8);
    return g;
}

/// Double centering H K H with H = I - (1/m) 1 1^T. Idempotent.
[[nodiscard]] inline GramMatrix center(const GramMatrix& g) {
    const Eigen::Index m = g.size();
    if (m == 0 || g.entries.cols() != m) throw ValidationError("center requires a square matrix");
    const Eigen::VectorXd row_means = g.entries.rowwise().mean();
    const Eigen::RowVectorXd col_means = g.entries.colwise().mean();
    const double grand = g.entries.mean();
    GramMatrix out;
    out.centered = true;
    out.entries = g.entries;
    out.entries.colwise() -= row_means;
    out.entries.rowwise() -= col_means;
    out.entries.array() += grand;
    // restore exact symmetry lost to rounding
    out.entries = (0.5 * (out.entries + out.entries.transpose())).eval();
    return out;
}

}  // namespace klsh

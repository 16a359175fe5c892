#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "klsh/corpus.hpp"
#include "klsh/error.hpp"
#include "klsh/kernel.hpp"
#include "klsh/spectral.hpp"

// Retrieval-bound quantities for KLSH viewed as LSH after a KPCA projection.
// Spectral inputs are empirical plug-ins: Gram eigenvalues divided by m stand
// in for the covariance operator's eigenvalues.

namespace klsh {

/// Every diagnostic derived from sample spectra carries this label.
inline constexpr const char* kPlugInLabel = "empirical plug-in";

/// Eigenspace estimation radius (2 / (delta_k sqrt(m))) (1 + sqrt(xi / 2)).
[[nodiscard]] inline double eta(double delta_k, std::size_t m, double xi) {
    if (m == 0) throw ValidationError("eta: m must be at least 1");
    if (!(xi > 0.0)) throw ValidationError("eta: xi must be positive");
    if (!(delta_k > 0.0)) throw NumericError("zero eigengap");
    return 2.0 / (delta_k * std::sqrt(static_cast<double>(m))) * (1.0 + std::sqrt(xi / 2.0));
}

struct BoundInputs {
    double lambda_k = 0.0;  // covariance scale
    double delta_k = 0.0;
    std::size_t m = 0;
    double xi = 3.0;
    double eps = 0.5;
    double kappa_star = 1.0;  // similarity of the true nearest neighbour
};

struct BoundResult {
    double value = 0.0;  // lower bound on kappa(q, retrieved)
    double eta = 0.0;
    double threshold = 0.0;  // 1 - sqrt(lambda_k) - eta
    bool applicable = false;  // 0 < eta < 1 - sqrt(lambda_k)
    double success_probability = 0.0;  // (1 - e^{-xi}) / 2
    std::string query_cost;
    std::string space_cost;
    std::string lsh_success;  // guarantee of the underlying LSH scheme
};

/// (1 + eps)(1 - sqrt(lambda) - eta) kappa* - eps - (2 + eps)(sqrt(lambda) + eta)^2,
/// with eta supplied directly. The value is always computed; applicability is
/// reported separately.
[[nodiscard]] inline BoundResult klsh_bound(double lambda_k, double eta_value, double eps, double kappa_star,
                                            double xi = 3.0) {
    if (lambda_k < 0.0 || eta_value < 0.0 || !(eps >= 0.0)) {
        throw ValidationError("klsh_bound: lambda_k, eta and eps must be nonnegative");
    }
    if (kappa_star < 0.0 || kappa_star > 1.0) throw ValidationError("klsh_bound: kappa* must lie in [0, 1]");
    const double root = std::sqrt(lambda_k);
    const double error = root + eta_value;
    BoundResult r;
    r.eta = eta_value;
    r.threshold = 1.0 - root - eta_value;
    r.value = (1.0 + eps) * (1.0 - root - eta_value) * kappa_star - eps - (2.0 + eps) * error * error;
    r.applicable = eta_value > 0.0 && eta_value < 1.0 - root;
    r.success_probability = (1.0 - std::exp(-xi)) / 2.0;
    const std::string exponent = "1/(1+" + std::to_string(eps) + ")";
    r.query_cost = "O(n^" + exponent + ") kernel evaluations";
    r.space_cost = "O(dn + n^(1+" + exponent + "))";
    r.lsh_success = "> 0.5";
    return r;
}

[[nodiscard]] inline BoundResult klsh_bound(const BoundInputs& in) {
    return klsh_bound(in.lambda_k, eta(in.delta_k, in.m, in.xi), in.eps, in.kappa_star, in.xi);
}

/// How the feature map is treated when measuring projections.
enum class ProjectionFrame {
    /// Anchor-mean-centered features rescaled to unit norm; the estimated
    /// principal subspace contains every centered anchor.
    centered,
    /// Raw features, paired with the uncentered kernel vector as in the
    /// hashing formula.
    uncentered,
};

namespace detail {

struct ProjectedPoint {
    Eigen::VectorXd coords;    // coordinates in the top-rank principal subspace
    Eigen::VectorXd k;         // raw anchor kernel vector
    double feature_norm_sq;    // squared norm of the (centered) feature
};

inline void check_projection_model(const ProjectionModel& model, std::size_t rank) {
    if (model.variant != EmbeddingVariant::klsh) {
        throw ValidationError("projection diagnostics require the centered (klsh) model");
    }
    if (rank > model.numeric_rank()) {
        throw ValidationError("rank " + std::to_string(rank) + " exceeds numeric rank " +
                              std::to_string(model.numeric_rank()));
    }
}

[[nodiscard]] inline ProjectedPoint project(const ProjectionModel& model, std::span<const double> x,
                                            std::size_t rank, ProjectionFrame frame) {
    ProjectedPoint p;
    p.k = model.kernel_vector(x);
    const double self = eval_kernel(model.kernel, x, x);
    const auto r = static_cast<Eigen::Index>(rank);
    Eigen::VectorXd kv = p.k;
    if (frame == ProjectionFrame::centered) {
        p.feature_norm_sq = self - 2.0 * p.k.mean() + model.gram_mean;
        kv = p.k - model.gram_row_means;
        kv.array() += model.gram_mean - p.k.mean();
    } else {
        p.feature_norm_sq = self;
    }
    if (!(p.feature_norm_sq > 1e-14)) {
        throw NumericError("feature vector has zero norm (point coincides with the anchor mean)");
    }
    p.coords = model.spectrum.vectors.leftCols(r).transpose() * kv;
    p.coords.array() /= model.spectrum.values.head(r).array().sqrt();
    return p;
}

}  // namespace detail

/// N(x): norm of the projection of the unit feature of x onto the estimated
/// top-rank principal subspace. Rank defaults to the model rank; 0 is allowed.
[[nodiscard]] inline double projection_norm(const ProjectionModel& model, std::span<const double> x,
                                            std::optional<std::size_t> rank = {},
                                            ProjectionFrame frame = ProjectionFrame::centered) {
    const std::size_t r = rank.value_or(model.rank);
    detail::check_projection_model(model, r);
    const auto p = detail::project(model, x, r, frame);
    return p.coords.norm() / std::sqrt(p.feature_norm_sq);
}

/// Inner product of the residuals orthogonal to the principal subspace:
/// kappa(x, y) - kappa_hat(x, y), both in the chosen frame.
[[nodiscard]] inline double residual_inner_product(const ProjectionModel& model, std::span<const double> x,
                                                   std::span<const double> y,
                                                   std::optional<std::size_t> rank = {},
                                                   ProjectionFrame frame = ProjectionFrame::centered) {
    const std::size_t r = rank.value_or(model.rank);
    detail::check_projection_model(model, r);
    const auto px = detail::project(model, x, r, frame);
    const auto py = detail::project(model, y, r, frame);
    double similarity = eval_kernel(model.kernel, x, y);
    if (frame == ProjectionFrame::centered) similarity += model.gram_mean - px.k.mean() - py.k.mean();
    return (similarity - px.coords.dot(py.coords)) / std::sqrt(px.feature_norm_sq * py.feature_norm_sq);
}

struct EliminationReport {
    std::size_t k = 0;
    double lambda_k = 0.0;
    double delta_k = 0.0;
    double eta = 0.0;
    double threshold = 0.0;       // 1 - sqrt(lambda_k) - eta
    double violation_rate = 0.0;  // fraction of points with N(x) <= threshold
    bool vacuous = false;         // threshold <= 0
    std::string label = kPlugInLabel;
};

/// Empirical check of the projection-norm lower bound over a dataset, using
/// the top-k subspace of the model.
[[nodiscard]] inline EliminationReport elimination_diagnostic(const ProjectionModel& model, const Corpus& dataset,
                                                              std::size_t k, double xi = 3.0) {
    const std::size_t ks[] = {k};
    const DecayRow row = decay_report(model.spectrum, ks).front();
    EliminationReport out;
    out.k = k;
    out.lambda_k = row.lambda;
    out.delta_k = row.delta;
    if (row.zero_eigengap) throw NumericError("zero eigengap");
    out.eta = eta(row.delta, model.m(), xi);
    out.threshold = 1.0 - std::sqrt(row.lambda) - out.eta;
    if (out.threshold <= 0.0) {
        out.vacuous = true;
        return out;
    }
    if (dataset.empty()) return out;
    std::size_t violations = 0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (projection_norm(model, dataset.row(i), k) <= out.threshold) ++violations;
    }
    out.violation_rate = static_cast<double>(violations) / static_cast<double>(dataset.size());
    return out;
}

struct BoundRow {
    std::size_t k = 0;
    double xi = 0.0;
    double eps = 0.0;
    double lambda_k = 0.0;
    double delta_k = 0.0;
    bool zero_eigengap = false;
    BoundResult bound;
};

/// Bound values over a (k, eps) grid from a spectrum. Zero eigengaps are
/// flagged on the row instead of aborting the grid.
[[nodiscard]] inline std::vector<BoundRow> bound_grid(const Spectrum& spectrum, std::span<const std::size_t> ks,
                                                      double xi, std::span<const double> eps_values,
                                                      double kappa_star) {
    std::vector<BoundRow> rows;
    for (const DecayRow& d : decay_report(spectrum, ks)) {
        for (double eps : eps_values) {
            BoundRow row;
            row.k = d.k;
            row.xi = xi;
            row.eps = eps;
            row.lambda_k = d.lambda;
            row.delta_k = d.delta;
            row.zero_eigengap = d.zero_eigengap;
            if (!d.zero_eigengap) {
                BoundInputs in{d.lambda, d.delta, spectrum.size(), xi, eps, kappa_star};
                row.bound = klsh_bound(in);
            }
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace klsh

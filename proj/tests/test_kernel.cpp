#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "klsh/kernel.hpp"
#include "test_util.hpp"

using namespace klsh;

namespace {

const KernelSpec kChi2{BaseKernel::chi2, false, 1.0};
const KernelSpec kInter{BaseKernel::intersection, false, 1.0};

// Independent scalar oracle for the base kernels.
double oracle_base(BaseKernel base, const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (base == BaseKernel::chi2) {
            if (x[i] + y[i] != 0.0) s += 2.0 * x[i] * y[i] / (x[i] + y[i]);
        } else if (base == BaseKernel::intersection) {
            s += std::min(x[i], y[i]);
        } else {
            s += x[i] * y[i];
        }
    }
    return s;
}

std::vector<std::size_t> argsort_desc(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    return idx;
}

}  // namespace

TEST(EvalKernel, Chi2SelfSimilarityOfHistogramIsOne) {
    std::mt19937_64 rng(1);
    const auto h = fixtures::random_histogram(rng, 32, 0.3);
    EXPECT_NEAR(eval_kernel(kChi2, h, h), 1.0, 1e-14);
}

TEST(EvalKernel, IntersectionDisjointSupportIsZero) {
    const std::vector<double> x{1, 0}, y{0, 1};
    EXPECT_EQ(eval_kernel(kInter, x, y), 0.0);
}

TEST(EvalKernel, Chi2HandComputedValue) {
    const std::vector<double> x{0.5, 0.5}, y{1.0, 0.0};
    EXPECT_NEAR(eval_kernel(kChi2, x, y), 2.0 * 0.5 * 1.0 / 1.5, 1e-15);
    EXPECT_NEAR(eval_kernel(kChi2, x, y), 0.6667, 1e-4);
}

TEST(EvalKernel, ZeroBaseValueUnderScaleFive) {
    const std::vector<double> x{1, 0}, y{0, 1};
    const KernelSpec spec{BaseKernel::intersection, false, 5.0};
    EXPECT_NEAR(eval_kernel(spec, x, y), std::exp(-5.0), 1e-15);
    EXPECT_NEAR(eval_kernel(spec, x, y), 0.0067379, 1e-7);
}

TEST(EvalKernel, Chi2ZeroOverZeroContributesZero) {
    const std::vector<double> x{0.0, 1.0, 0.0}, y{0.0, 0.5, 0.5};
    const double v = eval_kernel(kChi2, x, y);
    EXPECT_FALSE(std::isnan(v));
    EXPECT_NEAR(v, 2.0 * 0.5 / 1.5, 1e-15);
}

TEST(EvalKernel, DimensionMismatchThrows) {
    const std::vector<double> x{0.5, 0.5}, y{1.0};
    EXPECT_THROW((void)eval_kernel(kChi2, x, y), ValidationError);
}

TEST(EvalKernel, ZeroVectorWithNormalizationIsDegenerate) {
    const std::vector<double> x{0.0, 0.0}, y{0.5, 0.5};
    const KernelSpec spec{BaseKernel::chi2, true, 1.0};
    try {
        (void)eval_kernel(spec, x, y);
        FAIL() << "expected an error";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("degenerate point"), std::string::npos);
    }
}

TEST(EvalKernel, NonPositiveScaleRejected) {
    const std::vector<double> x{0.5, 0.5};
    EXPECT_THROW((void)eval_kernel(KernelSpec{BaseKernel::chi2, false, 0.0}, x, x), ValidationError);
    EXPECT_THROW((void)eval_kernel(KernelSpec{BaseKernel::chi2, false, -1.0}, x, x), ValidationError);
}

TEST(EvalKernel, NormalizedLinearIsCosine) {
    const std::vector<double> x{3, 4}, y{4, 3};
    const KernelSpec spec{BaseKernel::linear, true, 1.0};
    EXPECT_NEAR(eval_kernel(spec, x, y), 24.0 / 25.0, 1e-15);
}

TEST(EvalKernel, TransformedSelfSimilarityIsOne) {
    std::mt19937_64 rng(2);
    const auto h = fixtures::random_histogram(rng, 16);
    for (double s : {0.5, 3.0, 9.0}) {
        EXPECT_NEAR(eval_kernel(KernelSpec{BaseKernel::chi2, true, s}, h, h), 1.0, 1e-15);
    }
}

TEST(EvalKernelProperty, ExchangeSymmetryIsExact) {
    std::mt19937_64 rng(3);
    for (auto base : {BaseKernel::chi2, BaseKernel::intersection, BaseKernel::linear}) {
        for (bool norm : {false, true}) {
            for (double s : {1.0, 4.0}) {
                const KernelSpec spec{base, norm, s};
                for (int trial = 0; trial < 50; ++trial) {
                    const auto x = fixtures::random_histogram(rng, 24, 0.4);
                    const auto y = fixtures::random_histogram(rng, 24, 0.4);
                    EXPECT_EQ(eval_kernel(spec, x, y), eval_kernel(spec, y, x));
                }
            }
        }
    }
}

TEST(EvalKernelProperty, ValuesInUnitIntervalForHistograms) {
    std::mt19937_64 rng(4);
    for (auto base : {BaseKernel::chi2, BaseKernel::intersection}) {
        for (double s : {1.0, 2.0, 8.0}) {
            const KernelSpec spec{base, false, s};
            for (int trial = 0; trial < 100; ++trial) {
                const auto x = fixtures::random_histogram(rng, 20, 0.5);
                const auto y = fixtures::random_histogram(rng, 20, 0.5);
                const double v = eval_kernel(spec, x, y);
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0 + 1e-15);
            }
        }
    }
}

TEST(EvalKernelProperty, NormalizationIdempotentOnHistograms) {
    std::mt19937_64 rng(5);
    for (auto base : {BaseKernel::chi2, BaseKernel::intersection}) {
        for (int trial = 0; trial < 200; ++trial) {
            const auto x = fixtures::random_histogram(rng, 40, 0.3);
            const auto y = fixtures::random_histogram(rng, 40, 0.3);
            const double plain = eval_kernel(KernelSpec{base, false, 1.0}, x, y);
            const double norm = eval_kernel(KernelSpec{base, true, 1.0}, x, y);
            EXPECT_NEAR(plain, norm, 1e-12);
        }
    }
}

TEST(EvalKernelProperty, MonotoneTransformPreservesRanking) {
    std::mt19937_64 rng(6);
    const auto q = fixtures::random_histogram(rng, 16, 0.2);
    std::vector<std::vector<double>> points;
    for (int i = 0; i < 300; ++i) points.push_back(fixtures::random_histogram(rng, 16, 0.2));
    points.push_back(points[10]);  // exact tie, broken by index
    std::vector<std::size_t> reference;
    for (double s : {1.0, 0.3, 3.0, 5.0, 9.0}) {
        std::vector<double> values;
        for (const auto& p : points) values.push_back(eval_kernel(KernelSpec{BaseKernel::chi2, false, s}, q, p));
        const auto order = argsort_desc(values);
        if (reference.empty()) {
            reference = order;
        } else {
            EXPECT_EQ(order, reference) << "s=" << s;
        }
    }
}

TEST(EvalKernelProperty, MatchesScalarOracle) {
    std::mt19937_64 rng(7);
    for (auto base : {BaseKernel::chi2, BaseKernel::intersection, BaseKernel::linear}) {
        for (int trial = 0; trial < 50; ++trial) {
            const auto x = fixtures::random_histogram(rng, 12, 0.3);
            const auto y = fixtures::random_histogram(rng, 12, 0.3);
            const double raw = oracle_base(base, x, y);
            EXPECT_NEAR(eval_kernel(KernelSpec{base, false, 1.0}, x, y), raw, 1e-15);
            const double normed = raw / std::sqrt(oracle_base(base, x, x) * oracle_base(base, y, y));
            EXPECT_NEAR(eval_kernel(KernelSpec{base, true, 2.5}, x, y), std::exp(2.5 * (normed - 1.0)), 1e-14);
        }
    }
}

TEST(KernelSpecTest, ParseBaseKernel) {
    EXPECT_EQ(parse_base_kernel("chi2"), BaseKernel::chi2);
    EXPECT_EQ(parse_base_kernel("intersection"), BaseKernel::intersection);
    EXPECT_EQ(parse_base_kernel("linear"), BaseKernel::linear);
    EXPECT_THROW((void)parse_base_kernel("rbf"), ValidationError);
    EXPECT_EQ(to_string(BaseKernel::intersection), "intersection");
}

TEST(Gram, SinglePoint) {
    const auto c = Corpus::from_rows({{0.25, 0.75}});
    const GramMatrix g = gram(kChi2, c);
    ASSERT_EQ(g.size(), 1);
    EXPECT_NEAR(g.entries(0, 0), 1.0, 1e-15);
    EXPECT_FALSE(g.centered);
}

TEST(Gram, IdenticalPointsGiveAllOnes) {
    const auto c = Corpus::from_rows({{0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}});
    const GramMatrix g = gram(KernelSpec{BaseKernel::chi2, true, 1.0}, c);
    EXPECT_TRUE(g.entries.isApprox(Eigen::MatrixXd::Ones(4, 4), 1e-14));
}

TEST(Gram, MatchesScalarEvaluationsEntrywise) {
    const Corpus c = fixtures::random_corpus(3, 10, 8, 0.2);
    for (const KernelSpec& spec : {kChi2, kInter, KernelSpec{BaseKernel::chi2, true, 3.0}}) {
        const GramMatrix g = gram(spec, c);
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                EXPECT_NEAR(g.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                            eval_kernel(spec, c.row(i), c.row(j)), 1e-15);
            }
        }
    }
}

TEST(Gram, NormalizedDiagonalIsExactlyOne) {
    const Corpus c = fixtures::random_corpus(40, 8, 9);
    const GramMatrix g = gram(KernelSpec{BaseKernel::linear, true, 2.0}, c);
    for (Eigen::Index i = 0; i < g.size(); ++i) EXPECT_EQ(g.entries(i, i), 1.0);
    EXPECT_EQ((g.entries - g.entries.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gram, ErrorCarriesOffendingIndex) {
    const auto c = Corpus::from_rows({{0.5, 0.5}, {0.0, 0.0}, {1.0, 0.0}});
    try {
        (void)gram(KernelSpec{BaseKernel::chi2, true, 1.0}, c);
        FAIL() << "expected an error";
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("degenerate point"), std::string::npos);
        EXPECT_NE(msg.find("index 1"), std::string::npos);
    }
}

TEST(Gram, EmptyRejected) {
    EXPECT_THROW((void)gram(kChi2, Corpus{}), ValidationError);
}

TEST(Gram, IndependentOfParallelChunking) {
    // large enough to split over several workers when threads are available
    const Corpus c = fixtures::random_corpus(150, 16, 10, 0.2);
    const GramMatrix g = gram(kChi2, c);
    for (std::size_t i = 0; i < c.size(); i += 7) {
        for (std::size_t j = 0; j < c.size(); j += 5) {
            EXPECT_EQ(g.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                      eval_kernel(kChi2, c.row(i), c.row(j)));
        }
    }
}

TEST(Center, AllOnesBecomesZero) {
    const GramMatrix ones{Eigen::MatrixXd::Ones(5, 5), false};
    const GramMatrix c = center(ones);
    EXPECT_TRUE(c.centered);
    EXPECT_LT(c.entries.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Center, IdentityTwoByTwo) {
    const GramMatrix c = center(GramMatrix{Eigen::MatrixXd::Identity(2, 2), false});
    Eigen::MatrixXd expected(2, 2);
    expected << 0.5, -0.5, -0.5, 0.5;
    EXPECT_LT((c.entries - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Center, MatchesExplicitHKHAndHasZeroRowSums) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n01;
    Eigen::MatrixXd a(5, 5);
    for (Eigen::Index i = 0; i < 5; ++i)
        for (Eigen::Index j = 0; j < 5; ++j) a(i, j) = n01(rng);
    const Eigen::MatrixXd k = a * a.transpose();
    const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(5, 5) - Eigen::MatrixXd::Constant(5, 5, 1.0 / 5.0);
    const Eigen::MatrixXd oracle = h * k * h;
    const GramMatrix c = center(GramMatrix{k, false});
    EXPECT_LT((c.entries - oracle).cwiseAbs().maxCoeff(), 1e-12);
    for (Eigen::Index i = 0; i < 5; ++i) {
        EXPECT_LT(std::abs(c.entries.row(i).sum()), 1e-8 * 5);
        EXPECT_LT(std::abs(c.entries.col(i).sum()), 1e-8 * 5);
    }
    EXPECT_EQ((c.entries - c.entries.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Center, Idempotent) {
    const Corpus pts = fixtures::random_corpus(30, 12, 12);
    const GramMatrix once = center(gram(kChi2, pts));
    const GramMatrix twice = center(once);
    EXPECT_LT((once.entries - twice.entries).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Center, CenteredGramIsPositiveSemidefinite) {
    const Corpus pts = fixtures::random_corpus(40, 6, 13, 0.3);
    for (const KernelSpec& spec : {kChi2, kInter, KernelSpec{BaseKernel::chi2, true, 5.0}}) {
        const GramMatrix c = center(gram(spec, pts));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.entries);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8 * es.eigenvalues().maxCoeff());
    }
}

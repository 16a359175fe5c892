#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "klsh/datasets.hpp"
#include "klsh/hashing.hpp"
#include "test_util.hpp"

using namespace klsh;

namespace {

const KernelSpec kChi2{BaseKernel::chi2, false, 1.0};

Eigen::MatrixXd svd_power(const Eigen::MatrixXd& k, Eigen::Index r, double power) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(k, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::MatrixXd u = svd.matrixU().leftCols(r);
    Eigen::VectorXd d = svd.singularValues().head(r);
    for (Eigen::Index i = 0; i < r; ++i) d[i] = std::pow(d[i], power);
    return u * d.asDiagonal() * u.transpose();
}

HashCode random_code(std::mt19937_64& rng, std::size_t bits) {
    HashCode c(bits);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < bits; ++i)
        if (coin(rng)) c.set(i);
    return c;
}

}  // namespace

TEST(Hamming, EqualCodesAreZero) {
    std::mt19937_64 rng(41);
    const HashCode a = random_code(rng, 256);
    EXPECT_EQ(hamming(a, a), 0u);
}

TEST(Hamming, ComplementIsFullLength) {
    std::mt19937_64 rng(42);
    const HashCode a = random_code(rng, 256);
    HashCode b(256);
    for (std::size_t i = 0; i < 256; ++i)
        if (!a.get(i)) b.set(i);
    EXPECT_EQ(hamming(a, b), 256u);
}

TEST(Hamming, MatchesNaiveBitLoop) {
    std::mt19937_64 rng(43);
    for (std::size_t bits : {1u, 7u, 64u, 65u, 200u, 256u, 1000u}) {
        for (int trial = 0; trial < 20; ++trial) {
            const HashCode a = random_code(rng, bits);
            const HashCode b = random_code(rng, bits);
            std::size_t naive = 0;
            for (std::size_t i = 0; i < bits; ++i) naive += a.get(i) != b.get(i) ? 1 : 0;
            EXPECT_EQ(hamming(a, b), naive);
            EXPECT_LE(hamming(a, b), bits);
        }
    }
}

TEST(Hamming, LengthMismatchThrows) {
    EXPECT_THROW((void)hamming(HashCode(64), HashCode(65)), ValidationError);
}

TEST(HashCodeTest, SignZeroMapsToOneAndPaddingStaysZero) {
    const std::vector<double> p{0.0, -1.0, 2.0, -0.0, -1e-300};
    const HashCode c = code_from_projections(p);
    EXPECT_EQ(c.bits, 5u);
    EXPECT_TRUE(c.get(0));
    EXPECT_FALSE(c.get(1));
    EXPECT_TRUE(c.get(2));
    EXPECT_TRUE(c.get(3));
    EXPECT_FALSE(c.get(4));
    EXPECT_EQ(c.words[0] >> 5, 0u);
}

TEST(TrainBank, TwoAnchorsOneBitGivesColumnOfInverseSqrt) {
    const auto c = Corpus::from_rows({{0.7, 0.2, 0.1}, {0.1, 0.3, 0.6}});
    BankConfig cfg;
    cfg.m = 2;
    cfg.t = 1;
    cfg.bits = 1;
    cfg.seed = 5;
    const HashBank bank = train_bank(c, kChi2, cfg);
    ASSERT_EQ(bank.subsets.size(), 1u);
    ASSERT_EQ(bank.subsets[0].size(), 1u);
    EXPECT_EQ(bank.model.numeric_rank(), 1u);
    const Eigen::MatrixXd kc = center(gram(kChi2, bank.model.anchors)).entries;
    const Eigen::MatrixXd inv_sqrt = svd_power(kc, 1, -0.5);
    const Eigen::VectorXd expected = inv_sqrt.col(bank.subsets[0][0]);
    EXPECT_LT((bank.weights.row(0).transpose() - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(TrainBank, DefaultsMatchPaperProtocol) {
    const BankConfig cfg;
    EXPECT_EQ(cfg.m, 1000u);
    EXPECT_EQ(cfg.t, 50u);
    EXPECT_EQ(cfg.bits, 256u);
    EXPECT_EQ(cfg.variant, HashVariant::clt);
    EXPECT_FALSE(cfg.rank.has_value());
}

TEST(TrainBank, SeedDeterminism) {
    const Corpus c = fixtures::random_corpus(120, 16, 44, 0.2);
    for (HashVariant v : {HashVariant::clt, HashVariant::gaussian}) {
        BankConfig cfg;
        cfg.m = 60;
        cfg.t = 10;
        cfg.bits = 32;
        cfg.variant = v;
        cfg.seed = 7;
        const HashBank a = train_bank(c, kChi2, cfg);
        const HashBank b = train_bank(c, kChi2, cfg);
        EXPECT_EQ(a.weights, b.weights);
        EXPECT_EQ(a.subsets, b.subsets);
        EXPECT_EQ(a.model.anchors.ids, b.model.anchors.ids);
        cfg.seed = 8;
        const HashBank d = train_bank(c, kChi2, cfg);
        for (Eigen::Index l = 0; l < a.weights.rows(); ++l) {
            if (a.weights.cols() == d.weights.cols()) {
                EXPECT_NE(a.weights.row(l), d.weights.row(l));
            }
        }
        EXPECT_NE(a.model.anchors.ids, d.model.anchors.ids);
    }
}

TEST(TrainBank, SubsetsAreDistinctWithinEachBit) {
    const Corpus c = fixtures::random_corpus(80, 12, 45);
    BankConfig cfg;
    cfg.m = 40;
    cfg.t = 30;
    cfg.bits = 64;
    const HashBank bank = train_bank(c, kChi2, cfg);
    ASSERT_EQ(bank.subsets.size(), 64u);
    for (const auto& s : bank.subsets) {
        EXPECT_EQ(s.size(), 30u);
        EXPECT_EQ(std::set<std::uint32_t>(s.begin(), s.end()).size(), 30u);
        for (auto j : s) EXPECT_LT(j, 40u);
    }
}

TEST(TrainBank, CltWeightsLieInTopEigenspace) {
    const Corpus c = fixtures::random_corpus(100, 20, 46, 0.3);
    BankConfig cfg;
    cfg.m = 50;
    cfg.t = 10;
    cfg.bits = 16;
    cfg.rank = 8;
    const HashBank bank = train_bank(c, kChi2, cfg);
    EXPECT_EQ(bank.model.rank, 8u);
    EXPECT_EQ(bank.weights.rows(), 16);
    EXPECT_EQ(bank.weights.cols(), 50);
    const Eigen::MatrixXd u = bank.model.spectrum.vectors.leftCols(8);
    for (Eigen::Index l = 0; l < bank.weights.rows(); ++l) {
        const Eigen::VectorXd w = bank.weights.row(l).transpose();
        EXPECT_LT((w - u * (u.transpose() * w)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(TrainBank, GaussianWeightsAreStandardNormal) {
    const Corpus c = fixtures::random_corpus(100, 20, 47);
    BankConfig cfg;
    cfg.m = 60;
    cfg.bits = 2000;
    cfg.variant = HashVariant::gaussian;
    cfg.rank = 20;
    const HashBank bank = train_bank(c, kChi2, cfg);
    EXPECT_EQ(bank.weights.rows(), 2000);
    EXPECT_EQ(bank.weights.cols(), 20);
    const double n = static_cast<double>(bank.weights.size());
    const double mean = bank.weights.mean();
    const double var = (bank.weights.array() - mean).square().sum() / n;
    EXPECT_LT(std::abs(mean), 5.0 / std::sqrt(n));
    EXPECT_LT(std::abs(var - 1.0), 0.03);
}

TEST(TrainBank, RejectsInvalidConfigurations) {
    const Corpus c = fixtures::random_corpus(30, 8, 48);
    BankConfig cfg;
    cfg.m = 20;
    cfg.t = 20;
    EXPECT_THROW((void)train_bank(c, kChi2, cfg), ValidationError);
    cfg.t = 5;
    cfg.m = 31;
    EXPECT_THROW((void)train_bank(c, kChi2, cfg), ValidationError);
    cfg.m = 20;
    cfg.rank = 0;
    EXPECT_THROW((void)train_bank(c, kChi2, cfg), ValidationError);
    cfg.rank.reset();
    cfg.bits = 0;
    EXPECT_THROW((void)train_bank(c, kChi2, cfg), ValidationError);
    cfg.bits = 8;
    cfg.embedding = EmbeddingVariant::nystrom;
    EXPECT_THROW((void)train_bank(c, kChi2, cfg), ValidationError);
}

TEST(HashPoint, GaussianZeroEmbeddingHashesToAllOnes) {
    const Corpus c = fixtures::random_corpus(30, 8, 49);
    BankConfig cfg;
    cfg.m = 20;
    cfg.bits = 100;
    cfg.variant = HashVariant::gaussian;
    const HashBank bank = train_bank(c, kChi2, cfg);
    const HashCode code = hash_kernel_vector(bank, Eigen::VectorXd::Zero(20));
    for (std::size_t i = 0; i < 100; ++i) EXPECT_TRUE(code.get(i));
}

TEST(HashPoint, Pure) {
    const Corpus c = fixtures::random_corpus(60, 8, 50);
    BankConfig cfg;
    cfg.m = 30;
    cfg.t = 10;
    cfg.bits = 128;
    const HashBank bank = train_bank(c, kChi2, cfg);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(hash_point(bank, c.row(i)), hash_point(bank, c.row(i)));
}

TEST(HashPoint, CltBitsMatchDenseOracle) {
    const Corpus c = fixtures::random_corpus(50, 24, 51, 0.3);
    const Corpus q = fixtures::random_corpus(40, 24, 52, 0.3);
    for (std::optional<std::size_t> rank : {std::optional<std::size_t>{}, std::optional<std::size_t>{12}}) {
        BankConfig cfg;
        cfg.m = 50;
        cfg.t = 15;
        cfg.bits = 64;
        cfg.rank = rank;
        const HashBank bank = train_bank(c, kChi2, cfg);
        const Eigen::MatrixXd kc = center(gram(kChi2, bank.model.anchors)).entries;
        const Eigen::MatrixXd inv_sqrt = svd_power(kc, static_cast<Eigen::Index>(bank.model.rank), -0.5);
        std::size_t compared = 0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            const HashCode code = hash_point(bank, q.row(i));
            Eigen::VectorXd k(50);
            for (std::size_t j = 0; j < 50; ++j) k[static_cast<Eigen::Index>(j)] = eval_kernel(kChi2, q.row(i), bank.model.anchors.row(j));
            for (std::size_t l = 0; l < 64; ++l) {
                Eigen::VectorXd e = Eigen::VectorXd::Zero(50);
                for (auto j : bank.subsets[l]) e[j] = 1.0;
                const double proj = e.dot(inv_sqrt * k);
                if (std::abs(proj) < 1e-9) continue;
                EXPECT_EQ(code.get(l), proj >= 0.0);
                ++compared;
            }
        }
        EXPECT_GT(compared, 2000u);
    }
}

TEST(HashPoint, CenteredQueriesMatchBlockPath) {
    const Corpus c = fixtures::random_corpus(60, 12, 53);
    for (HashVariant v : {HashVariant::clt, HashVariant::gaussian}) {
        BankConfig cfg;
        cfg.m = 30;
        cfg.t = 10;
        cfg.bits = 70;
        cfg.variant = v;
        cfg.center_queries = true;
        const HashBank bank = train_bank(c, kChi2, cfg);
        const Eigen::MatrixXd proj = project_kernel_block(bank, bank.model.kernel_block(c, 0, c.size()));
        for (std::size_t i = 0; i < c.size(); ++i) {
            std::vector<double> col(proj.col(static_cast<Eigen::Index>(i)).data(),
                                    proj.col(static_cast<Eigen::Index>(i)).data() + proj.rows());
            EXPECT_EQ(code_from_projections(col), hash_point(bank, c.row(i)));
        }
    }
}

TEST(HashPointProperty, GaussianCollisionLawSmall) {
    const auto synth = synth_histograms(300, 32, 10, 20.0, 54);
    BankConfig cfg;
    cfg.m = 150;
    cfg.bits = 20000;
    cfg.variant = HashVariant::gaussian;
    const HashBank bank = train_bank(synth.corpus, kChi2, cfg);
    std::mt19937_64 rng(55);
    std::uniform_int_distribution<std::size_t> pick(0, synth.corpus.size() - 1);
    int checked = 0;
    for (int p = 0; p < 10; ++p) {
        const std::size_t a = pick(rng), b = pick(rng);
        const Eigen::VectorXd ea = embed(bank.model, synth.corpus.row(a));
        const Eigen::VectorXd eb = embed(bank.model, synth.corpus.row(b));
        const double cosine = ea.dot(eb) / (ea.norm() * eb.norm());
        if (std::abs(cosine) > 0.99) continue;
        const double expected = 1.0 - std::acos(cosine) / std::numbers::pi;
        const HashCode ha = hash_point(bank, synth.corpus.row(a));
        const HashCode hb = hash_point(bank, synth.corpus.row(b));
        const double agree = 1.0 - static_cast<double>(hamming(ha, hb)) / 20000.0;
        EXPECT_LE(std::abs(agree - expected), 0.015);
        ++checked;
    }
    EXPECT_GT(checked, 5);
}

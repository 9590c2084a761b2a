#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ddsp/mdn.hpp"

using namespace ddsp;

namespace {

// Reference formulas written out directly, without the library helpers.
double ref_normal(double x, double mu, double s) {
    const double z = (x - mu) / s;
    return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
}

double ref_pdf(double x, const GmmParams& p) {
    double v = 0.0;
    for (std::size_t k = 0; k < p.components(); ++k) v += p.weights[k] * ref_normal(x, p.means[k], p.stds[k]);
    return v;
}

GmmParams random_params(std::mt19937_64& rng, std::size_t k) {
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::vector<double> raw(3 * k);
    for (auto& r : raw) r = u(rng);
    return mdn_transform(raw, k);
}

}  // namespace

TEST(MdnTransform, ZeroRawGivesUniformWeightsAndLn2Stds) {
    const std::vector<double> raw(9, 0.0);
    const GmmParams p = mdn_transform(raw, 3);
    for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(p.weights[k], 1.0 / 3.0, 1e-15);
        EXPECT_EQ(p.means[k], 0.0);
        EXPECT_NEAR(p.stds[k], std::log(2.0) + kSigmaFloor, 1e-15);
    }
}

TEST(MdnTransform, LogitShiftLeavesWeightsUnchanged) {
    std::vector<double> raw = {0.3, -1.2, 2.0, 1, 2, 3, 0.1, 0.2, 0.3};
    const GmmParams a = mdn_transform(raw, 3);
    for (int k = 0; k < 3; ++k) raw[k] += 17.5;
    const GmmParams b = mdn_transform(raw, 3);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(a.weights[k], b.weights[k], 1e-14);
}

TEST(MdnTransform, MatchesDirectSoftmaxSoftplus) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 4.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> raw(9);
        for (auto& r : raw) r = n(rng);
        const GmmParams p = mdn_transform(raw, 3);
        double denom = 0.0;
        for (int k = 0; k < 3; ++k) denom += std::exp(raw[k]);
        double sum = 0.0;
        for (int k = 0; k < 3; ++k) {
            EXPECT_NEAR(p.weights[k], std::exp(raw[k]) / denom, 1e-12);
            EXPECT_EQ(p.means[k], raw[3 + k]);
            EXPECT_NEAR(p.stds[k], std::log1p(std::exp(raw[6 + k])) + kSigmaFloor, 1e-12);
            EXPECT_GE(p.stds[k], kSigmaFloor);
            sum += p.weights[k];
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(MdnTransform, ExtremeRawStaysValid) {
    const std::vector<double> raw = {800, -800, 0, 1e6, -1e6, 0, -900, 900, -40};
    const GmmParams p = mdn_transform(raw, 3);
    EXPECT_NO_THROW(p.validate(kSigmaFloor));
    EXPECT_NEAR(p.weights[0], 1.0, 1e-12);
    EXPECT_NEAR(p.stds[1], 900.0 + kSigmaFloor, 1e-9);
}

TEST(MdnTransform, WrongLengthThrows) {
    const std::vector<double> raw(8, 0.0);
    EXPECT_THROW(mdn_transform(raw, 3), std::invalid_argument);
}

TEST(GmmPdf, StandardNormalPeak) {
    const GmmParams p{{1.0}, {0.0}, {1.0}};
    EXPECT_NEAR(gmm_pdf(0.0, p), 0.3989422804014327, 1e-15);
}

TEST(GmmPdf, TwoComponentMatchesDirectSum) {
    const GmmParams p{{0.5, 0.5}, {-1.0, 1.0}, {1.0, 1.0}};
    const double expect = 0.5 * ref_normal(0.0, -1.0, 1.0) + 0.5 * ref_normal(0.0, 1.0, 1.0);
    EXPECT_NEAR(gmm_pdf(0.0, p), expect, 1e-15);
}

TEST(GmmPdf, RandomPointsMatchReference) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-6.0, 6.0);
    for (int i = 0; i < 100; ++i) {
        const GmmParams p = random_params(rng, 3);
        const double x = u(rng);
        EXPECT_NEAR(gmm_pdf(x, p), ref_pdf(x, p), 1e-12 * std::max(1.0, ref_pdf(x, p)));
    }
}

TEST(GmmPdf, TrapezoidIntegralIsOne) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const GmmParams p = random_params(rng, 3);
        double lo = 1e300, hi = -1e300, smin = 1e300;
        for (std::size_t k = 0; k < 3; ++k) {
            lo = std::min(lo, p.means[k] - 10.0 * p.stds[k]);
            hi = std::max(hi, p.means[k] + 10.0 * p.stds[k]);
            smin = std::min(smin, p.stds[k]);
        }
        const std::size_t n = static_cast<std::size_t>(std::ceil((hi - lo) / (smin / 50.0)));
        const double h = (hi - lo) / static_cast<double>(n);
        double s = 0.5 * (gmm_pdf(lo, p) + gmm_pdf(hi, p));
        for (std::size_t j = 1; j < n; ++j) s += gmm_pdf(lo + h * static_cast<double>(j), p);
        EXPECT_NEAR(s * h, 1.0, 1e-6);
    }
}

TEST(GmmNll, PeakOfSingleGaussian) {
    const GmmParams p{{1.0}, {2.5}, {0.7}};
    const std::vector<double> t = {2.5};
    const std::vector<GmmParams> ps = {p};
    EXPECT_NEAR(gmm_nll(t, ps), std::log(0.7 * std::sqrt(2.0 * std::numbers::pi)), 1e-14);
}

TEST(GmmNll, FarTailIsFinite) {
    const GmmParams p{{0.5, 0.5}, {0.0, 1.0}, {kSigmaFloor, kSigmaFloor}};
    const std::vector<double> t = {1e4};
    const std::vector<GmmParams> ps = {p};
    const double v = gmm_nll(t, ps);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 1e12);
}

TEST(GmmNll, BatchEqualsMeanOfPointwise) {
    std::mt19937_64 rng(9);
    std::vector<GmmParams> ps;
    std::vector<double> t;
    double sum = 0.0;
    for (int i = 0; i < 5; ++i) {
        ps.push_back(random_params(rng, 3));
        t.push_back(0.5 * i - 1.0);
        sum += -std::log(ref_pdf(t.back(), ps.back()));
    }
    EXPECT_NEAR(gmm_nll(t, ps), sum / 5.0, 1e-12);
}

TEST(GmmNll, RawGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> raw(9);
        for (auto& r : raw) r = n(rng);
        const double x = 2.0 * n(rng);
        auto f = [&](const std::vector<double>& r) { return -std::log(ref_pdf(x, mdn_transform(r, 3))); };
        std::vector<double> g(9);
        gmm_nll_raw_gradient(x, mdn_transform(raw, 3), raw, g);
        for (int j = 0; j < 9; ++j) {
            auto rp = raw, rm = raw;
            rp[j] += 1e-6;
            rm[j] -= 1e-6;
            const double fd = (f(rp) - f(rm)) / 2e-6;
            EXPECT_NEAR(g[j], fd, 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST(GmmParams, MomentsMatchSampling) {
    const GmmParams p{{0.2, 0.5, 0.3}, {-2.0, 1.0, 4.0}, {0.5, 1.5, 0.8}};
    std::mt19937_64 rng(17);
    std::discrete_distribution<std::size_t> pick(p.weights.begin(), p.weights.end());
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const std::size_t k = pick(rng);
        const double x = std::normal_distribution<double>(p.means[k], p.stds[k])(rng);
        s += x;
        s2 += x * x;
    }
    const double m = s / n;
    const double v = s2 / n - m * m;
    const double se_mean = std::sqrt(p.variance() / n);
    EXPECT_NEAR(m, p.mean(), 3.0 * se_mean);
    // Variance standard error via the fourth moment bound for this mixture.
    EXPECT_NEAR(v, p.variance(), 3.0 * p.variance() * std::sqrt(2.0 / n) * 2.0);
}

TEST(GmmParams, JsonRoundTrip) {
    const GmmParams p{{0.25, 0.75}, {1.0, -3.0}, {0.5, 2.0}};
    const nlohmann::json j = p;
    EXPECT_EQ(j.at("K"), 2);
    const GmmParams q = j.get<GmmParams>();
    EXPECT_EQ(q.weights, p.weights);
    EXPECT_EQ(q.means, p.means);
    EXPECT_EQ(q.stds, p.stds);
}

TEST(GmmParams, ValidateRejectsBrokenSimplex) {
    EXPECT_THROW((GmmParams{{0.5, 0.6}, {0, 0}, {1, 1}}.validate()), std::invalid_argument);
    EXPECT_THROW((GmmParams{{1.0}, {0}, {1e-5}}.validate(kSigmaFloor)), std::invalid_argument);
}

TEST(GmmParams, AffineShiftsAndScales) {
    const GmmParams p{{0.4, 0.6}, {1.0, 2.0}, {0.5, 1.0}};
    const GmmParams q = p.affine(3.0, 10.0);
    EXPECT_DOUBLE_EQ(q.means[1], 16.0);
    EXPECT_DOUBLE_EQ(q.stds[0], 1.5);
    EXPECT_NEAR(q.mean(), 3.0 * p.mean() + 10.0, 1e-12);
}

TEST(LogSumExp, StableForLargeValues) {
    const std::vector<double> v = {1000.0, 1000.0};
    EXPECT_NEAR(log_sum_exp(v), 1000.0 + std::log(2.0), 1e-12);
    EXPECT_EQ(log_sum_exp(std::span<const double>{}), -std::numeric_limits<double>::infinity());
}

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "ddsp/gmm_em.hpp"
#include "oracles.hpp"

using namespace ddsp;

namespace {

std::vector<double> bimodal(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = (coin(rng) ? 5.0 : -5.0) + nd(rng);
    return x;
}

GmmParams sorted(GmmParams p) {
    std::vector<std::size_t> idx(p.components());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return p.means[a] < p.means[b]; });
    GmmParams q;
    for (auto i : idx) {
        q.weights.push_back(p.weights[i]);
        q.means.push_back(p.means[i]);
        q.stds.push_back(p.stds[i]);
    }
    return q;
}

const std::vector<double> kFive = {-1.2, 0.3, 0.9, 2.4, 3.1};
const GmmParams kTwo{{0.3, 0.7}, {0.0, 2.5}, {1.0, 0.8}};

}  // namespace

TEST(EStep, SingleComponentIsOne) {
    const Responsibilities r = e_step(kFive, GmmParams{{1.0}, {0.0}, {2.0}});
    for (std::size_t n = 0; n < 5; ++n) EXPECT_DOUBLE_EQ(r(n, 0), 1.0);
}

TEST(EStep, IdenticalComponentsGiveWeights) {
    const Responsibilities r = e_step(kFive, GmmParams{{0.2, 0.8}, {1.0, 1.0}, {1.5, 1.5}});
    for (std::size_t n = 0; n < 5; ++n) {
        EXPECT_NEAR(r(n, 0), 0.2, 1e-14);
        EXPECT_NEAR(r(n, 1), 0.8, 1e-14);
    }
}

TEST(EStep, HandCaseMatchesDirectFormula) {
    const Responsibilities r = e_step(kFive, kTwo);
    for (std::size_t n = 0; n < 5; ++n) {
        const double a = 0.3 * oracle::normal_pdf(kFive[n], 0.0, 1.0);
        const double b = 0.7 * oracle::normal_pdf(kFive[n], 2.5, 0.8);
        EXPECT_NEAR(r(n, 0), a / (a + b), 1e-13);
        EXPECT_NEAR(r(n, 0) + r(n, 1), 1.0, 1e-12);
    }
}

TEST(EStep, FarOutlierStaysNormalized) {
    const std::vector<double> x = {1e5};
    const Responsibilities r = e_step(x, kTwo);
    EXPECT_NEAR(r(0, 0) + r(0, 1), 1.0, 1e-12);
    // The wider component dominates far in the tail.
    EXPECT_NEAR(r(0, 0), 1.0, 1e-12);
}

TEST(MStep, SingleComponentClosedForm) {
    Responsibilities r{5, 1, std::vector<double>(5, 1.0)};
    const GmmParams p = m_step(kFive, r);
    double m = 0.0;
    for (double v : kFive) m += v / 5.0;
    double var = 0.0;
    for (double v : kFive) var += (v - m) * (v - m) / 5.0;
    EXPECT_NEAR(p.means[0], m, 1e-14);
    EXPECT_NEAR(p.stds[0], std::sqrt(var), 1e-14);
    EXPECT_DOUBLE_EQ(p.weights[0], 1.0);
}

TEST(MStep, HardAssignmentGivesClusterMoments) {
    Responsibilities r{5, 2, {1, 0, 1, 0, 0, 1, 0, 1, 0, 1}};
    const GmmParams p = m_step(kFive, r);
    EXPECT_NEAR(p.means[0], (-1.2 + 0.3) / 2.0, 1e-14);
    EXPECT_NEAR(p.means[1], (0.9 + 2.4 + 3.1) / 3.0, 1e-14);
    EXPECT_NEAR(p.weights[0], 0.4, 1e-14);
    EXPECT_NEAR(p.stds[0], 0.75, 1e-14);
}

TEST(MStep, SoftCaseMatchesWeightedMoments) {
    const std::vector<double> x = {-3, -2.5, -1, 0, 0.5, 1, 2, 2.2, 4, 5};
    const GmmParams init{{0.5, 0.5}, {-1.0, 2.0}, {1.0, 1.5}};
    const Responsibilities r = e_step(x, init);
    const GmmParams p = m_step(x, r);
    for (std::size_t k = 0; k < 2; ++k) {
        double nk = 0, s = 0;
        for (std::size_t n = 0; n < x.size(); ++n) {
            const double a = init.weights[k] * oracle::normal_pdf(x[n], init.means[k], init.stds[k]);
            const double b = init.weights[1 - k] * oracle::normal_pdf(x[n], init.means[1 - k], init.stds[1 - k]);
            const double g = a / (a + b);
            nk += g;
            s += g * x[n];
        }
        const double mu = s / nk;
        double v = 0;
        for (std::size_t n = 0; n < x.size(); ++n) {
            const double a = init.weights[k] * oracle::normal_pdf(x[n], init.means[k], init.stds[k]);
            const double b = init.weights[1 - k] * oracle::normal_pdf(x[n], init.means[1 - k], init.stds[1 - k]);
            v += a / (a + b) * (x[n] - mu) * (x[n] - mu);
        }
        EXPECT_NEAR(p.means[k], mu, 1e-12);
        EXPECT_NEAR(p.stds[k], std::sqrt(v / nk), 1e-12);
        EXPECT_NEAR(p.weights[k], nk / 10.0, 1e-12);
    }
}

TEST(MStep, EmptyComponentIsRescued) {
    Responsibilities r{5, 2, {1, 0, 1, 0, 1, 0, 1, 0, 1, 0}};
    bool rescued = false;
    const GmmParams p = m_step(kFive, r, kSigmaFloor, &rescued);
    EXPECT_TRUE(rescued);
    EXPECT_NO_THROW(p.validate(kSigmaFloor));
    for (double m : p.means) EXPECT_TRUE(std::isfinite(m));
}

TEST(MStep, VarianceFloored) {
    const std::vector<double> x = {2.0, 2.0, 2.0};
    Responsibilities r{3, 1, {1, 1, 1}};
    EXPECT_DOUBLE_EQ(m_step(x, r).stds[0], kSigmaFloor);
}

TEST(LogLikelihood, StandardNormalAtZero) {
    const std::vector<double> x = {0.0};
    EXPECT_NEAR(log_likelihood(x, GmmParams{{1.0}, {0.0}, {1.0}}), -0.5 * std::log(2.0 * std::numbers::pi), 1e-15);
}

TEST(LogLikelihood, HandCaseAndNllConsistency) {
    double direct = 0.0;
    for (double v : kFive) {
        direct += std::log(0.3 * oracle::normal_pdf(v, 0.0, 1.0) + 0.7 * oracle::normal_pdf(v, 2.5, 0.8));
    }
    EXPECT_NEAR(log_likelihood(kFive, kTwo), direct, 1e-12);
    const std::vector<GmmParams> ps(5, kTwo);
    EXPECT_NEAR(log_likelihood(kFive, kTwo), -5.0 * gmm_nll(kFive, ps), 1e-12);
}

TEST(EmRun, SingleGaussianConvergesToSampleMoments) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(3.0, 2.0);
    std::vector<double> x(500);
    for (auto& v : x) v = nd(rng);
    const EmState s = em_run(x, GmmParams{{1.0}, {0.0}, {1.0}}, 1e-9, 100);
    double m = 0, v2 = 0;
    for (double v : x) m += v / 500.0;
    for (double v : x) v2 += (v - m) * (v - m) / 500.0;
    EXPECT_NEAR(s.params.means[0], m, 1e-12);
    EXPECT_NEAR(s.params.stds[0], std::sqrt(v2), 1e-12);
    EXPECT_LE(s.iteration, 2);
    EXPECT_TRUE(s.converged);
}

TEST(EmRun, ZeroIterationsReturnsInit) {
    const EmState s = em_run(kFive, kTwo, 1e-6, 0);
    EXPECT_EQ(s.iteration, 0);
    EXPECT_EQ(s.params.means, kTwo.means);
}

TEST(EmRun, TraceIsMonotone) {
    const auto x = bimodal(2000, 3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const EmState s = em_run(x, em_initialize(x, 3, seed), 1e-10, 300);
        ASSERT_TRUE(s.rescues.empty());
        for (std::size_t i = 1; i < s.trace.size(); ++i) EXPECT_GE(s.trace[i], s.trace[i - 1] - 1e-8);
    }
}

TEST(EmRun, ResponsibilitiesStayStochastic) {
    const auto x = bimodal(300, 4);
    const EmState s = em_run(x, em_initialize(x, 2, 1), 1e-8, 50);
    double total = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double row = s.responsibilities(n, 0) + s.responsibilities(n, 1);
        EXPECT_NEAR(row, 1.0, 1e-9);
        total += row;
    }
    EXPECT_NEAR(total, 300.0, 1e-6);
}

TEST(EmRun, ConvergedStateIsFixedPoint) {
    const auto x = bimodal(1000, 8);
    const EmState s = em_run(x, em_initialize(x, 2, 2), 1e-10, 1000);
    const GmmParams again = m_step(x, e_step(x, s.params));
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_NEAR(again.means[k], s.params.means[k], 1e-4);
        EXPECT_NEAR(again.weights[k], s.params.weights[k], 1e-4);
    }
}

TEST(EmFit, RecoversBimodalMixture) {
    const auto x = bimodal(2000, 1);
    EmOptions o;
    o.components = 2;
    o.seed = 13;
    const EmFit f = em_fit(x, o);
    const GmmParams p = sorted(f.best.params);
    EXPECT_NEAR(p.means[0], -5.0, 0.15);
    EXPECT_NEAR(p.means[1], 5.0, 0.15);
    EXPECT_NEAR(p.weights[0], 0.5, 0.05);
    EXPECT_EQ(f.restarts, 5);
    EXPECT_EQ(f.restart_log_likelihoods.size(), 5u);
    EXPECT_EQ(f.best.log_likelihood, *std::max_element(f.restart_log_likelihoods.begin(), f.restart_log_likelihoods.end()));
}

TEST(EmFit, PermutedInitializationsAgree) {
    const auto x = bimodal(1500, 6);
    const GmmParams a0{{0.5, 0.5}, {-1.0, 1.0}, {2.0, 2.0}};
    const GmmParams b0{{0.5, 0.5}, {1.0, -1.0}, {2.0, 2.0}};
    const GmmParams a = sorted(em_run(x, a0, 1e-10, 1000).params);
    const GmmParams b = sorted(em_run(x, b0, 1e-10, 1000).params);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_NEAR(a.means[k], b.means[k], 1e-6);
        EXPECT_NEAR(a.stds[k], b.stds[k], 1e-6);
        EXPECT_NEAR(a.weights[k], b.weights[k], 1e-6);
    }
}

TEST(EmFit, RejectsTooFewPointsAndNonFinite) {
    EmOptions o;
    o.components = 3;
    const std::vector<double> two = {1.0, 2.0};
    EXPECT_THROW(em_fit(two, o), std::invalid_argument);
    const std::vector<double> bad = {1.0, std::nan(""), 2.0, 3.0};
    EXPECT_THROW(em_fit(bad, o), std::invalid_argument);
}

TEST(EmFit, RecordHasTraceAndSeed) {
    const auto x = bimodal(200, 2);
    EmOptions o;
    o.components = 2;
    o.seed = 99;
    const nlohmann::json j = fit_record(em_fit(x, o));
    EXPECT_EQ(j.at("seed"), 99);
    EXPECT_EQ(j.at("restarts"), 5);
    EXPECT_TRUE(j.contains("trace"));
    EXPECT_TRUE(j.contains("params"));
    EXPECT_TRUE(j.contains("iterations"));
}

TEST(EmInitialize, UsesDistinctDataPoints) {
    const std::vector<double> x = {1, 1, 1, 2, 3};
    const GmmParams p = em_initialize(x, 3, 4);
    std::vector<double> m = p.means;
    std::sort(m.begin(), m.end());
    EXPECT_EQ(m, (std::vector<double>{1, 2, 3}));
}

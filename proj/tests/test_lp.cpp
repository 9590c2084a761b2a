#include <gtest/gtest.h>

#include <random>

#include "ddsp/lp.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace ddsp;
using namespace gen;

TEST(Simplex, TrivialMaximum) {
    LinearProgram lp;
    lp.add_variable(1.0);
    lp.add_row({{0, 1.0}}, RowSense::LessEqual, 3.0);
    const LpSolution s = solve_lp(lp);
    ASSERT_EQ(s.status, LpStatus::Optimal);
    EXPECT_NEAR(s.objective, 3.0, 1e-12);
    EXPECT_TRUE(certify(lp, s).certified());
}

TEST(Simplex, ContradictionIsInfeasible) {
    LinearProgram lp;
    lp.add_variable(1.0);
    lp.add_row({{0, 1.0}}, RowSense::LessEqual, 1.0);
    lp.add_row({{0, 1.0}}, RowSense::GreaterEqual, 2.0);
    EXPECT_EQ(solve_lp(lp).status, LpStatus::Infeasible);
}

TEST(Simplex, DetectsUnbounded) {
    LinearProgram lp;
    lp.add_variable(1.0);
    lp.add_variable(0.0);
    lp.add_row({{0, 1.0}, {1, -1.0}}, RowSense::LessEqual, 1.0);
    EXPECT_EQ(solve_lp(lp).status, LpStatus::Unbounded);
}

TEST(Simplex, MinimizeWithEqualityAndOffset) {
    // min 2x + 3y + 1 s.t. x + y = 4, x <= 3 -> x = 3, y = 1, value 10.
    LinearProgram lp;
    lp.sense = ObjectiveSense::Minimize;
    lp.objective_offset = 1.0;
    lp.add_variable(2.0, 0.0, 3.0);
    lp.add_variable(3.0);
    lp.add_row({{0, 1.0}, {1, 1.0}}, RowSense::Equal, 4.0);
    const LpSolution s = solve_lp(lp);
    ASSERT_EQ(s.status, LpStatus::Optimal);
    EXPECT_NEAR(s.objective, 10.0, 1e-12);
    EXPECT_NEAR(s.x[0], 3.0, 1e-12);
    EXPECT_TRUE(certify(lp, s).certified());
}

TEST(Simplex, NegativeRhsAndNonzeroLowerBounds) {
    // max -x - y s.t. -x - y <= -3, x >= 1, y in [0.5, 10].
    LinearProgram lp;
    lp.add_variable(-1.0, 1.0);
    lp.add_variable(-1.0, 0.5, 10.0);
    lp.add_row({{0, -1.0}, {1, -1.0}}, RowSense::LessEqual, -3.0);
    const LpSolution s = solve_lp(lp);
    ASSERT_EQ(s.status, LpStatus::Optimal);
    EXPECT_NEAR(s.objective, -3.0, 1e-12);
}

TEST(Simplex, DegenerateCyclingExample) {
    // Beale's example cycles under textbook Dantzig pricing without a guard.
    LinearProgram lp;
    lp.sense = ObjectiveSense::Minimize;
    for (double c : {-0.75, 150.0, -0.02, 6.0}) lp.add_variable(c);
    lp.add_row({{0, 0.25}, {1, -60.0}, {2, -0.04}, {3, 9.0}}, RowSense::LessEqual, 0.0);
    lp.add_row({{0, 0.5}, {1, -90.0}, {2, -0.02}, {3, 3.0}}, RowSense::LessEqual, 0.0);
    lp.add_row({{2, 1.0}}, RowSense::LessEqual, 1.0);
    SimplexOptions o;
    o.degenerate_streak = 1;
    const LpSolution s = solve_lp(lp, o);
    ASSERT_EQ(s.status, LpStatus::Optimal);
    EXPECT_NEAR(s.objective, -0.05, 1e-12);
    EXPECT_TRUE(certify(lp, s).certified());
}

TEST(Simplex, IterationLimitReported) {
    std::mt19937_64 rng(1);
    const LinearProgram lp = random_lp(rng, 8, 8);
    SimplexOptions o;
    o.max_iterations = 1;
    const LpSolution s = solve_lp(lp, o);
    EXPECT_TRUE(s.status == LpStatus::IterationLimit || s.status == LpStatus::Optimal);
}

TEST(Simplex, MatchesVertexEnumerationOnRandomPrograms) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 7)(rng);
        const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 7)(rng);
        const LinearProgram lp = random_lp(rng, n, m);
        const auto ref = oracle::enumerate_vertices(lp);
        const LpSolution s = solve_lp(lp);
        ASSERT_TRUE(ref.feasible) << "trial " << trial;
        ASSERT_EQ(s.status, LpStatus::Optimal) << "trial " << trial;
        EXPECT_NEAR(s.objective, ref.objective, 1e-6 * std::max(1.0, std::abs(ref.objective))) << "trial " << trial;
        const LpCertificate c = certify(lp, s);
        EXPECT_TRUE(c.certified()) << "trial " << trial << " cs " << c.complementary_slackness;
        EXPECT_LE(c.duality_gap, 1e-6 * std::max(1.0, std::abs(ref.objective)));
    }
}

TEST(Certificate, DetectsWrongPoint) {
    LinearProgram lp;
    lp.add_variable(1.0);
    lp.add_row({{0, 1.0}}, RowSense::LessEqual, 3.0);
    LpSolution s = solve_lp(lp);
    s.x[0] = 2.0;
    s.objective = 2.0;
    EXPECT_FALSE(certify(lp, s).certified());
    s.x[0] = 4.0;
    EXPECT_GT(certify(lp, s).primal_infeasibility, 0.1);
}

TEST(LpFormat, WritesSectionsAndBounds) {
    LinearProgram lp;
    lp.add_variable(1.5, 0.0, 2.0, "a");
    lp.add_variable(-1.0, 0.0, kInf, "b");
    lp.add_row({{0, 1.0}, {1, 1.0}}, RowSense::GreaterEqual, 1.0, "cover");
    lp.objective_offset = 4.0;
    const std::string text = to_lp_format(lp);
    for (const char* part : {"Maximize", "Subject To", "cover:", ">= 1", "Bounds", "0 <= a <= 2", "End"}) {
        EXPECT_NE(text.find(part), std::string::npos) << part;
    }
}

TEST(Simplex, CrossedBoundsAreInfeasible) {
    LinearProgram lp;
    lp.add_variable(1.0, 2.0, 1.0);
    EXPECT_EQ(solve_lp(lp).status, LpStatus::Infeasible);
}

TEST(LinearProgram, ValidateRejectsBadBounds) {
    LinearProgram lp;
    lp.add_variable(1.0, -kInf, 1.0);
    EXPECT_THROW(lp.validate(), std::invalid_argument);
    LinearProgram lp2;
    lp2.add_variable(1.0);
    lp2.add_row({{3, 1.0}}, RowSense::LessEqual, 1.0);
    EXPECT_THROW(lp2.validate(), std::invalid_argument);
}

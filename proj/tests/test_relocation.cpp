#include <gtest/gtest.h>

#include <random>

#include "ddsp/relocation.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace ddsp;
using namespace gen;

namespace {

RelocationInstance two_zone() {
    RelocationInstance inst;
    inst.initial_stock = {6.0, 2.0};
    inst.move_cost = {0.0, 1.5, 2.0, 0.0};
    inst.price = 4.0;
    inst.penalty = 1.0;
    return inst;
}


double in_sample_value(const RelocationInstance& inst, const PlanDecision& p, const ScenarioSet& s) {
    return oracle::recourse_value(inst, p.flows, s.demand);
}

}  // namespace

TEST(Scenarios, NearDegenerateComponent) {
    const std::vector<GmmParams> f = {GmmParams{{1.0}, {5.0}, {kSigmaFloor}}};
    const ScenarioSet s = sample_scenarios(f, 500, 1);
    for (const auto& d : s.demand) EXPECT_NEAR(d[0], 5.0, 5.0 * kSigmaFloor);
    EXPECT_NEAR(s.probability() * s.size(), 1.0, 1e-15);
}

TEST(Scenarios, ZeroWeightComponentsNeverDrawn) {
    const std::vector<GmmParams> f = {GmmParams{{1.0, 0.0, 0.0}, {10.0, 100.0, 200.0}, {1.0, 1.0, 1.0}}};
    const ScenarioSet s = sample_scenarios(f, 2000, 2);
    for (const auto& d : s.demand) EXPECT_LT(d[0], 20.0);
}

TEST(Scenarios, MeanWithinThreeStandardErrors) {
    const GmmParams p{{0.3, 0.7}, {10.0, 40.0}, {2.0, 5.0}};
    const std::vector<GmmParams> f = {p};
    const std::size_t n = 100000;
    const ScenarioSet s = sample_scenarios(f, n, 3);
    double m = 0.0;
    for (const auto& d : s.demand) m += d[0] / static_cast<double>(n);
    EXPECT_NEAR(m, 0.3 * 10.0 + 0.7 * 40.0, 3.0 * std::sqrt(p.variance() / n));
}

TEST(Scenarios, ClippedAtZeroAndReproducible) {
    const std::vector<GmmParams> f = {GmmParams{{1.0}, {0.0}, {3.0}}, GmmParams{{1.0}, {2.0}, {1.0}}};
    const ScenarioSet a = sample_scenarios(f, 300, 9), b = sample_scenarios(f, 300, 9);
    EXPECT_EQ(a.demand, b.demand);
    for (const auto& d : a.demand) {
        EXPECT_GE(d[0], 0.0);
        EXPECT_GE(d[1], 0.0);
    }
    EXPECT_NE(a.demand, sample_scenarios(f, 300, 10).demand);
}

TEST(TwoStage, SizesAndIndexMap) {
    const ScenarioSet s{{{1, 2}, {3, 4}, {5, 6}}, 0};
    const TwoStageModel m = build_two_stage(two_zone(), s);
    EXPECT_EQ(m.lp.variables(), 4u + 6u);
    EXPECT_EQ(m.lp.upper[m.flow_var(1, 1)], 0.0);
    EXPECT_EQ(m.lp.upper[m.served_var(2, 1)], 6.0);
    const nlohmann::json map = m.index_map();
    ASSERT_EQ(map.size(), m.lp.variables());
    EXPECT_EQ(map[m.served_var(2, 1)].at("scenario"), 2);
    EXPECT_EQ(map[m.flow_var(1, 0)].at("kind"), "flow");
}

TEST(TwoStage, ZeroDemandMeansNoMoves) {
    const ScenarioSet s{{{0, 0}, {0, 0}}, 0};
    const PlanResult r = solve_plan(build_two_stage(two_zone(), s), two_zone());
    ASSERT_EQ(r.status, LpStatus::Optimal);
    EXPECT_NEAR(r.objective, 0.0, 1e-12);
    EXPECT_NEAR(r.plan.moving(), 0.0, 1e-12);
}

TEST(TwoStage, TwoScenarioHandInstanceMatchesGrid) {
    const RelocationInstance inst = two_zone();
    const std::vector<std::vector<double>> d = {{2.0, 5.0}, {4.0, 3.0}};
    const PlanResult r = solve_plan(build_two_stage(inst, ScenarioSet{d, 0}), inst);
    ASSERT_EQ(r.status, LpStatus::Optimal);
    EXPECT_NEAR(r.objective, oracle::grid_search(inst, d), 1e-7);
    EXPECT_TRUE(r.certificate.certified());
}

TEST(TwoStage, RandomTwoZoneInstancesMatchGrid) {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> dem(0, 15);
    for (int t = 0; t < 25; ++t) {
        const RelocationInstance inst = random_instance(rng, 2);
        std::vector<std::vector<double>> d(3, std::vector<double>(2));
        for (auto& row : d) {
            for (auto& v : row) v = dem(rng);
        }
        const PlanResult r = solve_plan(build_two_stage(inst, ScenarioSet{d, 0}), inst);
        ASSERT_EQ(r.status, LpStatus::Optimal);
        EXPECT_NEAR(r.objective, oracle::grid_search(inst, d), 1e-7) << "instance " << t;
    }
}

TEST(Deterministic, ThreeZoneHandCaseMatchesGrid) {
    RelocationInstance inst;
    inst.initial_stock = {5.0, 0.0, 1.0};
    inst.move_cost = {0, 1, 3, 1, 0, 1, 3, 1, 0};
    inst.price = 4.0;
    inst.penalty = 2.0;
    const std::vector<double> point = {1.0, 3.0, 2.0};
    const PlanResult r = solve_plan(deterministic_model(inst, point), inst);
    ASSERT_EQ(r.status, LpStatus::Optimal);
    EXPECT_NEAR(r.objective, oracle::grid_search(inst, {point}), 1e-7);
    // Routing 0 -> 1 -> 2 (cost 2) beats the direct 0 -> 2 move (cost 3).
    EXPECT_NEAR(r.plan.flow(0, 1), 4.0, 1e-9);
    EXPECT_NEAR(r.plan.flow(1, 2), 1.0, 1e-9);
}

TEST(Deterministic, DemandEqualToStockMeansNoMoves) {
    const RelocationInstance inst = two_zone();
    const PlanResult r = solve_plan(deterministic_model(inst, inst.initial_stock), inst);
    EXPECT_NEAR(r.plan.moving(), 0.0, 1e-12);
}

TEST(Deterministic, SymmetricInstanceMirrorsPlan) {
    RelocationInstance inst;
    inst.initial_stock = {5.0, 5.0};
    inst.move_cost = {0.0, 1.0, 1.0, 0.0};
    inst.price = 5.0;
    inst.penalty = 1.0;
    const PlanResult a = solve_plan(deterministic_model(inst, std::vector<double>{2.0, 8.0}), inst);
    const PlanResult b = solve_plan(deterministic_model(inst, std::vector<double>{8.0, 2.0}), inst);
    EXPECT_NEAR(a.plan.flow(0, 1), b.plan.flow(1, 0), 1e-12);
    EXPECT_NEAR(a.plan.flow(1, 0), b.plan.flow(0, 1), 1e-12);
    EXPECT_NEAR(a.objective, b.objective, 1e-12);
}

TEST(SaaProperties, SingleScenarioCollapse) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dem(0.0, 20.0);
    for (int t = 0; t < 30; ++t) {
        const std::size_t z = 2 + t % 4;
        const RelocationInstance inst = random_instance(rng, z);
        std::vector<double> d(z);
        for (auto& v : d) v = dem(rng);
        const PlanResult a = solve_plan(build_two_stage(inst, ScenarioSet{{d}, 0}), inst);
        const PlanResult b = solve_plan(deterministic_model(inst, d), inst);
        EXPECT_NEAR(a.objective, b.objective, 1e-7);
    }
}

TEST(SaaProperties, StochasticPlanDominatesInSample) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 15; ++t) {
        const std::size_t z = 2 + t % 3;
        const RelocationInstance inst = random_instance(rng, z);
        std::vector<GmmParams> f;
        std::vector<double> point;
        for (std::size_t k = 0; k < z; ++k) {
            const GmmParams p{{0.5, 0.5}, {3.0 + k, 15.0 - k}, {1.0, 2.0}};
            f.push_back(p);
            point.push_back(p.mean());
        }
        const ScenarioSet s = sample_scenarios(f, 60, 100 + t);
        const PlanResult sp = solve_plan(build_two_stage(inst, s), inst);
        const PlanResult det = solve_plan(deterministic_model(inst, point), inst);
        EXPECT_GE(in_sample_value(inst, sp.plan, s), in_sample_value(inst, det.plan, s) - 1e-7);
        EXPECT_NEAR(in_sample_value(inst, sp.plan, s), sp.objective, 1e-7);
    }
}

TEST(SaaProperties, FleetConserved) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 10; ++t) {
        const RelocationInstance inst = random_instance(rng, 4);
        const std::vector<double> d = {9.0, 1.0, 0.0, 12.0};
        const PlanResult r = solve_plan(deterministic_model(inst, d), inst);
        double total = 0.0;
        for (double s : r.plan.stock) {
            EXPECT_GE(s, -1e-9);
            total += s;
        }
        EXPECT_NEAR(total, inst.fleet(), 1e-7);
    }
}

TEST(EvaluateDecision, HandArithmetic) {
    const RelocationInstance inst = two_zone();
    const PlanDecision p = make_plan(inst, {0.0, 3.0, 1.0, 0.0});
    // stock: 6 - 3 + 1 = 4, 2 + 3 - 1 = 4.
    EXPECT_EQ(p.stock, (std::vector<double>{4.0, 4.0}));
    const DayOutcome o = evaluate_decision(inst, p, std::vector<double>{5.0, 1.0});
    EXPECT_DOUBLE_EQ(o.moving, 4.0);
    EXPECT_DOUBLE_EQ(o.lost_sales, 1.0);
    EXPECT_DOUBLE_EQ(o.revenue, 4.0 * (4.0 + 1.0));
    EXPECT_DOUBLE_EQ(o.cost, 1.5 * 3.0 + 2.0 * 1.0 + 1.0 * 1.0);
    EXPECT_DOUBLE_EQ(o.profit(), 20.0 - 7.5);
}

TEST(EvaluateDecision, ExactMatchAndNoMoves) {
    const RelocationInstance inst = two_zone();
    const PlanDecision idle = make_plan(inst, {0, 0, 0, 0});
    const DayOutcome a = evaluate_decision(inst, idle, idle.stock);
    EXPECT_EQ(a.lost_sales, 0.0);
    EXPECT_DOUBLE_EQ(a.revenue, 4.0 * 8.0);
    const DayOutcome b = evaluate_decision(inst, idle, std::vector<double>{9.0, 3.0});
    EXPECT_EQ(b.moving, 0.0);
    EXPECT_DOUBLE_EQ(b.cost, 1.0 * 4.0);
}

TEST(Rounding, IntegerPlanAndGap) {
    const RelocationInstance inst = two_zone();
    const ScenarioSet s{{{1.5, 6.5}, {2.5, 5.5}}, 0};
    const PlanResult r = solve_plan(build_two_stage(inst, s), inst);
    const RoundingReport rr = round_plan(inst, r.plan, s);
    for (double f : rr.rounded.flows) EXPECT_EQ(f, std::floor(f));
    for (double st : rr.rounded.stock) EXPECT_GE(st, 0.0);
    EXPECT_GE(rr.gap(), -1e-9);
    EXPECT_NEAR(rr.relaxed_value, r.objective, 1e-7);
}

TEST(Instance, ValidationAndJson) {
    RelocationInstance bad = two_zone();
    bad.move_cost[0] = 1.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    const nlohmann::json j = two_zone();
    const RelocationInstance back = j.get<RelocationInstance>();
    EXPECT_EQ(back.initial_stock, two_zone().initial_stock);
    EXPECT_EQ(back.move_cost, two_zone().move_cost);
}

TEST(SaaConvergence, OneRowPerCount) {
    const std::vector<GmmParams> f = {GmmParams{{0.5, 0.5}, {2.0, 9.0}, {1.0, 1.0}},
                                      GmmParams{{1.0}, {3.0}, {1.0}}};
    const std::vector<std::size_t> counts = {10, 50, 100};
    const auto rows = saa_convergence(two_zone(), f, counts, 4);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[2].scenarios, 100u);
}

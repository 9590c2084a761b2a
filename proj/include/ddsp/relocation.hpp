#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ddsp/lp.hpp"
#include "ddsp/mdn.hpp"
#include "json.hpp"

namespace ddsp {

/// Equally weighted demand scenarios, scenarios x zones.
struct ScenarioSet {
    std::vector<std::vector<double>> demand;
    std::uint64_t seed = 0;

    std::size_t size() const { return demand.size(); }
    std::size_t zones() const { return demand.empty() ? 0 : demand.front().size(); }
    double probability() const { return demand.empty() ? 0.0 : 1.0 / static_cast<double>(demand.size()); }
};

/// Per zone: pick a component by weight, draw from it, clip at zero.
ScenarioSet sample_scenarios(std::span<const GmmParams> forecasts, std::size_t n, std::uint64_t seed);

/// Single-period relocation economics.
struct RelocationInstance {
    std::vector<double> initial_stock;  // vehicles per zone
    std::vector<double> move_cost;      // zones x zones, row-major, currency per vehicle
    double price = 0.0;                 // per served demand unit
    double penalty = 0.0;               // per unmet demand unit

    std::size_t zones() const { return initial_stock.size(); }
    double cost(std::size_t i, std::size_t j) const { return move_cost[i * zones() + j]; }
    double fleet() const;
    void validate() const;
};

void to_json(nlohmann::json& j, const RelocationInstance& inst);
void from_json(const nlohmann::json& j, RelocationInstance& inst);

/// First-stage relocation flows and the resulting stock.
struct PlanDecision {
    std::size_t zones = 0;
    std::vector<double> flows;  // zones x zones, row-major; flows[i*Z+j] moves i -> j
    std::vector<double> stock;  // post-move stock

    double flow(std::size_t i, std::size_t j) const { return flows[i * zones + j]; }
    double moving() const;
};

PlanDecision make_plan(const RelocationInstance& inst, std::vector<double> flows);

void to_json(nlohmann::json& j, const PlanDecision& p);
void from_json(const nlohmann::json& j, PlanDecision& p);

/// Deterministic-equivalent LP plus where each variable lives.
struct TwoStageModel {
    LinearProgram lp;
    std::size_t zones = 0;
    std::size_t scenarios = 0;

    std::size_t flow_var(std::size_t i, std::size_t j) const { return i * zones + j; }
    std::size_t served_var(std::size_t scenario, std::size_t zone) const {
        return zones * zones + scenario * zones + zone;
    }
    nlohmann::json index_map() const;
};

/// maximize -sum c_ij r_ij + 1/N sum_w sum_z [p y_zw - l (d_zw - y_zw)]
/// s.t. y_zw <= s'_z, 0 <= y_zw <= d_zw, s'_z >= 0, r >= 0, r_ii = 0,
/// where s'_z = s_z - sum_j r_zj + sum_i r_iz.
TwoStageModel build_two_stage(const RelocationInstance& inst, const ScenarioSet& scenarios);

/// The same model with a single scenario equal to the point forecast.
TwoStageModel deterministic_model(const RelocationInstance& inst, std::span<const double> point_demand);

struct PlanResult {
    LpStatus status = LpStatus::Infeasible;
    PlanDecision plan;
    double objective = 0.0;
    LpCertificate certificate;
    int iterations = 0;
};

PlanResult solve_plan(const TwoStageModel& model, const RelocationInstance& inst,
                      const SimplexOptions& opts = {});

struct DayOutcome {
    double revenue = 0.0;
    double cost = 0.0;
    double moving = 0.0;
    double lost_sales = 0.0;

    double profit() const { return revenue - cost; }
};

void to_json(nlohmann::json& j, const DayOutcome& o);

DayOutcome evaluate_decision(const RelocationInstance& inst, const PlanDecision& plan,
                             std::span<const double> realized);

/// Mean profit of `plan` over the scenarios with exact recourse.
double expected_profit(const RelocationInstance& inst, const PlanDecision& plan, const ScenarioSet& scenarios);

struct RoundingReport {
    PlanDecision rounded;
    double relaxed_value = 0.0;
    double rounded_value = 0.0;
    double gap() const { return relaxed_value - rounded_value; }
};

/// Floors every flow, then trims outflows from any zone left with negative
/// stock; reports the in-sample value lost against the LP relaxation.
RoundingReport round_plan(const RelocationInstance& inst, const PlanDecision& plan, const ScenarioSet& scenarios);

struct SaaRow {
    std::size_t scenarios = 0;
    double objective = 0.0;
    double moving = 0.0;
};

/// Optimal SAA value for each scenario count, each from its own seeded sample.
std::vector<SaaRow> saa_convergence(const RelocationInstance& inst, std::span<const GmmParams> forecasts,
                                    std::span<const std::size_t> counts, std::uint64_t seed);

}  // namespace ddsp

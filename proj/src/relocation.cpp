#include "ddsp/relocation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "ddsp/rng.hpp"

namespace ddsp {

ScenarioSet sample_scenarios(std::span<const GmmParams> forecasts, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("sample_scenarios: scenario count must be >= 1");
    for (const auto& f : forecasts) f.validate();
    Rng rng(seed);
    std::vector<std::discrete_distribution<std::size_t>> pick;
    pick.reserve(forecasts.size());
    for (const auto& f : forecasts) pick.emplace_back(f.weights.begin(), f.weights.end());
    std::normal_distribution<double> normal(0.0, 1.0);

    ScenarioSet set;
    set.seed = seed;
    set.demand.assign(n, std::vector<double>(forecasts.size()));
    for (std::size_t w = 0; w < n; ++w) {
        for (std::size_t z = 0; z < forecasts.size(); ++z) {
            const std::size_t k = pick[z](rng);
            const double v = forecasts[z].means[k] + forecasts[z].stds[k] * normal(rng);
            set.demand[w][z] = std::max(v, 0.0);
        }
    }
    return set;
}

double RelocationInstance::fleet() const {
    return std::accumulate(initial_stock.begin(), initial_stock.end(), 0.0);
}

void RelocationInstance::validate() const {
    const std::size_t z = zones();
    if (z == 0) throw std::invalid_argument("instance: no zones");
    if (move_cost.size() != z * z) throw std::invalid_argument("instance: cost matrix must be zones x zones");
    for (std::size_t i = 0; i < z; ++i) {
        if (!(initial_stock[i] >= 0.0)) throw std::invalid_argument("instance: negative initial stock");
        for (std::size_t j = 0; j < z; ++j) {
            const double c = cost(i, j);
            if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("instance: invalid relocation cost");
            if (i == j && c != 0.0) throw std::invalid_argument("instance: diagonal relocation cost must be 0");
        }
    }
    if (!(price >= 0.0) || !(penalty >= 0.0)) throw std::invalid_argument("instance: price and penalty must be >= 0");
}

void to_json(nlohmann::json& j, const RelocationInstance& inst) {
    std::vector<std::vector<double>> cost(inst.zones(), std::vector<double>(inst.zones()));
    for (std::size_t a = 0; a < inst.zones(); ++a) {
        for (std::size_t b = 0; b < inst.zones(); ++b) cost[a][b] = inst.cost(a, b);
    }
    j = nlohmann::json{{"initial_stock", inst.initial_stock},
                       {"move_cost", cost},
                       {"price", inst.price},
                       {"penalty", inst.penalty}};
}

void from_json(const nlohmann::json& j, RelocationInstance& inst) {
    j.at("initial_stock").get_to(inst.initial_stock);
    const auto cost = j.at("move_cost").get<std::vector<std::vector<double>>>();
    inst.move_cost.clear();
    for (const auto& row : cost) {
        if (row.size() != cost.size()) throw std::invalid_argument("instance: move_cost must be square");
        inst.move_cost.insert(inst.move_cost.end(), row.begin(), row.end());
    }
    j.at("price").get_to(inst.price);
    j.at("penalty").get_to(inst.penalty);
    inst.validate();
}

double PlanDecision::moving() const {
    double m = 0.0;
    for (std::size_t i = 0; i < zones; ++i) {
        for (std::size_t j = 0; j < zones; ++j) {
            if (i != j) m += flow(i, j);
        }
    }
    return m;
}

PlanDecision make_plan(const RelocationInstance& inst, std::vector<double> flows) {
    const std::size_t z = inst.zones();
    if (flows.size() != z * z) throw std::invalid_argument("plan: flow matrix must be zones x zones");
    PlanDecision p{z, std::move(flows), inst.initial_stock};
    for (std::size_t i = 0; i < z; ++i) {
        for (std::size_t j = 0; j < z; ++j) {
            if (i == j) continue;
            p.stock[i] -= p.flow(i, j);
            p.stock[j] += p.flow(i, j);
        }
    }
    return p;
}

void to_json(nlohmann::json& j, const PlanDecision& p) {
    std::vector<std::vector<double>> flows(p.zones, std::vector<double>(p.zones));
    for (std::size_t a = 0; a < p.zones; ++a) {
        for (std::size_t b = 0; b < p.zones; ++b) flows[a][b] = p.flow(a, b);
    }
    j = nlohmann::json{{"flows", flows}, {"stock", p.stock}, {"moving", p.moving()}};
}

void from_json(const nlohmann::json& j, PlanDecision& p) {
    const auto flows = j.at("flows").get<std::vector<std::vector<double>>>();
    p.zones = flows.size();
    p.flows.clear();
    for (const auto& row : flows) p.flows.insert(p.flows.end(), row.begin(), row.end());
    j.at("stock").get_to(p.stock);
}

nlohmann::json TwoStageModel::index_map() const {
    nlohmann::json vars = nlohmann::json::array();
    for (std::size_t i = 0; i < zones; ++i) {
        for (std::size_t j = 0; j < zones; ++j) {
            vars.push_back({{"index", flow_var(i, j)}, {"kind", "flow"}, {"from", i}, {"to", j}});
        }
    }
    for (std::size_t w = 0; w < scenarios; ++w) {
        for (std::size_t z = 0; z < zones; ++z) {
            vars.push_back({{"index", served_var(w, z)}, {"kind", "served"}, {"scenario", w}, {"zone", z}});
        }
    }
    return vars;
}

TwoStageModel build_two_stage(const RelocationInstance& inst, const ScenarioSet& scenarios) {
    inst.validate();
    const std::size_t z = inst.zones();
    const std::size_t n = scenarios.size();
    if (n == 0) throw std::invalid_argument("build_two_stage: empty scenario set");
    if (scenarios.zones() != z) throw std::invalid_argument("build_two_stage: scenario width != zone count");

    TwoStageModel m;
    m.zones = z;
    m.scenarios = n;
    LinearProgram& lp = m.lp;
    lp.sense = ObjectiveSense::Maximize;
    const double prob = scenarios.probability();

    for (std::size_t i = 0; i < z; ++i) {
        for (std::size_t j = 0; j < z; ++j) {
            lp.add_variable(-inst.cost(i, j), 0.0, i == j ? 0.0 : kInf,
                            "r_" + std::to_string(i) + "_" + std::to_string(j));
        }
    }
    double offset = 0.0;
    for (std::size_t w = 0; w < n; ++w) {
        for (std::size_t k = 0; k < z; ++k) {
            const double d = scenarios.demand[w][k];
            if (!(d >= 0.0)) throw std::invalid_argument("build_two_stage: negative scenario demand");
            lp.add_variable(prob * (inst.price + inst.penalty), 0.0, d,
                            "y_" + std::to_string(w) + "_" + std::to_string(k));
            offset -= prob * inst.penalty * d;
        }
    }
    lp.objective_offset = offset;

    // Net outflow of zone k: sum_j r_kj - sum_i r_ik, so s'_k = s_k - net_k.
    auto net_outflow = [&](std::size_t k) {
        std::vector<std::pair<std::size_t, double>> terms;
        for (std::size_t j = 0; j < z; ++j) {
            if (j != k) terms.emplace_back(m.flow_var(k, j), 1.0);
        }
        for (std::size_t i = 0; i < z; ++i) {
            if (i != k) terms.emplace_back(m.flow_var(i, k), -1.0);
        }
        return terms;
    };
    for (std::size_t k = 0; k < z; ++k) {
        lp.add_row(net_outflow(k), RowSense::LessEqual, inst.initial_stock[k], "stock_" + std::to_string(k));
    }
    for (std::size_t w = 0; w < n; ++w) {
        for (std::size_t k = 0; k < z; ++k) {
            auto terms = net_outflow(k);
            terms.emplace_back(m.served_var(w, k), 1.0);
            lp.add_row(std::move(terms), RowSense::LessEqual, inst.initial_stock[k],
                       "serve_" + std::to_string(w) + "_" + std::to_string(k));
        }
    }
    return m;
}

TwoStageModel deterministic_model(const RelocationInstance& inst, std::span<const double> point_demand) {
    ScenarioSet single;
    single.demand.emplace_back(point_demand.begin(), point_demand.end());
    for (double& d : single.demand.front()) d = std::max(d, 0.0);
    return build_two_stage(inst, single);
}

PlanResult solve_plan(const TwoStageModel& model, const RelocationInstance& inst, const SimplexOptions& opts) {
    PlanResult out;
    const LpSolution sol = solve_lp(model.lp, opts);
    out.status = sol.status;
    out.iterations = sol.iterations;
    if (sol.status != LpStatus::Optimal) return out;
    out.objective = sol.objective;
    out.certificate = certify(model.lp, sol);
    std::vector<double> flows(model.zones * model.zones);
    for (std::size_t i = 0; i < model.zones; ++i) {
        for (std::size_t j = 0; j < model.zones; ++j) {
            flows[i * model.zones + j] = i == j ? 0.0 : sol.x[model.flow_var(i, j)];
        }
    }
    out.plan = make_plan(inst, std::move(flows));
    return out;
}

void to_json(nlohmann::json& j, const DayOutcome& o) {
    j = nlohmann::json{{"revenue", o.revenue},
                       {"cost", o.cost},
                       {"moving", o.moving},
                       {"lost_sales", o.lost_sales},
                       {"profit", o.profit()}};
}

DayOutcome evaluate_decision(const RelocationInstance& inst, const PlanDecision& plan,
                             std::span<const double> realized) {
    const std::size_t z = inst.zones();
    if (plan.zones != z || realized.size() != z) throw std::invalid_argument("evaluate_decision: zone mismatch");
    DayOutcome o;
    o.moving = plan.moving();
    double relocation = 0.0;
    for (std::size_t i = 0; i < z; ++i) {
        for (std::size_t j = 0; j < z; ++j) relocation += inst.cost(i, j) * plan.flow(i, j);
    }
    double served = 0.0;
    for (std::size_t k = 0; k < z; ++k) {
        served += std::min(std::max(plan.stock[k], 0.0), realized[k]);
        o.lost_sales += std::max(realized[k] - plan.stock[k], 0.0);
    }
    o.revenue = inst.price * served;
    o.cost = relocation + inst.penalty * o.lost_sales;
    return o;
}

double expected_profit(const RelocationInstance& inst, const PlanDecision& plan, const ScenarioSet& scenarios) {
    if (scenarios.size() == 0) return 0.0;
    double total = 0.0;
    for (const auto& d : scenarios.demand) total += evaluate_decision(inst, plan, d).profit();
    return total / static_cast<double>(scenarios.size());
}

RoundingReport round_plan(const RelocationInstance& inst, const PlanDecision& plan, const ScenarioSet& scenarios) {
    const std::size_t z = inst.zones();
    std::vector<double> flows(plan.flows.size());
    for (std::size_t k = 0; k < flows.size(); ++k) flows[k] = std::max(std::floor(plan.flows[k] + 1e-9), 0.0);
    PlanDecision rounded = make_plan(inst, flows);
    for (bool repaired = false; !repaired;) {
        repaired = true;
        for (std::size_t i = 0; i < z; ++i) {
            if (rounded.stock[i] >= 0.0) continue;
            repaired = false;
            std::size_t j_max = 0;
            for (std::size_t j = 1; j < z; ++j) {
                if (flows[i * z + j] > flows[i * z + j_max]) j_max = j;
            }
            flows[i * z + j_max] -= 1.0;
            rounded = make_plan(inst, flows);
        }
    }
    RoundingReport rep{rounded, expected_profit(inst, plan, scenarios), 0.0};
    rep.rounded_value = expected_profit(inst, rounded, scenarios);
    return rep;
}

std::vector<SaaRow> saa_convergence(const RelocationInstance& inst, std::span<const GmmParams> forecasts,
                                    std::span<const std::size_t> counts, std::uint64_t seed) {
    std::vector<SaaRow> rows;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const ScenarioSet s = sample_scenarios(forecasts, counts[k], derive_seed(seed, counts[k]));
        const PlanResult r = solve_plan(build_two_stage(inst, s), inst);
        rows.push_back(SaaRow{counts[k], r.objective, r.plan.moving()});
    }
    return rows;
}

}  // namespace ddsp

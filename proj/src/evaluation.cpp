#include "ddsp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ddsp/rng.hpp"

namespace ddsp {

const char* to_string(PlanMode m) { return m == PlanMode::Stochastic ? "stochastic" : "deterministic"; }

PlanMode parse_plan_mode(const std::string& s) {
    if (s == "stochastic") return PlanMode::Stochastic;
    if (s == "deterministic") return PlanMode::Deterministic;
    throw std::invalid_argument("unknown plan mode '" + s + "' (expected stochastic|deterministic)");
}

void EvaluationReport::recompute() {
    avg_revenue = avg_cost = avg_moving = avg_profit = avg_lost_sales = 0.0;
    if (days.empty()) return;
    for (const auto& d : days) {
        avg_revenue += d.outcome.revenue;
        avg_cost += d.outcome.cost;
        avg_moving += d.outcome.moving;
        avg_profit += d.outcome.profit();
        avg_lost_sales += d.outcome.lost_sales;
    }
    const double n = static_cast<double>(days.size());
    avg_revenue /= n;
    avg_cost /= n;
    avg_moving /= n;
    avg_profit /= n;
    avg_lost_sales /= n;
}

nlohmann::json EvaluationReport::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& d : days) {
        nlohmann::json r = d.outcome;
        r["date"] = format_date(d.day);
        r["stock"] = d.stock;
        r["planned_objective"] = d.planned_objective;
        rows.push_back(std::move(r));
    }
    std::vector<std::string> skipped_dates;
    for (Day d : skipped) skipped_dates.push_back(format_date(d));
    return nlohmann::json{{"method", method},
                          {"day_count", days.size()},
                          {"averages",
                           {{"revenue", avg_revenue},
                            {"cost", avg_cost},
                            {"moving", avg_moving},
                            {"profit", avg_profit},
                            {"lost_sales", avg_lost_sales}}},
                          {"days", rows},
                          {"skipped", skipped_dates}};
}

EvaluationReport EvaluationReport::from_json(const nlohmann::json& j) {
    EvaluationReport r;
    j.at("method").get_to(r.method);
    for (const auto& row : j.at("days")) {
        DayRecord d;
        d.day = parse_date(row.at("date").get<std::string>());
        row.at("revenue").get_to(d.outcome.revenue);
        row.at("cost").get_to(d.outcome.cost);
        row.at("moving").get_to(d.outcome.moving);
        row.at("lost_sales").get_to(d.outcome.lost_sales);
        if (row.contains("stock")) row.at("stock").get_to(d.stock);
        d.planned_objective = row.value("planned_objective", 0.0);
        r.days.push_back(std::move(d));
    }
    for (const auto& s : j.value("skipped", std::vector<std::string>{})) r.skipped.push_back(parse_date(s));
    r.recompute();
    return r;
}

std::string EvaluationReport::days_csv() const {
    std::ostringstream os;
    os << std::setprecision(17) << "date,revenue,cost,moving,lost_sales,profit\n";
    for (const auto& d : days) {
        os << format_date(d.day) << ',' << d.outcome.revenue << ',' << d.outcome.cost << ',' << d.outcome.moving << ','
           << d.outcome.lost_sales << ',' << d.outcome.profit() << '\n';
    }
    return os.str();
}

PlanResult plan_day(const DayForecast& f, PlanMode mode, const RelocationInstance& inst, std::size_t scenarios,
                    std::uint64_t seed) {
    PlanResult r;
    if (mode == PlanMode::Stochastic) {
        if (f.distribution.empty()) {
            throw std::invalid_argument("stochastic planning needs a distributional forecast");
        }
        r = solve_plan(build_two_stage(inst, sample_scenarios(f.distribution, scenarios, seed)), inst);
    } else {
        r = solve_plan(deterministic_model(inst, f.point), inst);
    }
    if (r.status != LpStatus::Optimal) {
        throw std::runtime_error(std::string("relocation LP not solved: ") + to_string(r.status));
    }
    return r;
}

EvaluationReport rolling_evaluate(const Forecaster& forecaster, PlanMode mode, const DemandSeries& series, Day first,
                                  Day last, const RelocationInstance& inst, const EvaluationConfig& cfg) {
    if (last < first) throw std::invalid_argument("rolling_evaluate: empty test range");
    const auto first_idx = series.index_of(first);
    const auto last_idx = series.index_of(last);
    if (!first_idx || !last_idx) throw std::invalid_argument("rolling_evaluate: test range outside the series");
    if (inst.zones() != series.zones()) throw std::invalid_argument("rolling_evaluate: instance/series zone mismatch");

    const std::size_t ws = forecaster.window();
    EvaluationReport report;
    report.method = forecaster.name() + "+" + to_string(mode);

    std::vector<std::size_t> targets;
    for (std::size_t d = *first_idx; d <= *last_idx; ++d) {
        if (d < ws) {
            report.skipped.push_back(series.days[d]);
        } else {
            targets.push_back(d);
        }
    }
    auto day_seed = [&](std::size_t d) {
        return derive_seed(cfg.seed, static_cast<std::uint64_t>(series.days[d].time_since_epoch().count()));
    };
    auto plan_for = [&](std::size_t d) {
        const DayForecast f = forecaster.forecast(history_window(series, d, ws), series.days[d]);
        return plan_day(f, mode, inst, cfg.scenarios, day_seed(d));
    };

    std::vector<PlanResult> plans(targets.size());
    if (!cfg.replan && !targets.empty()) {
        const PlanResult fixed = plan_for(targets.front());
        std::fill(plans.begin(), plans.end(), fixed);
    } else {
        const std::size_t threads = std::clamp<std::size_t>(cfg.threads, 1, std::max<std::size_t>(targets.size(), 1));
        std::vector<std::exception_ptr> errors(threads);
        auto work = [&](std::size_t tid) {
            try {
                for (std::size_t k = tid; k < targets.size(); k += threads) plans[k] = plan_for(targets[k]);
            } catch (...) {
                errors[tid] = std::current_exception();
            }
        };
        if (threads == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t);
            for (auto& th : pool) th.join();
        }
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    for (std::size_t k = 0; k < targets.size(); ++k) {
        const std::size_t d = targets[k];
        DayRecord rec;
        rec.day = series.days[d];
        rec.outcome = evaluate_decision(inst, plans[k].plan, series.day_vector(d));
        rec.stock = plans[k].plan.stock;
        rec.planned_objective = plans[k].objective;
        report.days.push_back(std::move(rec));
    }
    report.recompute();
    return report;
}

std::string percent_statement(const std::string& name_a, const std::string& name_b, double a, double b) {
    std::ostringstream os;
    if (a == b) {
        os << name_a << " equals " << name_b;
        return os.str();
    }
    if (b == 0.0) {
        os << name_a << " is " << (a < b ? "lower" : "higher") << " than " << name_b << " (percent undefined)";
        return os.str();
    }
    const double pct = std::abs(a - b) / std::abs(b) * 100.0;
    os << name_a << " is " << std::fixed << std::setprecision(2) << pct << "% " << (a < b ? "lower" : "higher")
       << " than " << name_b;
    return os.str();
}

ComparisonReport compare(const EvaluationReport& a, const EvaluationReport& b) {
    ComparisonReport c{a, b, {}};
    const std::pair<const char*, std::pair<double, double>> rows[] = {
        {"Average Revenue", {a.avg_revenue, b.avg_revenue}},
        {"Average Cost", {a.avg_cost, b.avg_cost}},
        {"Average Moving", {a.avg_moving, b.avg_moving}},
        {"Average Profit", {a.avg_profit, b.avg_profit}},
    };
    for (const auto& [name, v] : rows) {
        MetricComparison m;
        m.metric = name;
        m.a = v.first;
        m.b = v.second;
        m.difference = v.first - v.second;
        if (v.second != 0.0) m.percent = std::abs(m.difference) / std::abs(v.second) * 100.0;
        m.statement = percent_statement(a.method, b.method, v.first, v.second);
        c.metrics.push_back(std::move(m));
    }
    return c;
}

nlohmann::json ComparisonReport::to_json() const {
    nlohmann::json metrics_json = nlohmann::json::array();
    for (const auto& m : metrics) {
        metrics_json.push_back({{"metric", m.metric},
                                {"a", m.a},
                                {"b", m.b},
                                {"difference", m.difference},
                                {"percent", m.percent ? nlohmann::json(*m.percent) : nlohmann::json(nullptr)},
                                {"statement", m.statement}});
    }
    return nlohmann::json{{"a", a.method},
                          {"b", b.method},
                          {"day_count", {{"a", a.day_count()}, {"b", b.day_count()}}},
                          {"metrics", metrics_json}};
}

std::string ComparisonReport::table() const {
    std::size_t name_w = 6;
    name_w = std::max({name_w, a.method.size(), b.method.size()});
    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(name_w)) << "Method";
    for (std::size_t k = 0; k < 3; ++k) os << " | " << std::setw(15) << metrics[k].metric;
    os << " | " << metrics[3].metric << '\n';
    os << std::string(name_w, '-') << std::string(3 * 18 + 17, '-') << '\n';
    for (const EvaluationReport* r : {&a, &b}) {
        os << std::left << std::setw(static_cast<int>(name_w)) << r->method << std::right << std::fixed;
        os << " | " << std::setw(15) << std::setprecision(1) << r->avg_revenue;
        os << " | " << std::setw(15) << std::setprecision(1) << r->avg_cost;
        os << " | " << std::setw(15) << std::setprecision(4) << r->avg_moving;
        os << " | " << std::setw(14) << std::setprecision(1) << r->avg_profit << '\n';
    }
    os << '\n';
    for (const auto& m : metrics) os << m.metric << ": " << m.statement << '\n';
    return os.str();
}

}  // namespace ddsp

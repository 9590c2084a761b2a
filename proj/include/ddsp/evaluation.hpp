#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ddsp/data_pipeline.hpp"
#include "ddsp/forecaster.hpp"
#include "ddsp/relocation.hpp"
#include "json.hpp"

namespace ddsp {

enum class PlanMode { Stochastic, Deterministic };

const char* to_string(PlanMode m);
PlanMode parse_plan_mode(const std::string& s);

struct EvaluationConfig {
    std::size_t scenarios = 200;
    std::uint64_t seed = 0;
    /// false: plan once from the first evaluable day and keep that plan.
    bool replan = true;
    std::size_t threads = 1;
};

struct DayRecord {
    Day day;
    DayOutcome outcome;
    std::vector<double> stock;  // post-move stock of the plan used
    double planned_objective = 0.0;
};

struct EvaluationReport {
    std::string method;
    std::vector<DayRecord> days;
    std::vector<Day> skipped;
    double avg_revenue = 0.0;
    double avg_cost = 0.0;
    double avg_moving = 0.0;
    double avg_profit = 0.0;
    double avg_lost_sales = 0.0;

    std::size_t day_count() const { return days.size(); }
    /// Recomputes the averages from the per-day rows.
    void recompute();
    nlohmann::json to_json() const;
    static EvaluationReport from_json(const nlohmann::json& j);
    std::string days_csv() const;
};

/// Plans the day from a forecast. Stochastic: SAA over sampled scenarios;
/// deterministic: single scenario at the point forecast.
PlanResult plan_day(const DayForecast& f, PlanMode mode, const RelocationInstance& inst, std::size_t scenarios,
                    std::uint64_t seed);

/// For each day in [first, last] of `series`: forecast from the preceding
/// window only, plan, score the plan against the realized demand. Days
/// without a full window of history are skipped and listed.
EvaluationReport rolling_evaluate(const Forecaster& forecaster, PlanMode mode, const DemandSeries& series, Day first,
                                  Day last, const RelocationInstance& inst, const EvaluationConfig& cfg);

struct MetricComparison {
    std::string metric;
    double a = 0.0;
    double b = 0.0;
    double difference = 0.0;                 // a - b
    std::optional<double> percent;           // |a - b| / |b| * 100
    std::string statement;
};

struct ComparisonReport {
    EvaluationReport a;
    EvaluationReport b;
    std::vector<MetricComparison> metrics;

    nlohmann::json to_json() const;
    std::string table() const;
};

/// "<a> is 6.94% lower than <b>": relative to b, two decimals.
std::string percent_statement(const std::string& name_a, const std::string& name_b, double a, double b);

ComparisonReport compare(const EvaluationReport& a, const EvaluationReport& b);

}  // namespace ddsp

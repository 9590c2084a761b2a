#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace ddsp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { LessEqual, Equal, GreaterEqual };
enum class ObjectiveSense { Maximize, Minimize };

/// A linear program over bounded variables:
///   opt  c'x + offset   s.t.  a_i x (<=|=|>=) b_i,  lower <= x <= upper.
/// Lower bounds must be finite.
struct LinearProgram {
    struct Row {
        std::vector<std::pair<std::size_t, double>> terms;
        RowSense sense = RowSense::LessEqual;
        double rhs = 0.0;
        std::string name;
    };

    ObjectiveSense sense = ObjectiveSense::Maximize;
    std::vector<double> objective;
    double objective_offset = 0.0;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::string> names;
    std::vector<Row> rows;

    std::size_t variables() const { return objective.size(); }

    std::size_t add_variable(double cost, double lo = 0.0, double hi = kInf, std::string name = {});
    std::size_t add_row(std::vector<std::pair<std::size_t, double>> terms, RowSense sense, double rhs,
                        std::string name = {});

    /// Throws std::invalid_argument on inconsistent dimensions or bounds.
    void validate() const;

    double evaluate(const std::vector<double>& x) const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(LpStatus s);

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    double objective = 0.0;
    std::vector<double> x;
    /// Row multipliers of the maximization form (a Minimize program is
    /// solved as max -c'x and its duals are reported for that form).
    std::vector<double> duals;
    int iterations = 0;
    int bland_pivots = 0;
};

struct SimplexOptions {
    int max_iterations = 0;  // 0 -> 50 * (rows + columns) + 1000
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-11;
    /// Consecutive degenerate pivots before switching to Bland's rule.
    int degenerate_streak = 50;
};

/// Bounded-variable primal simplex (two-phase, dense tableau).
LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& opts = {});

/// Optimality certificate recomputed from the program data alone.
struct LpCertificate {
    double primal_infeasibility = 0.0;
    double dual_infeasibility = 0.0;
    double complementary_slackness = 0.0;
    double duality_gap = 0.0;

    bool certified(double primal_tol = 1e-7, double cs_tol = 1e-6) const {
        return primal_infeasibility <= primal_tol && dual_infeasibility <= cs_tol &&
               complementary_slackness <= cs_tol;
    }
};

LpCertificate certify(const LinearProgram& lp, const LpSolution& sol);

/// CPLEX-style text LP for cross-checking with external solvers.
std::string to_lp_format(const LinearProgram& lp);

}  // namespace ddsp

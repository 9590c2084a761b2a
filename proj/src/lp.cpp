#include "ddsp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace ddsp {

std::size_t LinearProgram::add_variable(double cost, double lo, double hi, std::string name) {
    objective.push_back(cost);
    lower.push_back(lo);
    upper.push_back(hi);
    names.push_back(std::move(name));
    return objective.size() - 1;
}

std::size_t LinearProgram::add_row(std::vector<std::pair<std::size_t, double>> terms, RowSense s,
                                   double rhs, std::string name) {
    rows.push_back(Row{std::move(terms), s, rhs, std::move(name)});
    return rows.size() - 1;
}

void LinearProgram::validate() const {
    const std::size_t n = objective.size();
    if (lower.size() != n || upper.size() != n) {
        throw std::invalid_argument("LinearProgram: bound vectors do not match variable count");
    }
    if (!names.empty() && names.size() != n) {
        throw std::invalid_argument("LinearProgram: names do not match variable count");
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(lower[j])) {
            throw std::invalid_argument("LinearProgram: variable " + std::to_string(j) + " has no finite lower bound");
        }
        if (std::isnan(upper[j]) || !std::isfinite(objective[j])) {
            throw std::invalid_argument("LinearProgram: variable " + std::to_string(j) + " has invalid data");
        }
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!std::isfinite(rows[i].rhs)) {
            throw std::invalid_argument("LinearProgram: row " + std::to_string(i) + " has non-finite rhs");
        }
        for (const auto& [j, a] : rows[i].terms) {
            if (j >= n || !std::isfinite(a)) {
                throw std::invalid_argument("LinearProgram: row " + std::to_string(i) + " has an invalid term");
            }
        }
    }
}

double LinearProgram::evaluate(const std::vector<double>& x) const {
    double v = objective_offset;
    for (std::size_t j = 0; j < objective.size(); ++j) v += objective[j] * x[j];
    return v;
}

const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::IterationLimit: return "iteration limit";
    }
    return "unknown";
}

namespace {

enum class ColState : unsigned char { Basic, AtLower, AtUpper };

// Bounded-variable tableau over shifted variables (every lower bound is 0).
class Tableau {
public:
    Tableau(const LinearProgram& lp, const SimplexOptions& opts) : opts_(opts) {
        n_struct_ = lp.variables();
        m_ = lp.rows.size();

        // Column layout: structural | slacks | artificials.
        std::vector<int> slack_sign(m_, 0);
        for (std::size_t i = 0; i < m_; ++i) {
            if (lp.rows[i].sense == RowSense::LessEqual) slack_sign[i] = 1;
            if (lp.rows[i].sense == RowSense::GreaterEqual) slack_sign[i] = -1;
        }
        std::vector<std::size_t> slack_col(m_, npos);
        std::size_t col = n_struct_;
        for (std::size_t i = 0; i < m_; ++i) {
            if (slack_sign[i] != 0) slack_col[i] = col++;
        }

        first_art_ = col;

        std::vector<double> rhs(m_);
        row_sign_.assign(m_, 1);
        for (std::size_t i = 0; i < m_; ++i) {
            double b = lp.rows[i].rhs;
            for (const auto& [j, a] : lp.rows[i].terms) b -= a * lp.lower[j];
            if (b < 0.0) {
                row_sign_[i] = -1;
                b = -b;
            }
            rhs[i] = b;
        }
        std::vector<std::size_t> art_col(m_, npos);
        init_col_.assign(m_, npos);
        for (std::size_t i = 0; i < m_; ++i) {
            if (slack_sign[i] * row_sign_[i] == 1) {
                init_col_[i] = slack_col[i];
            } else {
                art_col[i] = col++;
                init_col_[i] = art_col[i];
            }
        }
        n_cols_ = col;

        t_.assign(m_ * n_cols_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            const double s = row_sign_[i];
            for (const auto& [j, a] : lp.rows[i].terms) at(i, j) += s * a;
            if (slack_col[i] != npos) at(i, slack_col[i]) = s * slack_sign[i];
            if (art_col[i] != npos) at(i, art_col[i]) = 1.0;
        }

        ub_.assign(n_cols_, kInf);
        for (std::size_t j = 0; j < n_struct_; ++j) ub_[j] = lp.upper[j] - lp.lower[j];
        state_.assign(n_cols_, ColState::AtLower);
        basis_ = init_col_;
        for (std::size_t i = 0; i < m_; ++i) state_[basis_[i]] = ColState::Basic;
        beta_ = rhs;
        blocked_.assign(n_cols_, false);

        sense_sign_ = lp.sense == ObjectiveSense::Maximize ? 1.0 : -1.0;
        struct_cost_.resize(n_struct_);
        for (std::size_t j = 0; j < n_struct_; ++j) struct_cost_[j] = sense_sign_ * lp.objective[j];
        lower_ = lp.lower;

        max_iter_ = opts.max_iterations > 0 ? opts.max_iterations
                                            : static_cast<int>(50 * (m_ + n_cols_) + 1000);
    }

    LpSolution solve() {
        LpSolution sol;
        for (std::size_t j = 0; j < n_struct_; ++j) {
            if (ub_[j] < -opts_.feasibility_tol) {
                sol.status = LpStatus::Infeasible;
                return sol;
            }
            ub_[j] = std::max(ub_[j], 0.0);
        }

        // Phase 1: maximize -sum(artificials).
        cost_.assign(n_cols_, 0.0);
        for (std::size_t j = first_art_; j < n_cols_; ++j) cost_[j] = -1.0;
        if (first_art_ < n_cols_) {
            recompute_reduced_costs();
            const LpStatus st = iterate();
            if (st == LpStatus::IterationLimit) {
                sol.status = st;
                finish(sol);
                return sol;
            }
            double infeas = 0.0;
            double scale = 1.0;
            for (std::size_t i = 0; i < m_; ++i) {
                if (basis_[i] >= first_art_) infeas += beta_[i];
                scale = std::max(scale, std::abs(beta_[i]));
            }
            if (infeas > 1e-7 * scale) {
                sol.status = LpStatus::Infeasible;
                finish(sol);
                return sol;
            }
            drive_out_artificials();
        }
        for (std::size_t j = first_art_; j < n_cols_; ++j) {
            blocked_[j] = true;
            ub_[j] = 0.0;
        }

        // Phase 2.
        cost_.assign(n_cols_, 0.0);
        std::copy(struct_cost_.begin(), struct_cost_.end(), cost_.begin());
        recompute_reduced_costs();
        bland_ = false;
        sol.status = iterate();
        finish(sol);
        return sol;
    }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    double& at(std::size_t i, std::size_t j) { return t_[i * n_cols_ + j]; }
    double at(std::size_t i, std::size_t j) const { return t_[i * n_cols_ + j]; }

    void recompute_reduced_costs() {
        d_ = cost_;
        for (std::size_t i = 0; i < m_; ++i) {
            const double cb = cost_[basis_[i]];
            if (cb == 0.0) continue;
            const double* row = &t_[i * n_cols_];
            for (std::size_t j = 0; j < n_cols_; ++j) d_[j] -= cb * row[j];
        }
        for (std::size_t i = 0; i < m_; ++i) d_[basis_[i]] = 0.0;
    }

    std::size_t choose_entering() const {
        std::size_t best = npos;
        double best_score = 0.0;
        for (std::size_t j = 0; j < n_cols_; ++j) {
            if (state_[j] == ColState::Basic || blocked_[j]) continue;
            double score = 0.0;
            if (state_[j] == ColState::AtLower && ub_[j] > 0.0 && d_[j] > opts_.optimality_tol) score = d_[j];
            if (state_[j] == ColState::AtUpper && d_[j] < -opts_.optimality_tol) score = -d_[j];
            if (score <= 0.0) continue;
            if (bland_) return j;
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        return best;
    }

    void pivot(std::size_t r, std::size_t q) {
        double* prow = &t_[r * n_cols_];
        const double inv = 1.0 / prow[q];
        nz_.clear();
        for (std::size_t j = 0; j < n_cols_; ++j) {
            if (prow[j] != 0.0) {
                prow[j] *= inv;
                nz_.push_back(j);
            }
        }
        prow[q] = 1.0;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r) continue;
            double* row = &t_[i * n_cols_];
            const double f = row[q];
            if (f == 0.0) continue;
            for (std::size_t j : nz_) row[j] -= f * prow[j];
            row[q] = 0.0;
        }
        const double fd = d_[q];
        if (fd != 0.0) {
            for (std::size_t j : nz_) d_[j] -= fd * prow[j];
            d_[q] = 0.0;
        }
    }

    LpStatus iterate() {
        int degenerate = 0;
        while (true) {
            if (iterations_ >= max_iter_) return LpStatus::IterationLimit;
            const std::size_t q = choose_entering();
            if (q == npos) return LpStatus::Optimal;
            ++iterations_;
            if (bland_) ++bland_pivots_;

            const double dir = state_[q] == ColState::AtLower ? 1.0 : -1.0;
            double step = ub_[q];
            std::size_t leave = npos;
            double leave_alpha = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                const double alpha = dir * at(i, q);
                double lim;
                if (alpha > opts_.pivot_tol) {
                    lim = std::max(beta_[i], 0.0) / alpha;
                } else if (alpha < -opts_.pivot_tol && std::isfinite(ub_[basis_[i]])) {
                    lim = std::max(ub_[basis_[i]] - beta_[i], 0.0) / -alpha;
                } else {
                    continue;
                }
                bool take = false;
                if (lim < step - 1e-12) {
                    take = true;
                } else if (lim <= step + 1e-12 && leave != npos) {
                    take = bland_ ? basis_[i] < basis_[leave] : std::abs(alpha) > std::abs(leave_alpha);
                } else if (lim <= step && leave == npos) {
                    take = true;
                }
                if (take) {
                    step = lim;
                    leave = i;
                    leave_alpha = alpha;
                }
            }
            if (leave == npos && !std::isfinite(step)) return LpStatus::Unbounded;

            if (step < 1e-12) {
                if (++degenerate >= opts_.degenerate_streak) bland_ = true;
            } else {
                degenerate = 0;
            }

            if (step != 0.0) {
                for (std::size_t i = 0; i < m_; ++i) beta_[i] -= dir * step * at(i, q);
            }
            if (leave == npos) {
                state_[q] = state_[q] == ColState::AtLower ? ColState::AtUpper : ColState::AtLower;
                continue;
            }
            const std::size_t out = basis_[leave];
            const double entering_value = (dir > 0.0 ? 0.0 : ub_[q]) + dir * step;
            state_[out] = leave_alpha > 0.0 ? ColState::AtLower : ColState::AtUpper;
            pivot(leave, q);
            basis_[leave] = q;
            state_[q] = ColState::Basic;
            beta_[leave] = entering_value;
        }
    }

    void drive_out_artificials() {
        for (std::size_t r = 0; r < m_; ++r) {
            if (basis_[r] < first_art_) continue;
            std::size_t best = npos;
            double best_abs = 1e-9;
            for (std::size_t j = 0; j < first_art_; ++j) {
                if (state_[j] == ColState::Basic) continue;
                if (std::abs(at(r, j)) > best_abs) {
                    best_abs = std::abs(at(r, j));
                    best = j;
                }
            }
            if (best == npos) continue;  // redundant row; artificial stays basic at 0
            const double value = state_[best] == ColState::AtUpper ? ub_[best] : 0.0;
            state_[basis_[r]] = ColState::AtLower;
            pivot(r, best);
            basis_[r] = best;
            state_[best] = ColState::Basic;
            beta_[r] = value;
        }
    }

    void finish(LpSolution& sol) const {
        sol.iterations = iterations_;
        sol.bland_pivots = bland_pivots_;
        std::vector<double> value(n_cols_, 0.0);
        for (std::size_t j = 0; j < n_cols_; ++j) {
            if (state_[j] == ColState::AtUpper) value[j] = ub_[j];
        }
        for (std::size_t i = 0; i < m_; ++i) value[basis_[i]] = beta_[i];
        sol.x.resize(n_struct_);
        for (std::size_t j = 0; j < n_struct_; ++j) {
            double v = std::clamp(value[j], 0.0, ub_[j]);
            sol.x[j] = lower_[j] + v;
        }
        sol.duals.assign(m_, 0.0);
        if (sol.status == LpStatus::Optimal) {
            for (std::size_t i = 0; i < m_; ++i) sol.duals[i] = row_sign_[i] * -d_[init_col_[i]];
        }
    }

    SimplexOptions opts_;
    std::size_t m_ = 0;
    std::size_t n_struct_ = 0;
    std::size_t n_cols_ = 0;
    std::size_t first_art_ = 0;
    std::vector<double> t_;
    std::vector<double> beta_;
    std::vector<double> ub_;
    std::vector<double> cost_;
    std::vector<double> d_;
    std::vector<double> struct_cost_;
    std::vector<double> lower_;
    std::vector<ColState> state_;
    std::vector<std::size_t> basis_;
    std::vector<std::size_t> init_col_;
    std::vector<int> row_sign_;
    std::vector<bool> blocked_;
    std::vector<std::size_t> nz_;
    double sense_sign_ = 1.0;
    bool bland_ = false;
    int iterations_ = 0;
    int bland_pivots_ = 0;
    int max_iter_ = 0;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& opts) {
    lp.validate();
    Tableau tab(lp, opts);
    LpSolution sol = tab.solve();
    if (!sol.x.empty()) sol.objective = lp.evaluate(sol.x);
    return sol;
}

LpCertificate certify(const LinearProgram& lp, const LpSolution& sol) {
    LpCertificate cert;
    const std::size_t n = lp.variables();
    if (sol.x.size() != n || sol.duals.size() != lp.rows.size()) {
        cert.primal_infeasibility = kInf;
        return cert;
    }
    const double sgn = lp.sense == ObjectiveSense::Maximize ? 1.0 : -1.0;

    std::vector<double> reduced(n);
    for (std::size_t j = 0; j < n; ++j) reduced[j] = sgn * lp.objective[j];
    double dual_obj = 0.0;
    for (std::size_t i = 0; i < lp.rows.size(); ++i) {
        const auto& row = lp.rows[i];
        const double y = sol.duals[i];
        double act = 0.0;
        for (const auto& [j, a] : row.terms) {
            act += a * sol.x[j];
            reduced[j] -= y * a;
        }
        const double slack = row.rhs - act;
        const double scale = 1.0 + std::abs(row.rhs);
        double viol = 0.0;
        switch (row.sense) {
            case RowSense::LessEqual:
                viol = std::max(-slack, 0.0);
                cert.dual_infeasibility = std::max(cert.dual_infeasibility, -y);
                break;
            case RowSense::GreaterEqual:
                viol = std::max(slack, 0.0);
                cert.dual_infeasibility = std::max(cert.dual_infeasibility, y);
                break;
            case RowSense::Equal:
                viol = std::abs(slack);
                break;
        }
        cert.primal_infeasibility = std::max(cert.primal_infeasibility, viol / scale);
        if (row.sense != RowSense::Equal) {
            cert.complementary_slackness = std::max(cert.complementary_slackness, std::abs(y * slack));
        }
        dual_obj += y * row.rhs;
    }
    double primal_obj = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double x = sol.x[j];
        const double d = reduced[j];
        primal_obj += sgn * lp.objective[j] * x;
        const double lo_gap = x - lp.lower[j];
        const double up_gap = lp.upper[j] - x;
        cert.primal_infeasibility = std::max({cert.primal_infeasibility, -lo_gap, -up_gap});
        if (d > 0.0) {
            if (std::isfinite(lp.upper[j])) {
                cert.complementary_slackness = std::max(cert.complementary_slackness, d * std::max(up_gap, 0.0));
                dual_obj += d * lp.upper[j];
            } else {
                cert.dual_infeasibility = std::max(cert.dual_infeasibility, d);
            }
        } else {
            cert.complementary_slackness = std::max(cert.complementary_slackness, -d * std::max(lo_gap, 0.0));
            dual_obj += d * lp.lower[j];
        }
    }
    cert.duality_gap = std::abs(primal_obj - dual_obj);
    return cert;
}

namespace {

std::string var_name(const LinearProgram& lp, std::size_t j) {
    if (j < lp.names.size() && !lp.names[j].empty()) return lp.names[j];
    return "x" + std::to_string(j);
}

void write_term(std::ostringstream& os, double a, const std::string& name, bool first) {
    if (a < 0.0) {
        os << (first ? "- " : " - ") << -a << ' ' << name;
    } else {
        os << (first ? "" : " + ") << a << ' ' << name;
    }
}

}  // namespace

std::string to_lp_format(const LinearProgram& lp) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "\\ objective offset: " << lp.objective_offset << '\n';
    os << (lp.sense == ObjectiveSense::Maximize ? "Maximize" : "Minimize") << "\n obj:";
    bool first = true;
    std::size_t written = 0;
    for (std::size_t j = 0; j < lp.variables(); ++j) {
        if (lp.objective[j] == 0.0) continue;
        os << ((++written % 6 == 0) ? "\n   " : " ");
        write_term(os, lp.objective[j], var_name(lp, j), first);
        first = false;
    }
    if (first) os << " 0 " << var_name(lp, 0);
    os << "\nSubject To\n";
    for (std::size_t i = 0; i < lp.rows.size(); ++i) {
        const auto& row = lp.rows[i];
        os << ' ' << (row.name.empty() ? "c" + std::to_string(i) : row.name) << ':';
        bool f = true;
        std::size_t n = 0;
        for (const auto& [j, a] : row.terms) {
            os << ((++n % 6 == 0) ? "\n   " : " ");
            write_term(os, a, var_name(lp, j), f);
            f = false;
        }
        if (f) os << " 0 " << var_name(lp, 0);
        switch (row.sense) {
            case RowSense::LessEqual: os << " <= "; break;
            case RowSense::Equal: os << " = "; break;
            case RowSense::GreaterEqual: os << " >= "; break;
        }
        os << row.rhs << '\n';
    }
    os << "Bounds\n";
    for (std::size_t j = 0; j < lp.variables(); ++j) {
        os << ' ' << lp.lower[j] << " <= " << var_name(lp, j);
        if (std::isfinite(lp.upper[j])) os << " <= " << lp.upper[j];
        os << '\n';
    }
    os << "End\n";
    return os.str();
}

}  // namespace ddsp

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ddsp/mdn.hpp"
#include "json.hpp"

namespace ddsp {

/// Row-major N x K responsibility matrix.
struct Responsibilities {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    double operator()(std::size_t n, std::size_t k) const { return values[n * cols + k]; }
    double& operator()(std::size_t n, std::size_t k) { return values[n * cols + k]; }
};

struct EmState {
    GmmParams params;
    Responsibilities responsibilities;
    double log_likelihood = 0.0;
    int iteration = 0;
    /// Log-likelihood after initialization and after every M-step.
    std::vector<double> trace;
    /// Iterations at which an empty component was re-seeded; the trace may
    /// dip at these points.
    std::vector<int> rescues;
    bool converged = false;
};

struct EmOptions {
    std::size_t components = 3;
    double tol = 1e-6;
    int max_iter = 500;
    int restarts = 5;
    std::uint64_t seed = 0;
    double sigma_floor = kSigmaFloor;
    /// Explicit starting point; when set, restarts are ignored.
    std::optional<GmmParams> init;
};

/// Result of a multi-restart fit: the best state plus bookkeeping.
struct EmFit {
    EmState best;
    int restarts = 0;
    std::uint64_t seed = 0;
    std::vector<double> restart_log_likelihoods;
};

Responsibilities e_step(std::span<const double> data, const GmmParams& params);

/// Weighted-moment re-estimation. Components whose effective count falls
/// below 1e-8 * N are re-seeded at the point with the lowest total
/// responsibility; `rescued` (if given) is set when that happens.
GmmParams m_step(std::span<const double> data, const Responsibilities& resp,
                 double sigma_floor = kSigmaFloor, bool* rescued = nullptr);

double log_likelihood(std::span<const double> data, const GmmParams& params);

/// Seeded initialization: K distinct data points as means, the global
/// variance for every component, uniform weights.
GmmParams em_initialize(std::span<const double> data, std::size_t k, std::uint64_t seed,
                        double sigma_floor = kSigmaFloor);

/// Single EM run from `init` until |dLL| < tol or max_iter iterations.
EmState em_run(std::span<const double> data, GmmParams init, double tol, int max_iter,
               double sigma_floor = kSigmaFloor);

/// Multi-restart EM keeping the best final log-likelihood.
EmFit em_fit(std::span<const double> data, const EmOptions& opts);

nlohmann::json fit_record(const EmFit& fit);

}  // namespace ddsp

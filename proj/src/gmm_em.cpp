#include "ddsp/gmm_em.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "ddsp/rng.hpp"

namespace ddsp {

namespace {

void check_finite(std::span<const double> data) {
    for (std::size_t n = 0; n < data.size(); ++n) {
        if (!std::isfinite(data[n])) {
            throw std::invalid_argument("em: data point " + std::to_string(n) + " is not finite");
        }
    }
}

double population_variance(std::span<const double> data) {
    const double n = static_cast<double>(data.size());
    const double mean = std::accumulate(data.begin(), data.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : data) ss += (x - mean) * (x - mean);
    return ss / n;
}

}  // namespace

Responsibilities e_step(std::span<const double> data, const GmmParams& params) {
    const std::size_t k = params.components();
    Responsibilities r{data.size(), k, std::vector<double>(data.size() * k)};
    std::vector<double> terms(k);
    std::vector<double> log_w(k);
    for (std::size_t j = 0; j < k; ++j) log_w[j] = std::log(params.weights[j]);
    for (std::size_t n = 0; n < data.size(); ++n) {
        for (std::size_t j = 0; j < k; ++j) {
            terms[j] = log_w[j] + normal_log_pdf(data[n], params.means[j], params.stds[j]);
        }
        const double lse = log_sum_exp(terms);
        double row = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            r(n, j) = std::exp(terms[j] - lse);
            row += r(n, j);
        }
        for (std::size_t j = 0; j < k; ++j) r(n, j) /= row;
    }
    return r;
}

GmmParams m_step(std::span<const double> data, const Responsibilities& resp, double sigma_floor,
                 bool* rescued) {
    const std::size_t n_points = data.size();
    const std::size_t k = resp.cols;
    if (resp.rows != n_points || k == 0) {
        throw std::invalid_argument("m_step: responsibility matrix does not match data");
    }
    if (rescued) *rescued = false;

    GmmParams p;
    p.weights.resize(k);
    p.means.resize(k);
    p.stds.resize(k);

    const double n_total = static_cast<double>(n_points);
    const double floor_var = sigma_floor * sigma_floor;
    std::vector<bool> empty(k, false);
    for (std::size_t j = 0; j < k; ++j) {
        double nj = 0.0;
        double sx = 0.0;
        for (std::size_t n = 0; n < n_points; ++n) {
            nj += resp(n, j);
            sx += resp(n, j) * data[n];
        }
        if (nj < 1e-8 * n_total) {
            empty[j] = true;
            continue;
        }
        const double mu = sx / nj;
        double sv = 0.0;
        for (std::size_t n = 0; n < n_points; ++n) sv += resp(n, j) * (data[n] - mu) * (data[n] - mu);
        p.weights[j] = nj / n_total;
        p.means[j] = mu;
        p.stds[j] = std::sqrt(std::max(sv / nj, floor_var));
    }

    if (std::any_of(empty.begin(), empty.end(), [](bool e) { return e; })) {
        if (rescued) *rescued = true;
        // Re-seed at the point the current fit explains worst, with the
        // global spread and a token weight taken from the others.
        std::vector<double> owned(n_points, 0.0);
        for (std::size_t n = 0; n < n_points; ++n) {
            for (std::size_t j = 0; j < k; ++j) {
                if (!empty[j]) owned[n] += resp(n, j);
            }
        }
        const double global_sd = std::sqrt(std::max(population_variance(data), floor_var));
        const double token = 1.0 / n_total;
        for (std::size_t j = 0; j < k; ++j) {
            if (!empty[j]) continue;
            const auto worst = static_cast<std::size_t>(
                std::min_element(owned.begin(), owned.end()) - owned.begin());
            p.means[j] = data[worst];
            p.stds[j] = global_sd;
            p.weights[j] = token;
            owned[worst] = std::numeric_limits<double>::infinity();
        }
    }
    const double wsum = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
    for (double& w : p.weights) w /= wsum;
    return p;
}

double log_likelihood(std::span<const double> data, const GmmParams& params) {
    double ll = 0.0;
    for (double x : data) ll += gmm_log_pdf(x, params);
    return ll;
}

GmmParams em_initialize(std::span<const double> data, std::size_t k, std::uint64_t seed,
                        double sigma_floor) {
    if (data.size() < k || k == 0) {
        throw std::invalid_argument("em: need at least K = " + std::to_string(k) +
                                    " data points, got " + std::to_string(data.size()));
    }
    check_finite(data);
    Rng rng(seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    const double sd = std::sqrt(std::max(population_variance(data), sigma_floor * sigma_floor));
    GmmParams p;
    p.weights.assign(k, 1.0 / static_cast<double>(k));
    p.stds.assign(k, sd);
    // Distinct values first; repeats only when the data has fewer than K.
    for (std::size_t idx : order) {
        if (p.means.size() == k) break;
        if (std::find(p.means.begin(), p.means.end(), data[idx]) == p.means.end()) p.means.push_back(data[idx]);
    }
    for (std::size_t j = 0; p.means.size() < k; ++j) p.means.push_back(data[order[j]]);
    return p;
}

EmState em_run(std::span<const double> data, GmmParams init, double tol, int max_iter,
               double sigma_floor) {
    if (data.size() < init.components()) {
        throw std::invalid_argument("em: fewer data points than components");
    }
    if (!(tol > 0.0)) throw std::invalid_argument("em: tol must be positive");
    check_finite(data);
    init.validate();

    EmState st;
    st.params = std::move(init);
    st.log_likelihood = log_likelihood(data, st.params);
    st.trace.push_back(st.log_likelihood);
    st.responsibilities = e_step(data, st.params);

    while (st.iteration < max_iter) {
        bool rescued = false;
        st.params = m_step(data, st.responsibilities, sigma_floor, &rescued);
        ++st.iteration;
        if (rescued) st.rescues.push_back(st.iteration);
        const double ll = log_likelihood(data, st.params);
        const double delta = ll - st.log_likelihood;
        st.log_likelihood = ll;
        st.trace.push_back(ll);
        st.responsibilities = e_step(data, st.params);
        if (!rescued && std::abs(delta) < tol) {
            st.converged = true;
            break;
        }
    }
    return st;
}

EmFit em_fit(std::span<const double> data, const EmOptions& opts) {
    if (data.size() < opts.components) {
        throw std::invalid_argument("em_fit: N = " + std::to_string(data.size()) + " < K = " +
                                    std::to_string(opts.components));
    }
    check_finite(data);
    EmFit fit;
    fit.seed = opts.seed;
    if (opts.init) {
        fit.best = em_run(data, *opts.init, opts.tol, opts.max_iter, opts.sigma_floor);
        fit.restarts = 1;
        fit.restart_log_likelihoods.push_back(fit.best.log_likelihood);
        return fit;
    }
    const int restarts = std::max(opts.restarts, 1);
    for (int r = 0; r < restarts; ++r) {
        const GmmParams init = em_initialize(data, opts.components, derive_seed(opts.seed, static_cast<std::uint64_t>(r)),
                                             opts.sigma_floor);
        EmState st = em_run(data, init, opts.tol, opts.max_iter, opts.sigma_floor);
        fit.restart_log_likelihoods.push_back(st.log_likelihood);
        if (r == 0 || st.log_likelihood > fit.best.log_likelihood) fit.best = std::move(st);
    }
    fit.restarts = restarts;
    return fit;
}

nlohmann::json fit_record(const EmFit& fit) {
    return nlohmann::json{{"params", fit.best.params},
                          {"log_likelihood", fit.best.log_likelihood},
                          {"trace", fit.best.trace},
                          {"iterations", fit.best.iteration},
                          {"converged", fit.best.converged},
                          {"rescues", fit.best.rescues},
                          {"restarts", fit.restarts},
                          {"restart_log_likelihoods", fit.restart_log_likelihoods},
                          {"seed", fit.seed}};
}

}  // namespace ddsp

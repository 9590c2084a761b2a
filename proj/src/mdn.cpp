#include "ddsp/mdn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ddsp {

namespace {

constexpr double kLogSqrtTwoPi = 0.91893853320467274178;  // 0.5 * log(2 pi)

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Per-component log(w_i N(x | mu_i, sigma_i^2)).
void component_log_terms(double x, const GmmParams& p, std::vector<double>& out) {
    out.resize(p.components());
    for (std::size_t i = 0; i < p.components(); ++i) {
        out[i] = std::log(p.weights[i]) + normal_log_pdf(x, p.means[i], p.stds[i]);
    }
}

}  // namespace

double GmmParams::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < components(); ++i) m += weights[i] * means[i];
    return m;
}

double GmmParams::variance() const {
    double second = 0.0;
    for (std::size_t i = 0; i < components(); ++i) {
        second += weights[i] * (stds[i] * stds[i] + means[i] * means[i]);
    }
    const double m = mean();
    return std::max(second - m * m, 0.0);
}

void GmmParams::validate(double sigma_floor) const {
    const std::size_t k = weights.size();
    if (k == 0) throw std::invalid_argument("GmmParams: no components");
    if (means.size() != k || stds.size() != k) {
        throw std::invalid_argument("GmmParams: weights/means/stds sizes differ");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
            throw std::invalid_argument("GmmParams: weight " + std::to_string(i) + " is negative or non-finite");
        }
        if (!std::isfinite(means[i])) {
            throw std::invalid_argument("GmmParams: mean " + std::to_string(i) + " is non-finite");
        }
        if (!(stds[i] > 0.0) || stds[i] < sigma_floor || !std::isfinite(stds[i])) {
            throw std::invalid_argument("GmmParams: std " + std::to_string(i) + " below floor");
        }
        total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("GmmParams: weights sum to " + std::to_string(total));
    }
}

GmmParams GmmParams::affine(double scale, double shift) const {
    GmmParams out = *this;
    for (std::size_t i = 0; i < components(); ++i) {
        out.means[i] = scale * means[i] + shift;
        out.stds[i] = std::abs(scale) * stds[i];
    }
    return out;
}

void to_json(nlohmann::json& j, const GmmParams& p) {
    j = nlohmann::json{{"K", p.components()}, {"weights", p.weights}, {"means", p.means}, {"stds", p.stds}};
}

void from_json(const nlohmann::json& j, GmmParams& p) {
    j.at("weights").get_to(p.weights);
    j.at("means").get_to(p.means);
    j.at("stds").get_to(p.stds);
    if (j.contains("K") && j.at("K").get<std::size_t>() != p.weights.size()) {
        throw std::invalid_argument("GmmParams: K does not match array lengths");
    }
    p.validate();
}

double normal_log_pdf(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return -0.5 * z * z - std::log(sigma) - kLogSqrtTwoPi;
}

double log_sum_exp(std::span<const double> v) {
    if (v.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

double softplus(double x) {
    // log1p(exp(x)) for small x, x + log1p(exp(-x)) for large x
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

GmmParams mdn_transform(std::span<const double> raw, std::size_t k, double sigma_floor) {
    if (k == 0 || raw.size() != 3 * k) {
        throw std::invalid_argument("mdn_transform: expected " + std::to_string(3 * k) +
                                    " raw outputs, got " + std::to_string(raw.size()));
    }
    GmmParams p;
    p.weights.resize(k);
    p.means.assign(raw.begin() + static_cast<std::ptrdiff_t>(k), raw.begin() + static_cast<std::ptrdiff_t>(2 * k));
    p.stds.resize(k);

    const double lse = log_sum_exp(raw.subspan(0, k));
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        p.weights[i] = std::exp(raw[i] - lse);
        total += p.weights[i];
    }
    for (double& w : p.weights) w /= total;
    for (std::size_t i = 0; i < k; ++i) p.stds[i] = softplus(raw[2 * k + i]) + sigma_floor;
    return p;
}

double gmm_log_pdf(double x, const GmmParams& p) {
    std::vector<double> terms;
    component_log_terms(x, p, terms);
    return log_sum_exp(terms);
}

double gmm_pdf(double x, const GmmParams& p) { return std::exp(gmm_log_pdf(x, p)); }

double gmm_nll(std::span<const double> targets, std::span<const GmmParams> params) {
    if (targets.size() != params.size()) {
        throw std::invalid_argument("gmm_nll: targets and params batches differ in length");
    }
    if (targets.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t n = 0; n < targets.size(); ++n) total -= gmm_log_pdf(targets[n], params[n]);
    return total / static_cast<double>(targets.size());
}

void gmm_nll_raw_gradient(double target, const GmmParams& p, std::span<const double> raw,
                          std::span<double> grad_raw) {
    const std::size_t k = p.components();
    if (raw.size() != 3 * k || grad_raw.size() != 3 * k) {
        throw std::invalid_argument("gmm_nll_raw_gradient: raw/grad length must be 3K");
    }
    std::vector<double> terms;
    component_log_terms(target, p, terms);
    const double lse = log_sum_exp(terms);
    for (std::size_t i = 0; i < k; ++i) {
        const double resp = std::exp(terms[i] - lse);
        const double sigma = p.stds[i];
        const double diff = target - p.means[i];
        grad_raw[i] = p.weights[i] - resp;
        grad_raw[k + i] = -resp * diff / (sigma * sigma);
        const double d_sigma = resp * (1.0 / sigma - diff * diff / (sigma * sigma * sigma));
        grad_raw[2 * k + i] = d_sigma * sigmoid(raw[2 * k + i]);
    }
}

}  // namespace ddsp

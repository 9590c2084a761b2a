#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"

namespace ddsp {

/// Lower bound on component standard deviations, in standardized demand units.
inline constexpr double kSigmaFloor = 1e-3;

/// Univariate Gaussian mixture: weights on the simplex, one mean and one
/// standard deviation per component.
struct GmmParams {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> stds;

    std::size_t components() const { return weights.size(); }

    double mean() const;
    double variance() const;

    /// Throws std::invalid_argument when sizes disagree, weights leave the
    /// simplex (tolerance 1e-9) or a std drops below `sigma_floor`.
    void validate(double sigma_floor = 0.0) const;

    /// Affine map x -> scale * x + shift applied to the mixture variable.
    GmmParams affine(double scale, double shift) const;
};

void to_json(nlohmann::json& j, const GmmParams& p);
void from_json(const nlohmann::json& j, GmmParams& p);

/// Log of the normal density N(x | mu, sigma^2).
double normal_log_pdf(double x, double mu, double sigma);

/// log(sum(exp(v))) without overflow; -inf for an empty span.
double log_sum_exp(std::span<const double> v);

/// Raw head layout is [logits(K) | means(K) | pre-softplus stds(K)].
GmmParams mdn_transform(std::span<const double> raw, std::size_t k,
                        double sigma_floor = kSigmaFloor);

/// Numerically stable softplus log(1 + e^x).
double softplus(double x);

double gmm_log_pdf(double x, const GmmParams& p);
double gmm_pdf(double x, const GmmParams& p);

/// Mean negative log-likelihood of `targets` under the aligned mixtures.
double gmm_nll(std::span<const double> targets, std::span<const GmmParams> params);

/// Gradient of -log p(target) with respect to the 3K raw head outputs that
/// produced `p` through mdn_transform. Written into `grad_raw`.
void gmm_nll_raw_gradient(double target, const GmmParams& p, std::span<const double> raw,
                          std::span<double> grad_raw);

}  // namespace ddsp

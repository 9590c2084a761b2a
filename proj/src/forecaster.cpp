#include "ddsp/forecaster.hpp"

#include <stdexcept>

namespace ddsp {

nlohmann::json forecast_to_json(const DayForecast& f, const std::vector<std::string>& zone_ids, Day target) {
    nlohmann::json records = nlohmann::json::array();
    for (std::size_t z = 0; z < f.point.size(); ++z) {
        nlohmann::json r{{"date", format_date(target)}, {"zone", zone_ids.at(z)}, {"point", f.point[z]}};
        if (!f.distribution.empty()) {
            r["K"] = f.distribution[z].components();
            r["weights"] = f.distribution[z].weights;
            r["means"] = f.distribution[z].means;
            r["stds"] = f.distribution[z].stds;
        }
        records.push_back(std::move(r));
    }
    return records;
}

NetworkForecaster::NetworkForecaster(RecurrentModel model, Standardizer standardizer, std::string name)
    : model_(std::move(model)), standardizer_(std::move(standardizer)), name_(std::move(name)) {
    if (standardizer_.mean.size() != model_.spec().head.zones) {
        throw std::invalid_argument("forecaster: standardizer and model disagree on zone count");
    }
}

NetworkForecaster::NetworkForecaster(const Checkpoint& ckpt)
    : NetworkForecaster(ckpt.model, ckpt.standardizer, ckpt.extra.value("name", std::string("network"))) {}

void NetworkForecaster::set_residual_mixtures(std::vector<GmmParams> residuals) {
    if (residuals.size() != model_.spec().head.zones) {
        throw std::invalid_argument("forecaster: one residual mixture per zone is required");
    }
    residuals_ = std::move(residuals);
}

DayForecast NetworkForecaster::forecast(std::span<const std::vector<double>> history, Day) const {
    std::vector<std::vector<double>> input;
    input.reserve(history.size());
    for (const auto& day : history) input.push_back(standardizer_.forward(day));
    const std::vector<double> raw = model_.forward(input);
    const HeadOutput out = decode_head(model_.spec().head, raw, model_.spec().sigma_floor);

    DayForecast f;
    const std::size_t zones = model_.spec().head.zones;
    for (std::size_t z = 0; z < zones; ++z) {
        f.point.push_back(standardizer_.inverse(z, out.point[z]));
    }
    if (!out.mixtures.empty()) {
        for (std::size_t z = 0; z < zones; ++z) {
            f.distribution.push_back(out.mixtures[z].affine(standardizer_.scale[z], standardizer_.mean[z]));
        }
    } else if (residuals_) {
        for (std::size_t z = 0; z < zones; ++z) f.distribution.push_back((*residuals_)[z].affine(1.0, f.point[z]));
    }
    return f;
}

std::vector<std::vector<double>> history_window(const DemandSeries& series, std::size_t target_index, std::size_t ws) {
    if (target_index < ws || target_index > series.length()) {
        throw std::out_of_range("history_window: not enough history before day " + std::to_string(target_index));
    }
    std::vector<std::vector<double>> w;
    for (std::size_t d = target_index - ws; d < target_index; ++d) w.push_back(series.day_vector(d));
    return w;
}

std::vector<EmFit> fit_residual_mixtures(const Forecaster& point_model, const DemandSeries& series,
                                         std::size_t begin, std::size_t end, const EmOptions& opts) {
    const std::size_t ws = point_model.window();
    begin = std::max(begin, ws);
    end = std::min(end, series.length());
    if (begin >= end) throw std::invalid_argument("fit_residual_mixtures: empty residual range");
    std::vector<std::vector<double>> residuals(series.zones());
    for (std::size_t d = begin; d < end; ++d) {
        const DayForecast f = point_model.forecast(history_window(series, d, ws), series.days[d]);
        for (std::size_t z = 0; z < series.zones(); ++z) residuals[z].push_back(series.values[z][d] - f.point[z]);
    }
    std::vector<EmFit> fits;
    for (std::size_t z = 0; z < series.zones(); ++z) fits.push_back(em_fit(residuals[z], opts));
    return fits;
}

}  // namespace ddsp

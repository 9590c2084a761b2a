#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddsp/checkpoint.hpp"
#include "ddsp/data_pipeline.hpp"
#include "ddsp/gmm_em.hpp"
#include "ddsp/mdn.hpp"
#include "ddsp/recurrent.hpp"

namespace ddsp {

/// Next-day forecast in raw demand units. `distribution` is empty for
/// forecasters that only produce a point.
struct DayForecast {
    std::vector<GmmParams> distribution;
    std::vector<double> point;
};

nlohmann::json forecast_to_json(const DayForecast& f, const std::vector<std::string>& zone_ids, Day target);

class Forecaster {
public:
    virtual ~Forecaster() = default;
    virtual std::size_t window() const = 0;
    virtual std::string name() const = 0;
    /// `history` holds the `window()` days before `target`, oldest first.
    virtual DayForecast forecast(std::span<const std::vector<double>> history, Day target) const = 0;
};

/// Recurrent network on standardized demand. A mixture head yields a
/// distribution directly; a point head yields one only when residual
/// mixtures (raw units, centred on the point forecast) are attached.
class NetworkForecaster : public Forecaster {
public:
    NetworkForecaster(RecurrentModel model, Standardizer standardizer, std::string name);
    explicit NetworkForecaster(const Checkpoint& ckpt);

    std::size_t window() const override { return model_.spec().window; }
    std::string name() const override { return name_; }
    DayForecast forecast(std::span<const std::vector<double>> history, Day target) const override;

    void set_residual_mixtures(std::vector<GmmParams> residuals);
    const std::optional<std::vector<GmmParams>>& residual_mixtures() const { return residuals_; }
    const RecurrentModel& model() const { return model_; }

private:
    RecurrentModel model_;
    Standardizer standardizer_;
    std::string name_;
    std::optional<std::vector<GmmParams>> residuals_;
};

/// Post-hoc route: residuals (actual - point forecast) over target days in
/// [begin, end) of `series`, one EM fit per zone.
std::vector<EmFit> fit_residual_mixtures(const Forecaster& point_model, const DemandSeries& series,
                                         std::size_t begin, std::size_t end, const EmOptions& opts);

/// The window of `ws` days ending the day before `target_index`.
std::vector<std::vector<double>> history_window(const DemandSeries& series, std::size_t target_index, std::size_t ws);

}  // namespace ddsp

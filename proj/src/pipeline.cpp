#include "ddsp/pipeline.hpp"

#include <stdexcept>

#include "ddsp/synth.hpp"

namespace ddsp {

Checkpoint train_checkpoint(const DemandSeries& train, const ModelSpec& spec, const TrainConfig& cfg,
                            std::uint64_t init_seed, bool standardize, std::size_t validation_days,
                            const std::string& name) {
    if (validation_days >= train.length()) {
        throw std::invalid_argument("train: validation_days leaves no training days");
    }
    const DemandSeries fit_part = train.slice(0, train.length() - validation_days);
    Checkpoint ckpt;
    ckpt.standardizer = standardize ? Standardizer::fit(fit_part) : Standardizer::identity(train.zones());
    ckpt.zone_ids = train.zone_ids;
    ckpt.train = cfg;
    ckpt.init_seed = init_seed;
    ckpt.model = RecurrentModel::create(spec, init_seed);
    ckpt.extra["name"] = name;

    const WindowSet windows = ckpt.standardizer.forward(make_windows(fit_part, spec.window));
    const LossKind loss = default_loss(spec.head);
    ckpt.history = ddsp::train(ckpt.model, windows, cfg, loss).history;

    if (validation_days > 0) {
        // Validation windows may look back into the fitting days.
        const std::size_t first = train.length() - validation_days;
        const std::size_t from = first >= spec.window ? first - spec.window : 0;
        const WindowSet held = ckpt.standardizer.forward(make_windows(train.slice(from, train.length()), spec.window));
        ckpt.extra["validation_loss"] = dataset_loss(ckpt.model, held, loss);
    }
    return ckpt;
}

Checkpoint train_from_config(const DemandSeries& series, const PipelineConfig& cfg, const std::string& name) {
    const Day train_end = cfg.get_date("split.train_end");
    const Day test_end = cfg.has("split.test_end") ? cfg.get_date("split.test_end") : series.days.back();
    const auto [train, test] = chronological_split(series, train_end, test_end);
    return train_checkpoint(train, cfg.model_spec(series.zones()), cfg.train_config(), cfg.get_seed("model.init_seed"),
                            cfg.get_bool("model.standardize"), cfg.get_size("split.validation_days"), name);
}

BenchmarkResult run_benchmark(const PipelineConfig& cfg) {
    const SynthConfig sc = cfg.synth_config();
    const DemandSeries series = synth_demand(sc);
    const RelocationInstance inst = synth_instance(sc);

    const Day train_end = cfg.get_date("split.train_end");
    const Day test_end = cfg.has("split.test_end") ? cfg.get_date("split.test_end") : series.days.back();
    const auto [train, test] = chronological_split(series, train_end, test_end);

    const EvaluationConfig ec = cfg.evaluation_config();
    const TrainConfig tc = cfg.train_config();
    const std::uint64_t init_seed = cfg.get_seed("model.init_seed");
    const bool standardize = cfg.get_bool("model.standardize");
    const std::size_t validation = cfg.get_size("split.validation_days");

    ModelSpec mixture = cfg.model_spec(series.zones());
    mixture.cell = CellType::Gru;
    mixture.head.kind = HeadKind::Mixture;
    ModelSpec point = mixture;
    point.cell = CellType::Lstm;
    point.head.kind = HeadKind::Point;
    point.head.aux_point = false;

    const Checkpoint a = train_checkpoint(train, mixture, tc, init_seed, standardize, validation, "GRU-MDN");
    const Checkpoint b = train_checkpoint(train, point, tc, init_seed, standardize, validation, "LSTM");
    const NetworkForecaster fa(a);
    const NetworkForecaster fb(b);

    BenchmarkResult r;
    r.stochastic = rolling_evaluate(fa, PlanMode::Stochastic, series, test.days.front(), test.days.back(), inst, ec);
    r.deterministic =
        rolling_evaluate(fb, PlanMode::Deterministic, series, test.days.front(), test.days.back(), inst, ec);
    r.comparison = compare(r.stochastic, r.deterministic);
    return r;
}

}  // namespace ddsp

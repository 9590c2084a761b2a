#pragma once

#include <string>

#include "ddsp/checkpoint.hpp"
#include "ddsp/config.hpp"
#include "ddsp/evaluation.hpp"
#include "ddsp/forecaster.hpp"

namespace ddsp {

/// Fits standardization on `train`, builds windows, initializes from
/// `init_seed` and trains. The last `validation_days` are held out of the
/// gradient steps; their mean loss is stored in `extra["validation_loss"]`.
Checkpoint train_checkpoint(const DemandSeries& train, const ModelSpec& spec, const TrainConfig& cfg,
                            std::uint64_t init_seed, bool standardize, std::size_t validation_days,
                            const std::string& name);

/// Checkpoint for the model described by `cfg` on the training partition
/// of `series`.
Checkpoint train_from_config(const DemandSeries& series, const PipelineConfig& cfg, const std::string& name);

struct BenchmarkResult {
    EvaluationReport stochastic;
    EvaluationReport deterministic;
    ComparisonReport comparison;
};

/// Synthetic end-to-end run: recurrent mixture model with SAA planning
/// against a point model with deterministic planning, both trained on the
/// same partition and scored on the same test days.
BenchmarkResult run_benchmark(const PipelineConfig& cfg);

}  // namespace ddsp

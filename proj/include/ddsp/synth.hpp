#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ddsp/data_pipeline.hpp"
#include "ddsp/relocation.hpp"

namespace ddsp {

/// Regime-switching daily demand. Zone 0 is a steady hub; every other zone
/// follows its own two-state Markov regime (low / high), so its next-day
/// demand is bimodal given the past. Weekly seasonality scales all zones.
struct SynthConfig {
    std::size_t zones = 2;
    std::size_t days = 691;
    Day start = Day{std::chrono::year{2017} / 1 / 1};
    std::uint64_t seed = 7;
    double stay_probability = 0.7;
    double hub_level = 30.0;
    double low_level = 10.0;
    double high_level = 40.0;
    double noise_sd = 2.0;
    double weekly_amplitude = 0.15;
};

DemandSeries synth_demand(const SynthConfig& cfg);

/// Adjacent 0.05-degree boxes along a Manhattan-like latitude band.
ZoneMap synth_zone_map(std::size_t zones);

/// Expands daily counts into individual trip records (pickup inside the
/// zone box, uniform time of day).
std::vector<TripRecord> synth_trips(const DemandSeries& series, const ZoneMap& zones, std::uint64_t seed);

void write_trips_csv(const std::vector<TripRecord>& trips, std::ostream& out);

/// Whole fleet parked at the hub; sized to cover the hub plus every other
/// zone's high regime.
RelocationInstance synth_instance(const SynthConfig& cfg);

}  // namespace ddsp

#include "ddsp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

#include "ddsp/rng.hpp"

namespace ddsp {

DemandSeries synth_demand(const SynthConfig& cfg) {
    if (cfg.zones == 0) throw std::invalid_argument("synth: zones must be >= 1");
    Rng rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, cfg.noise_sd);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    DemandSeries s;
    for (std::size_t z = 0; z < cfg.zones; ++z) s.zone_ids.push_back("Z" + std::to_string(z));
    s.values.assign(cfg.zones, {});
    std::vector<bool> high(cfg.zones, false);
    for (std::size_t z = 1; z < cfg.zones; ++z) high[z] = u01(rng) < 0.5;

    for (std::size_t d = 0; d < cfg.days; ++d) {
        const Day day = cfg.start + std::chrono::days{static_cast<long>(d)};
        const unsigned dow = std::chrono::weekday{day}.c_encoding();
        const double season = 1.0 + cfg.weekly_amplitude * std::sin(2.0 * std::numbers::pi * dow / 7.0);
        s.days.push_back(day);
        s.filled.push_back(false);
        for (std::size_t z = 0; z < cfg.zones; ++z) {
            double level = cfg.hub_level;
            if (z > 0) {
                if (d > 0 && u01(rng) >= cfg.stay_probability) high[z] = !high[z];
                level = high[z] ? cfg.high_level : cfg.low_level;
            }
            const double v = std::round(level * season + noise(rng));
            s.values[z].push_back(std::max(v, 0.0));
        }
    }
    return s;
}

ZoneMap synth_zone_map(std::size_t zones) {
    ZoneMap m;
    for (std::size_t z = 0; z < zones; ++z) {
        const double lat0 = 40.70 + 0.05 * static_cast<double>(z);
        m.zones.push_back(Zone{"Z" + std::to_string(z), lat0, lat0 + 0.0499, -74.02, -73.93});
    }
    return m;
}

std::vector<TripRecord> synth_trips(const DemandSeries& series, const ZoneMap& zones, std::uint64_t seed) {
    if (zones.size() != series.zones()) throw std::invalid_argument("synth_trips: zone map does not match series");
    Rng rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<int> passengers(1, 4);
    std::vector<TripRecord> trips;
    for (std::size_t d = 0; d < series.length(); ++d) {
        const std::int64_t day_start =
            std::chrono::duration_cast<std::chrono::seconds>(series.days[d].time_since_epoch()).count();
        for (std::size_t z = 0; z < series.zones(); ++z) {
            const Zone& box = zones.zones[z];
            const auto count = static_cast<long>(series.values[z][d]);
            for (long k = 0; k < count; ++k) {
                TripRecord t;
                t.pickup_time = day_start + static_cast<std::int64_t>(u01(rng) * 86399.0);
                t.pickup_lat = box.min_lat + u01(rng) * (box.max_lat - box.min_lat);
                t.pickup_lon = box.min_lon + u01(rng) * (box.max_lon - box.min_lon);
                t.dropoff_lat = 40.70 + u01(rng) * 0.1;
                t.dropoff_lon = -74.02 + u01(rng) * 0.09;
                t.passengers = passengers(rng);
                trips.push_back(t);
            }
        }
    }
    std::stable_sort(trips.begin(), trips.end(),
                     [](const TripRecord& a, const TripRecord& b) { return a.pickup_time < b.pickup_time; });
    return trips;
}

void write_trips_csv(const std::vector<TripRecord>& trips, std::ostream& out) {
    out << "pickup_time,pickup_lat,pickup_lon,dropoff_lat,dropoff_lon,passengers\n";
    out << std::fixed << std::setprecision(6);
    for (const auto& t : trips) {
        out << t.pickup_time << ',' << t.pickup_lat << ',' << t.pickup_lon << ',' << t.dropoff_lat << ','
            << t.dropoff_lon << ',' << t.passengers << '\n';
    }
}

RelocationInstance synth_instance(const SynthConfig& cfg) {
    RelocationInstance inst;
    const std::size_t z = cfg.zones;
    inst.initial_stock.assign(z, 0.0);
    inst.initial_stock[0] = std::round(cfg.hub_level * (1.0 + cfg.weekly_amplitude) +
                                       static_cast<double>(z - 1) * cfg.high_level);
    inst.move_cost.assign(z * z, 0.0);
    for (std::size_t i = 0; i < z; ++i) {
        for (std::size_t j = 0; j < z; ++j) {
            if (i != j) inst.move_cost[i * z + j] = 2.0 + 0.5 * std::abs(static_cast<double>(i) - static_cast<double>(j));
        }
    }
    inst.price = 10.0;
    inst.penalty = 5.0;
    return inst;
}

}  // namespace ddsp

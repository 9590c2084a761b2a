#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace ddsp {

using Day = std::chrono::sys_days;

/// Parses YYYY-MM-DD. Throws std::invalid_argument on malformed input.
Day parse_date(const std::string& text);
std::string format_date(Day d);

/// Accepts integer UTC epoch seconds or ISO-8601 "YYYY-MM-DD[T| ]HH:MM[:SS][Z]".
std::optional<std::int64_t> parse_timestamp(const std::string& text);

/// UTC calendar day of an epoch-seconds timestamp.
Day utc_day(std::int64_t epoch_seconds);

struct TripRecord {
    std::int64_t pickup_time = 0;  // UTC seconds
    double pickup_lat = 0.0;
    double pickup_lon = 0.0;
    double dropoff_lat = 0.0;
    double dropoff_lon = 0.0;
    int passengers = 0;

    bool operator==(const TripRecord&) const = default;
};

/// Column names in the input CSV header for each trip field.
struct TripSchema {
    std::string pickup_time = "pickup_time";
    std::string pickup_lat = "pickup_lat";
    std::string pickup_lon = "pickup_lon";
    std::string dropoff_lat = "dropoff_lat";
    std::string dropoff_lon = "dropoff_lon";
    std::string passengers = "passengers";
};

void from_json(const nlohmann::json& j, TripSchema& s);

struct IngestReport {
    std::size_t total_rows = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::map<std::string, std::size_t> reasons;

    // Filled in by aggregate_demand.
    std::size_t zone_matched = 0;
    std::size_t zone_unmatched = 0;
    std::vector<std::string> filled_days;

    nlohmann::json to_json() const;
};

struct IngestResult {
    std::vector<TripRecord> trips;
    IngestReport report;
};

/// Reads a header-led CSV. Malformed rows are skipped and counted by reason;
/// an unreadable file throws std::runtime_error. Records are returned sorted
/// by pickup time (stable).
IngestResult ingest_trips(const std::filesystem::path& path, const TripSchema& schema);
IngestResult ingest_trips(std::istream& in, const TripSchema& schema);

struct Zone {
    std::string id;
    double min_lat = 0.0;
    double max_lat = 0.0;
    double min_lon = 0.0;
    double max_lon = 0.0;

    bool contains(double lat, double lon) const {
        return lat >= min_lat && lat <= max_lat && lon >= min_lon && lon <= max_lon;
    }
};

/// Axis-aligned boxes; the first box (declaration order) containing a point wins.
struct ZoneMap {
    std::vector<Zone> zones;

    std::size_t size() const { return zones.size(); }
    std::optional<std::size_t> locate(double lat, double lon) const;
    void validate() const;
    std::vector<std::string> ids() const;
};

void from_json(const nlohmann::json& j, ZoneMap& m);
void to_json(nlohmann::json& j, const ZoneMap& m);

/// Per-zone daily demand over a gap-free, strictly increasing day index.
struct DemandSeries {
    std::vector<std::string> zone_ids;
    std::vector<Day> days;
    std::vector<std::vector<double>> values;  // zones x days
    std::vector<bool> filled;                 // day had no observations

    std::size_t zones() const { return zone_ids.size(); }
    std::size_t length() const { return days.size(); }
    std::vector<double> day_vector(std::size_t d) const;
    std::optional<std::size_t> index_of(Day d) const;
    /// Days [begin, end) as a new series.
    DemandSeries slice(std::size_t begin, std::size_t end) const;
    double total() const;
    void validate() const;
};

enum class DemandUnit { Trips, Passengers };

DemandUnit parse_demand_unit(const std::string& s);

/// Counts trips (or passengers) per zone per UTC pickup day. Unmatched
/// trips are dropped and counted in `report`; missing days are zero-filled
/// and listed there too.
DemandSeries aggregate_demand(std::span<const TripRecord> trips, const ZoneMap& zones,
                              DemandUnit unit = DemandUnit::Trips, IngestReport* report = nullptr);

/// train = days <= train_end, test = days in (train_end, test_end].
std::pair<DemandSeries, DemandSeries> chronological_split(const DemandSeries& series, Day train_end,
                                                          Day test_end);

struct Window {
    std::size_t first_day = 0;                // index of the first input day
    std::vector<std::vector<double>> inputs;  // ws x zones
    std::vector<double> target;               // zones
    std::size_t target_day() const { return first_day + inputs.size(); }
};

struct WindowSet {
    std::size_t window = 0;
    std::vector<Window> pairs;
    std::size_t size() const { return pairs.size(); }
};

WindowSet make_windows(const DemandSeries& series, std::size_t ws);

/// Per-zone affine standardization fitted on a training partition.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const DemandSeries& train);
    static Standardizer identity(std::size_t zones);

    double forward(std::size_t zone, double v) const { return (v - mean[zone]) / scale[zone]; }
    double inverse(std::size_t zone, double v) const { return v * scale[zone] + mean[zone]; }
    std::vector<double> forward(std::span<const double> v) const;
    WindowSet forward(const WindowSet& w) const;
};

void to_json(nlohmann::json& j, const Standardizer& s);
void from_json(const nlohmann::json& j, Standardizer& s);

/// CSV: header "date,<zone ids...>", then one ISO date per row.
void write_series_csv(const DemandSeries& series, std::ostream& out);
void write_series_csv(const DemandSeries& series, const std::filesystem::path& path);
DemandSeries read_series_csv(std::istream& in);
DemandSeries read_series_csv(const std::filesystem::path& path);

}  // namespace ddsp

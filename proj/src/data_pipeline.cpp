#include "ddsp/data_pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ddsp {

namespace {

using namespace std::chrono;

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string out(s.substr(b, e - b));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            out.push_back(trim(field));
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    out.push_back(trim(field));
    return out;
}

template <typename T>
std::optional<T> parse_number(const std::string& s) {
    T v{};
    const char* b = s.data();
    const char* e = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || ptr != e || s.empty()) return std::nullopt;
    return v;
}

std::optional<int> digits(std::string_view s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) return std::nullopt;
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

std::optional<Day> try_parse_date(std::string_view s) {
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    const auto y = digits(s, 0, 4);
    const auto m = digits(s, 5, 2);
    const auto d = digits(s, 8, 2);
    if (!y || !m || !d) return std::nullopt;
    const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*m)}, day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd};
}

}  // namespace

Day parse_date(const std::string& text) {
    const std::string t = trim(text);
    auto d = try_parse_date(t);
    if (!d || t.size() != 10) throw std::invalid_argument("invalid date '" + text + "' (expected YYYY-MM-DD)");
    return *d;
}

std::string format_date(Day d) {
    const year_month_day ymd{d};
    std::ostringstream os;
    os << std::setfill('0') << std::setw(4) << static_cast<int>(ymd.year()) << '-' << std::setw(2)
       << static_cast<unsigned>(ymd.month()) << '-' << std::setw(2) << static_cast<unsigned>(ymd.day());
    return os.str();
}

std::optional<std::int64_t> parse_timestamp(const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) return std::nullopt;
    if (auto v = parse_number<std::int64_t>(t)) return v;

    const auto day = try_parse_date(t);
    if (!day) return std::nullopt;
    std::int64_t secs = duration_cast<seconds>(day->time_since_epoch()).count();
    std::string_view rest = std::string_view(t).substr(10);
    if (rest.empty()) return secs;
    if (rest[0] != 'T' && rest[0] != ' ') return std::nullopt;
    rest.remove_prefix(1);
    const auto hh = digits(rest, 0, 2);
    if (!hh || rest.size() < 5 || rest[2] != ':') return std::nullopt;
    const auto mm = digits(rest, 3, 2);
    if (!mm) return std::nullopt;
    int ss = 0;
    rest.remove_prefix(5);
    if (!rest.empty() && rest[0] == ':') {
        const auto s = digits(rest, 1, 2);
        if (!s) return std::nullopt;
        ss = *s;
        rest.remove_prefix(3);
        // fractional seconds are truncated
        if (!rest.empty() && rest[0] == '.') {
            rest.remove_prefix(1);
            while (!rest.empty() && std::isdigit(static_cast<unsigned char>(rest[0]))) rest.remove_prefix(1);
        }
    }
    if (rest == "Z" || rest == "+00:00") rest = {};
    if (!rest.empty() || *hh > 23 || *mm > 59 || ss > 60) return std::nullopt;
    return secs + *hh * 3600 + *mm * 60 + ss;
}

Day utc_day(std::int64_t epoch_seconds) {
    return floor<days>(sys_seconds{seconds{epoch_seconds}});
}

void from_json(const nlohmann::json& j, TripSchema& s) {
    auto get = [&](const char* key, std::string& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    get("pickup_time", s.pickup_time);
    get("pickup_lat", s.pickup_lat);
    get("pickup_lon", s.pickup_lon);
    get("dropoff_lat", s.dropoff_lat);
    get("dropoff_lon", s.dropoff_lon);
    get("passengers", s.passengers);
}

nlohmann::json IngestReport::to_json() const {
    return nlohmann::json{{"total_rows", total_rows},
                          {"accepted", accepted},
                          {"rejected", rejected},
                          {"reasons", reasons},
                          {"zone_matched", zone_matched},
                          {"zone_unmatched", zone_unmatched},
                          {"filled_days", filled_days}};
}

IngestResult ingest_trips(const std::filesystem::path& path, const TripSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read trip file '" + path.string() + "'");
    return ingest_trips(in, schema);
}

IngestResult ingest_trips(std::istream& in, const TripSchema& schema) {
    IngestResult result;
    std::string line;
    if (!std::getline(in, line)) return result;  // empty file

    const auto header = split_csv(line);
    auto column = [&](const std::string& name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw std::runtime_error("trip file header lacks column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_time = column(schema.pickup_time);
    const std::size_t c_plat = column(schema.pickup_lat);
    const std::size_t c_plon = column(schema.pickup_lon);
    const std::size_t c_dlat = column(schema.dropoff_lat);
    const std::size_t c_dlon = column(schema.dropoff_lon);
    const std::size_t c_pass = column(schema.passengers);

    auto reject = [&](const char* reason) {
        ++result.report.rejected;
        ++result.report.reasons[reason];
    };

    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++result.report.total_rows;
        const auto f = split_csv(line);
        if (f.size() != header.size()) {
            reject("field_count");
            continue;
        }
        const auto t = parse_timestamp(f[c_time]);
        if (!t) {
            reject("bad_timestamp");
            continue;
        }
        const auto plat = parse_number<double>(f[c_plat]);
        const auto plon = parse_number<double>(f[c_plon]);
        const auto dlat = parse_number<double>(f[c_dlat]);
        const auto dlon = parse_number<double>(f[c_dlon]);
        const auto pass = parse_number<int>(f[c_pass]);
        if (!plat || !plon || !dlat || !dlon || !pass) {
            reject("bad_number");
            continue;
        }
        if (std::abs(*plat) > 90.0 || std::abs(*dlat) > 90.0 || !std::isfinite(*plat) || !std::isfinite(*dlat)) {
            reject("latitude_out_of_range");
            continue;
        }
        if (std::abs(*plon) > 180.0 || std::abs(*dlon) > 180.0 || !std::isfinite(*plon) || !std::isfinite(*dlon)) {
            reject("longitude_out_of_range");
            continue;
        }
        if (*pass < 0) {
            reject("negative_passengers");
            continue;
        }
        result.trips.push_back(TripRecord{*t, *plat, *plon, *dlat, *dlon, *pass});
        ++result.report.accepted;
    }
    std::stable_sort(result.trips.begin(), result.trips.end(),
                     [](const TripRecord& a, const TripRecord& b) { return a.pickup_time < b.pickup_time; });
    return result;
}

std::optional<std::size_t> ZoneMap::locate(double lat, double lon) const {
    for (std::size_t z = 0; z < zones.size(); ++z) {
        if (zones[z].contains(lat, lon)) return z;
    }
    return std::nullopt;
}

void ZoneMap::validate() const {
    if (zones.empty()) throw std::invalid_argument("zone map is empty");
    for (std::size_t a = 0; a < zones.size(); ++a) {
        const Zone& z = zones[a];
        if (z.id.empty()) throw std::invalid_argument("zone " + std::to_string(a) + " has an empty id");
        if (!(z.min_lat <= z.max_lat) || !(z.min_lon <= z.max_lon)) {
            throw std::invalid_argument("zone '" + z.id + "' has an inverted bounding box");
        }
        for (std::size_t b = 0; b < a; ++b) {
            if (zones[b].id == z.id) throw std::invalid_argument("duplicate zone id '" + z.id + "'");
        }
    }
}

std::vector<std::string> ZoneMap::ids() const {
    std::vector<std::string> out;
    for (const auto& z : zones) out.push_back(z.id);
    return out;
}

void from_json(const nlohmann::json& j, ZoneMap& m) {
    m.zones.clear();
    for (const auto& z : j.at("zones")) {
        m.zones.push_back(Zone{z.at("id").get<std::string>(), z.at("min_lat").get<double>(),
                               z.at("max_lat").get<double>(), z.at("min_lon").get<double>(),
                               z.at("max_lon").get<double>()});
    }
    m.validate();
}

void to_json(nlohmann::json& j, const ZoneMap& m) {
    j = nlohmann::json{{"zones", nlohmann::json::array()}};
    for (const auto& z : m.zones) {
        j["zones"].push_back({{"id", z.id},
                              {"min_lat", z.min_lat},
                              {"max_lat", z.max_lat},
                              {"min_lon", z.min_lon},
                              {"max_lon", z.max_lon}});
    }
}

std::vector<double> DemandSeries::day_vector(std::size_t d) const {
    std::vector<double> v(zones());
    for (std::size_t z = 0; z < zones(); ++z) v[z] = values[z][d];
    return v;
}

std::optional<std::size_t> DemandSeries::index_of(Day d) const {
    if (days.empty() || d < days.front() || d > days.back()) return std::nullopt;
    return static_cast<std::size_t>((d - days.front()).count());
}

DemandSeries DemandSeries::slice(std::size_t begin, std::size_t end) const {
    DemandSeries out;
    out.zone_ids = zone_ids;
    end = std::min(end, length());
    begin = std::min(begin, end);
    const auto b = static_cast<std::ptrdiff_t>(begin);
    const auto e = static_cast<std::ptrdiff_t>(end);
    out.days.assign(days.begin() + b, days.begin() + e);
    out.filled.assign(filled.begin() + b, filled.begin() + e);
    out.values.resize(zones());
    for (std::size_t z = 0; z < zones(); ++z) out.values[z].assign(values[z].begin() + b, values[z].begin() + e);
    return out;
}

double DemandSeries::total() const {
    double s = 0.0;
    for (const auto& row : values) {
        for (double v : row) s += v;
    }
    return s;
}

void DemandSeries::validate() const {
    if (values.size() != zones()) throw std::invalid_argument("demand series: row count != zone count");
    if (filled.size() != length()) throw std::invalid_argument("demand series: filled flags misaligned");
    for (std::size_t d = 1; d < length(); ++d) {
        if (days[d] != days[d - 1] + std::chrono::days{1}) {
            throw std::invalid_argument("demand series: index not contiguous at " + format_date(days[d]));
        }
    }
    for (std::size_t z = 0; z < zones(); ++z) {
        if (values[z].size() != length()) throw std::invalid_argument("demand series: ragged rows");
        for (double v : values[z]) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw std::invalid_argument("demand series: negative or non-finite value in zone " + zone_ids[z]);
            }
        }
    }
}

DemandUnit parse_demand_unit(const std::string& s) {
    if (s == "trips") return DemandUnit::Trips;
    if (s == "passengers") return DemandUnit::Passengers;
    throw std::invalid_argument("unknown demand unit '" + s + "' (expected trips|passengers)");
}

DemandSeries aggregate_demand(std::span<const TripRecord> trips, const ZoneMap& zones, DemandUnit unit,
                              IngestReport* report) {
    zones.validate();
    DemandSeries series;
    series.zone_ids = zones.ids();
    series.values.resize(zones.size());

    std::vector<std::pair<std::size_t, const TripRecord*>> matched;
    std::size_t unmatched = 0;
    for (const auto& t : trips) {
        if (auto z = zones.locate(t.pickup_lat, t.pickup_lon)) {
            matched.emplace_back(*z, &t);
        } else {
            ++unmatched;
        }
    }
    if (report) {
        report->zone_matched = matched.size();
        report->zone_unmatched = unmatched;
        report->filled_days.clear();
    }
    if (matched.empty()) return series;

    Day first = utc_day(matched.front().second->pickup_time);
    Day last = first;
    for (const auto& [z, t] : matched) {
        const Day d = utc_day(t->pickup_time);
        first = std::min(first, d);
        last = std::max(last, d);
    }
    const auto n_days = static_cast<std::size_t>((last - first).count()) + 1;
    for (std::size_t d = 0; d < n_days; ++d) series.days.push_back(first + std::chrono::days{static_cast<long>(d)});
    for (auto& row : series.values) row.assign(n_days, 0.0);
    std::vector<bool> seen(n_days, false);
    for (const auto& [z, t] : matched) {
        const auto d = static_cast<std::size_t>((utc_day(t->pickup_time) - first).count());
        series.values[z][d] += unit == DemandUnit::Trips ? 1.0 : static_cast<double>(t->passengers);
        seen[d] = true;
    }
    series.filled.resize(n_days);
    for (std::size_t d = 0; d < n_days; ++d) {
        series.filled[d] = !seen[d];
        if (!seen[d] && report) report->filled_days.push_back(format_date(series.days[d]));
    }
    return series;
}

std::pair<DemandSeries, DemandSeries> chronological_split(const DemandSeries& series, Day train_end,
                                                          Day test_end) {
    if (!(train_end < test_end)) {
        throw std::invalid_argument("split: train_end " + format_date(train_end) + " must precede test_end " +
                                    format_date(test_end));
    }
    if (series.length() == 0 || train_end < series.days.front()) {
        throw std::invalid_argument("empty train partition: train_end " + format_date(train_end) +
                                    " precedes the first day of the series");
    }
    if (train_end >= series.days.back()) {
        throw std::invalid_argument("empty test partition: train_end " + format_date(train_end) +
                                    " is at or after the last day of the series");
    }
    if (test_end > series.days.back()) {
        throw std::invalid_argument("split: test_end " + format_date(test_end) + " lies beyond the series end " +
                                    format_date(series.days.back()));
    }
    const std::size_t cut = *series.index_of(train_end) + 1;
    const std::size_t end = *series.index_of(test_end) + 1;
    return {series.slice(0, cut), series.slice(cut, end)};
}

WindowSet make_windows(const DemandSeries& series, std::size_t ws) {
    if (ws == 0) throw std::invalid_argument("make_windows: window size must be >= 1");
    WindowSet out;
    out.window = ws;
    const std::size_t d = series.length();
    if (d <= ws) return out;
    out.pairs.reserve(d - ws);
    for (std::size_t i = 0; i + ws < d; ++i) {
        Window w;
        w.first_day = i;
        for (std::size_t t = i; t < i + ws; ++t) w.inputs.push_back(series.day_vector(t));
        w.target = series.day_vector(i + ws);
        out.pairs.push_back(std::move(w));
    }
    return out;
}

Standardizer Standardizer::fit(const DemandSeries& train) {
    if (train.length() == 0) throw std::invalid_argument("standardizer: empty training partition");
    Standardizer s;
    for (std::size_t z = 0; z < train.zones(); ++z) {
        const auto& row = train.values[z];
        double mean = 0.0;
        for (double v : row) mean += v;
        mean /= static_cast<double>(row.size());
        double var = 0.0;
        for (double v : row) var += (v - mean) * (v - mean);
        var /= static_cast<double>(row.size());
        s.mean.push_back(mean);
        s.scale.push_back(var > 1e-12 ? std::sqrt(var) : 1.0);
    }
    return s;
}

Standardizer Standardizer::identity(std::size_t zones) {
    return Standardizer{std::vector<double>(zones, 0.0), std::vector<double>(zones, 1.0)};
}

std::vector<double> Standardizer::forward(std::span<const double> v) const {
    std::vector<double> out(v.size());
    for (std::size_t z = 0; z < v.size(); ++z) out[z] = forward(z, v[z]);
    return out;
}

WindowSet Standardizer::forward(const WindowSet& w) const {
    WindowSet out = w;
    for (auto& pair : out.pairs) {
        for (auto& step : pair.inputs) step = forward(step);
        pair.target = forward(pair.target);
    }
    return out;
}

void to_json(nlohmann::json& j, const Standardizer& s) {
    j = nlohmann::json{{"mean", s.mean}, {"scale", s.scale}};
}

void from_json(const nlohmann::json& j, Standardizer& s) {
    j.at("mean").get_to(s.mean);
    j.at("scale").get_to(s.scale);
    if (s.mean.size() != s.scale.size()) throw std::invalid_argument("standardizer: mean/scale size mismatch");
}

void write_series_csv(const DemandSeries& series, std::ostream& out) {
    out << "date";
    for (const auto& id : series.zone_ids) out << ',' << id;
    out << '\n';
    out << std::setprecision(17);
    for (std::size_t d = 0; d < series.length(); ++d) {
        out << format_date(series.days[d]);
        for (std::size_t z = 0; z < series.zones(); ++z) out << ',' << series.values[z][d];
        out << '\n';
    }
}

void write_series_csv(const DemandSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write series file '" + path.string() + "'");
    write_series_csv(series, out);
}

DemandSeries read_series_csv(std::istream& in) {
    DemandSeries s;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("series file is empty");
    auto header = split_csv(line);
    if (header.size() < 2 || header[0] != "date") throw std::runtime_error("series header must be 'date,<zones...>'");
    s.zone_ids.assign(header.begin() + 1, header.end());
    s.values.resize(s.zones());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != header.size()) {
            throw std::runtime_error("series line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(header.size()) + " fields");
        }
        const Day day = parse_date(f[0]);
        if (!s.days.empty()) {
            if (day <= s.days.back()) {
                throw std::runtime_error("series line " + std::to_string(line_no) + ": dates must increase");
            }
            // zero-fill gaps
            for (Day g = s.days.back() + std::chrono::days{1}; g < day; g += std::chrono::days{1}) {
                s.days.push_back(g);
                s.filled.push_back(true);
                for (auto& row : s.values) row.push_back(0.0);
            }
        }
        s.days.push_back(day);
        s.filled.push_back(false);
        for (std::size_t z = 0; z < s.zones(); ++z) {
            const auto v = parse_number<double>(f[z + 1]);
            if (!v || *v < 0.0) {
                throw std::runtime_error("series line " + std::to_string(line_no) + ": invalid demand '" + f[z + 1] + "'");
            }
            s.values[z].push_back(*v);
        }
    }
    s.validate();
    return s;
}

DemandSeries read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read series file '" + path.string() + "'");
    return read_series_csv(in);
}

}  // namespace ddsp

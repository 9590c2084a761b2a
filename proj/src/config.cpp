#include "ddsp/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ddsp {

namespace {

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

using Validator = void (*)(const std::string& key, const std::string& value);

void any_string(const std::string&, const std::string&) {}

void non_negative_int(const std::string& key, const std::string& v) {
    long x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size() || x < 0) throw ConfigError(key, "expected an integer >= 0, got '" + v + "'");
}

void positive_int(const std::string& key, const std::string& v) {
    non_negative_int(key, v);
    if (std::stol(v) < 1) throw ConfigError(key, "expected an integer >= 1, got '" + v + "'");
}

void seed_value(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(key, "expected an unsigned seed, got '" + v + "'");
}

double as_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(x)) {
        throw ConfigError(key, "expected a finite number, got '" + v + "'");
    }
    return x;
}

void non_negative_double(const std::string& key, const std::string& v) {
    if (as_double(key, v) < 0.0) throw ConfigError(key, "expected a number >= 0, got '" + v + "'");
}

void positive_double(const std::string& key, const std::string& v) {
    if (!(as_double(key, v) > 0.0)) throw ConfigError(key, "expected a number > 0, got '" + v + "'");
}

void probability(const std::string& key, const std::string& v) {
    const double x = as_double(key, v);
    if (x < 0.0 || x > 1.0) throw ConfigError(key, "expected a probability in [0, 1], got '" + v + "'");
}

void boolean(const std::string& key, const std::string& v) {
    if (v != "true" && v != "false") throw ConfigError(key, "expected true|false, got '" + v + "'");
}

void date_or_empty(const std::string& key, const std::string& v) {
    if (v.empty()) return;
    try {
        parse_date(v);
    } catch (const std::exception& e) {
        throw ConfigError(key, e.what());
    }
}

void size_list(const std::string& key, const std::string& v) {
    if (v.empty()) return;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) positive_int(key, strip(item));
}

template <const char* const* Options, std::size_t N>
void one_of(const std::string& key, const std::string& v) {
    std::string all;
    for (std::size_t i = 0; i < N; ++i) {
        if (v == Options[i]) return;
        all += (i ? "|" : "") + std::string(Options[i]);
    }
    throw ConfigError(key, "expected " + all + ", got '" + v + "'");
}

constexpr const char* kUnits[] = {"trips", "passengers"};
constexpr const char* kCells[] = {"gru", "lstm"};
constexpr const char* kHeads[] = {"mixture", "point"};
constexpr const char* kOptimizers[] = {"momentum", "adam"};
constexpr const char* kModes[] = {"stochastic", "deterministic"};
constexpr const char* kForecast[] = {"end-to-end", "post-hoc"};

struct FieldSpec {
    PipelineConfig::Field field;
    Validator validate;
    bool input_path;
};

const std::vector<FieldSpec>& field_specs() {
    static const std::vector<FieldSpec> specs = {
        {{"data.trips", "", "raw trip CSV"}, any_string, true},
        {{"data.schema", "", "JSON column-name mapping for the trip CSV"}, any_string, true},
        {{"data.zones", "", "JSON zone map"}, any_string, true},
        {{"data.unit", "trips", "count trips or passengers"}, one_of<kUnits, 2>, false},
        {{"split.train_end", "", "last training day (YYYY-MM-DD)"}, date_or_empty, false},
        {{"split.test_end", "", "last test day (YYYY-MM-DD)"}, date_or_empty, false},
        {{"split.validation_days", "0", "trailing training days held out from fitting"}, non_negative_int, false},
        {{"model.cell", "gru", "recurrent cell"}, one_of<kCells, 2>, false},
        {{"model.head", "mixture", "output head"}, one_of<kHeads, 2>, false},
        {{"model.window", "10", "input window in days"}, positive_int, false},
        {{"model.components", "3", "mixture components K"}, positive_int, false},
        {{"model.hidden", "32", "recurrent hidden size"}, positive_int, false},
        {{"model.dense", "256,128", "rectifier layer widths"}, size_list, false},
        {{"model.aux_point", "false", "extra point output per zone on the mixture head"}, boolean, false},
        {{"model.standardize", "true", "standardize demand with training-partition moments"}, boolean, false},
        {{"model.sigma_floor", "0.001", "lower bound on component std (standardized units)"}, positive_double, false},
        {{"model.init_seed", "7", "parameter initialization seed"}, seed_value, false},
        {{"train.learning_rate", "0.001", "step size"}, non_negative_double, false},
        {{"train.batch_size", "32", "windows per update"}, positive_int, false},
        {{"train.epochs", "100", "passes over the training windows"}, non_negative_int, false},
        {{"train.clip_norm", "5", "global gradient-norm clip (0 disables)"}, non_negative_double, false},
        {{"train.optimizer", "momentum", "update rule"}, one_of<kOptimizers, 2>, false},
        {{"train.momentum", "0.9", "momentum coefficient"}, probability, false},
        {{"train.seed", "7", "shuffle seed"}, seed_value, false},
        {{"em.components", "3", "residual mixture components"}, positive_int, false},
        {{"em.restarts", "5", "EM restarts (best likelihood kept)"}, positive_int, false},
        {{"em.tol", "1e-06", "absolute log-likelihood change for convergence"}, positive_double, false},
        {{"em.max_iter", "500", "EM iteration cap"}, non_negative_int, false},
        {{"em.seed", "7", "EM initialization seed"}, seed_value, false},
        {{"scenario.count", "200", "Monte Carlo scenarios per plan"}, positive_int, false},
        {{"scenario.seed", "7", "scenario sampling seed"}, seed_value, false},
        {{"eval.mode", "stochastic", "planning model"}, one_of<kModes, 2>, false},
        {{"eval.forecast", "end-to-end", "mixture head, or point head plus residual EM"}, one_of<kForecast, 2>, false},
        {{"eval.replan", "true", "re-plan every test day (false keeps the first plan)"}, boolean, false},
        {{"eval.threads", "1", "worker threads for day-level planning"}, positive_int, false},
        {{"synth.zones", "2", "synthetic zones"}, positive_int, false},
        {{"synth.days", "691", "synthetic series length"}, positive_int, false},
        {{"synth.start", "2017-01-01", "first synthetic day"}, date_or_empty, false},
        {{"synth.seed", "7", "synthetic data seed"}, seed_value, false},
        {{"synth.stay_probability", "0.7", "regime persistence"}, probability, false},
    };
    return specs;
}

const FieldSpec* find_spec(const std::string& key) {
    for (const auto& s : field_specs()) {
        if (s.field.key == key) return &s;
    }
    return nullptr;
}

}  // namespace

ConfigError::ConfigError(const std::string& f, const std::string& what)
    : std::runtime_error("config field '" + f + "': " + what), field(f) {}

PipelineConfig::PipelineConfig() {
    for (const auto& s : field_specs()) values_[s.field.key] = s.field.default_value;
}

const std::vector<PipelineConfig::Field>& PipelineConfig::fields() {
    static const std::vector<Field> out = [] {
        std::vector<Field> f;
        for (const auto& s : field_specs()) f.push_back(s.field);
        return f;
    }();
    return out;
}

PipelineConfig PipelineConfig::parse(std::istream& in, const std::string& origin) {
    PipelineConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = strip(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no), "expected 'key = value'");
        }
        cfg.set(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
    }
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot read config '" + path.string() + "'");
    return parse(in, path.string());
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
    const FieldSpec* spec = find_spec(key);
    if (!spec) throw ConfigError(key, "unknown key");
    spec->validate(key, value);
    values_[key] = value;
}

const std::string& PipelineConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(key, "unknown key");
    return it->second;
}

bool PipelineConfig::has(const std::string& key) const { return !get(key).empty(); }

double PipelineConfig::get_double(const std::string& key) const { return as_double(key, get(key)); }
long PipelineConfig::get_int(const std::string& key) const { return std::stol(get(key)); }
std::size_t PipelineConfig::get_size(const std::string& key) const { return static_cast<std::size_t>(get_int(key)); }
std::uint64_t PipelineConfig::get_seed(const std::string& key) const { return std::stoull(get(key)); }
bool PipelineConfig::get_bool(const std::string& key) const { return get(key) == "true"; }

Day PipelineConfig::get_date(const std::string& key) const {
    if (get(key).empty()) throw ConfigError(key, "required date is not set");
    return parse_date(get(key));
}

std::string PipelineConfig::canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string PipelineConfig::hash() const { return fnv1a_hex(canonical()); }

void PipelineConfig::check_input_paths() const {
    for (const auto& s : field_specs()) {
        if (!s.input_path) continue;
        const std::string& v = get(s.field.key);
        if (!v.empty() && !std::filesystem::exists(v)) throw ConfigError(s.field.key, "file '" + v + "' does not exist");
    }
}

ModelSpec PipelineConfig::model_spec(std::size_t zones) const {
    ModelSpec s;
    s.cell = parse_cell_type(get("model.cell"));
    s.input_size = zones;
    s.hidden = get_size("model.hidden");
    s.dense.clear();
    std::stringstream ss(get("model.dense"));
    std::string item;
    while (std::getline(ss, item, ',')) s.dense.push_back(std::stoul(strip(item)));
    s.window = get_size("model.window");
    s.head.kind = parse_head_kind(get("model.head"));
    s.head.zones = zones;
    s.head.components = get_size("model.components");
    s.head.aux_point = get_bool("model.aux_point");
    s.sigma_floor = get_double("model.sigma_floor");
    return s;
}

TrainConfig PipelineConfig::train_config() const {
    TrainConfig t;
    t.learning_rate = get_double("train.learning_rate");
    t.batch_size = get_size("train.batch_size");
    t.epochs = static_cast<int>(get_int("train.epochs"));
    t.clip_norm = get_double("train.clip_norm");
    t.optimizer = parse_optimizer(get("train.optimizer"));
    t.momentum = get_double("train.momentum");
    t.seed = get_seed("train.seed");
    return t;
}

EmOptions PipelineConfig::em_options() const {
    EmOptions o;
    o.components = get_size("em.components");
    o.restarts = static_cast<int>(get_int("em.restarts"));
    o.tol = get_double("em.tol");
    o.max_iter = static_cast<int>(get_int("em.max_iter"));
    o.seed = get_seed("em.seed");
    return o;
}

EvaluationConfig PipelineConfig::evaluation_config() const {
    EvaluationConfig e;
    e.scenarios = get_size("scenario.count");
    e.seed = get_seed("scenario.seed");
    e.replan = get_bool("eval.replan");
    e.threads = get_size("eval.threads");
    return e;
}

SynthConfig PipelineConfig::synth_config() const {
    SynthConfig s;
    s.zones = get_size("synth.zones");
    s.days = get_size("synth.days");
    s.start = get_date("synth.start");
    s.seed = get_seed("synth.seed");
    s.stay_probability = get_double("synth.stay_probability");
    return s;
}

}  // namespace ddsp

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "ddsp/artifacts.hpp"
#include "ddsp/checkpoint.hpp"
#include "ddsp/config.hpp"
#include "ddsp/evaluation.hpp"
#include "ddsp/forecaster.hpp"
#include "ddsp/gmm_em.hpp"
#include "ddsp/pipeline.hpp"
#include "ddsp/relocation.hpp"
#include "ddsp/rng.hpp"
#include "ddsp/synth.hpp"

namespace fs = std::filesystem;
using namespace ddsp;

namespace {

// Config keys exposed as --<key> flags on a subcommand.
struct KeyFlags {
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
};

void add_key_flags(CLI::App* cmd, KeyFlags& flags, std::initializer_list<const char*> prefixes) {
    for (const auto& f : PipelineConfig::fields()) {
        bool wanted = false;
        for (const char* p : prefixes) wanted = wanted || f.key.rfind(p, 0) == 0;
        if (!wanted) continue;
        flags.values[f.key] = f.default_value;
        flags.options[f.key] =
            cmd->add_option("--" + f.key, flags.values[f.key], f.help)->capture_default_str()->group("Config keys");
    }
}

struct Common {
    std::string config_path;
};

PipelineConfig resolve_config(const Common& common, const KeyFlags& flags) {
    PipelineConfig cfg = common.config_path.empty() ? PipelineConfig{} : PipelineConfig::load(common.config_path);
    for (const auto& [key, opt] : flags.options) {
        if (opt->count() > 0) cfg.set(key, flags.values.at(key));
    }
    return cfg;
}

DemandSeries load_series(const fs::path& p) {
    require_artifact(p, "ingest");
    return read_series_csv(p);
}

RelocationInstance load_instance(const fs::path& p) {
    return read_json(p, "synth").get<RelocationInstance>();
}

std::unique_ptr<NetworkForecaster> load_forecaster(const fs::path& ckpt_path, const std::string& residuals_path) {
    require_artifact(ckpt_path, "train");
    auto f = std::make_unique<NetworkForecaster>(load_checkpoint(ckpt_path));
    if (!residuals_path.empty()) {
        const nlohmann::json r = read_json(residuals_path, "fit-gmm");
        f->set_residual_mixtures(r.at("mixtures").get<std::vector<GmmParams>>());
    }
    return f;
}

std::string model_name(const ModelSpec& spec) {
    std::string n = spec.cell == CellType::Gru ? "GRU" : "LSTM";
    return spec.head.kind == HeadKind::Mixture ? n + "-MDN" : n;
}

Day test_end_of(const PipelineConfig& cfg, const DemandSeries& series) {
    return cfg.has("split.test_end") ? cfg.get_date("split.test_end") : series.days.back();
}

DayForecast forecast_from_json(const nlohmann::json& j) {
    DayForecast f;
    for (const auto& r : j.at("records")) {
        f.point.push_back(r.at("point").get<double>());
        if (r.contains("weights")) {
            f.distribution.push_back(GmmParams{r.at("weights").get<std::vector<double>>(),
                                               r.at("means").get<std::vector<double>>(),
                                               r.at("stds").get<std::vector<double>>()});
        }
    }
    if (!f.distribution.empty() && f.distribution.size() != f.point.size()) {
        throw std::runtime_error("forecast file mixes zones with and without distributions");
    }
    return f;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Demand forecasting and vehicle relocation pipeline"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--config", common.config_path, "key = value config file")
        ->envname("DDSP_CONFIG")
        ->check(CLI::ExistingFile);

    // synth
    auto* synth = app.add_subcommand("synth", "Write a synthetic trip file, zone map, schema and fleet instance");
    KeyFlags synth_keys;
    add_key_flags(synth, synth_keys, {"synth."});
    std::string synth_dir = "data";
    synth->add_option("--out-dir", synth_dir, "output directory")->capture_default_str();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Clean trip records and aggregate daily demand per zone");
    KeyFlags ingest_keys;
    add_key_flags(ingest, ingest_keys, {"data."});
    std::string ingest_out = "demand.csv", ingest_report = "ingest_report.json";
    ingest->add_option("--out", ingest_out, "demand CSV")->capture_default_str();
    ingest->add_option("--report", ingest_report, "ingestion report JSON")->capture_default_str();

    // train
    auto* trainc = app.add_subcommand("train", "Train a recurrent forecaster on the training partition");
    KeyFlags train_keys;
    add_key_flags(trainc, train_keys, {"split.", "model.", "train."});
    std::string train_demand = "demand.csv", train_out = "model.json";
    trainc->add_option("--demand", train_demand, "demand CSV")->capture_default_str();
    trainc->add_option("--out", train_out, "checkpoint manifest")->capture_default_str();

    // fit-gmm
    auto* fitgmm = app.add_subcommand("fit-gmm", "Fit residual mixtures to a point checkpoint by EM");
    KeyFlags fit_keys;
    add_key_flags(fitgmm, fit_keys, {"split.", "em."});
    std::string fit_demand = "demand.csv", fit_ckpt = "model.json", fit_out = "residuals.json";
    fitgmm->add_option("--demand", fit_demand, "demand CSV")->capture_default_str();
    fitgmm->add_option("--checkpoint", fit_ckpt, "point-head checkpoint")->capture_default_str();
    fitgmm->add_option("--out", fit_out, "residual mixtures JSON")->capture_default_str();

    // forecast
    auto* forecastc = app.add_subcommand("forecast", "Forecast one day from the preceding window");
    std::string fc_demand = "demand.csv", fc_ckpt = "model.json", fc_residuals, fc_out = "forecast.json", fc_date;
    forecastc->add_option("--demand", fc_demand, "demand CSV")->capture_default_str();
    forecastc->add_option("--checkpoint", fc_ckpt, "checkpoint manifest")->capture_default_str();
    forecastc->add_option("--residuals", fc_residuals, "residual mixtures from fit-gmm");
    forecastc->add_option("--date", fc_date, "target day (YYYY-MM-DD); default: day after the series")
        ->capture_default_str();
    forecastc->add_option("--out", fc_out, "forecast JSON")->capture_default_str();

    // optimize
    auto* optimize = app.add_subcommand("optimize", "Solve the relocation program for one forecast");
    KeyFlags opt_keys;
    add_key_flags(optimize, opt_keys, {"scenario.", "eval.mode"});
    std::string opt_forecast = "forecast.json", opt_instance = "data/instance.json", opt_out = "plan.json", opt_lp;
    bool opt_round = false;
    optimize->add_option("--forecast", opt_forecast, "forecast JSON")->capture_default_str();
    optimize->add_option("--instance", opt_instance, "fleet instance JSON")->capture_default_str();
    optimize->add_option("--out", opt_out, "plan JSON")->capture_default_str();
    optimize->add_option("--lp-out", opt_lp, "also write the LP in CPLEX LP format");
    optimize->add_flag("--round", opt_round, "add an integer plan and its rounding gap");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Rolling out-of-sample evaluation over the test days");
    KeyFlags eval_keys;
    add_key_flags(evaluate, eval_keys, {"split.", "scenario.", "eval."});
    std::string ev_demand = "demand.csv", ev_ckpt = "model.json", ev_residuals, ev_instance = "data/instance.json",
                ev_out = "report.json", ev_csv;
    std::size_t ev_threads = 0;
    evaluate->add_option("--demand", ev_demand, "demand CSV")->capture_default_str();
    evaluate->add_option("--checkpoint", ev_ckpt, "checkpoint manifest")->capture_default_str();
    evaluate->add_option("--residuals", ev_residuals, "residual mixtures (post-hoc forecasting)");
    evaluate->add_option("--instance", ev_instance, "fleet instance JSON")->capture_default_str();
    evaluate->add_option("--out", ev_out, "report JSON")->capture_default_str();
    evaluate->add_option("--days-csv", ev_csv, "per-day rows as CSV");
    evaluate->add_option("--threads", ev_threads, "worker threads (overrides eval.threads)");

    // compare
    auto* comparec = app.add_subcommand("compare", "Tabulate two evaluation reports");
    std::string cmp_a, cmp_b, cmp_out;
    comparec->add_option("report_a", cmp_a, "first report")->required();
    comparec->add_option("report_b", cmp_b, "second report")->required();
    comparec->add_option("--out", cmp_out, "comparison JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            const PipelineConfig cfg = resolve_config(common, synth_keys);
            const SynthConfig sc = cfg.synth_config();
            const fs::path dir = synth_dir;
            const DemandSeries series = synth_demand(sc);
            const ZoneMap zones = synth_zone_map(sc.zones);
            std::ostringstream trips;
            write_trips_csv(synth_trips(series, zones, derive_seed(sc.seed, 1)), trips);
            write_text(trips.str(), dir / "trips.csv");
            write_json(zones, dir / "zones.json");
            write_json({{"pickup_time", "pickup_time"},
                        {"pickup_lat", "pickup_lat"},
                        {"pickup_lon", "pickup_lon"},
                        {"dropoff_lat", "dropoff_lat"},
                        {"dropoff_lon", "dropoff_lon"},
                        {"passengers", "passengers"}},
                       dir / "schema.json");
            nlohmann::json inst = synth_instance(sc);
            inst["manifest"] = make_manifest("synth", cfg.hash(), sc.seed, {});
            write_json(inst, dir / "instance.json");
            std::cout << "wrote " << series.length() << " days x " << series.zones() << " zones to " << dir.string()
                      << "\n";
        } else if (ingest->parsed()) {
            const PipelineConfig cfg = resolve_config(common, ingest_keys);
            for (const char* key : {"data.trips", "data.zones"}) {
                if (!cfg.has(key)) throw ConfigError(key, "required by ingest");
            }
            require_artifact(cfg.get("data.trips"), "synth");
            require_artifact(cfg.get("data.zones"), "synth");
            cfg.check_input_paths();
            TripSchema schema;
            if (cfg.has("data.schema")) schema = read_json(cfg.get("data.schema"), "synth").get<TripSchema>();
            const ZoneMap zones = read_json(cfg.get("data.zones"), "synth").get<ZoneMap>();
            IngestResult res = ingest_trips(fs::path(cfg.get("data.trips")), schema);
            const DemandSeries series =
                aggregate_demand(res.trips, zones, parse_demand_unit(cfg.get("data.unit")), &res.report);
            write_series_csv(series, fs::path(ingest_out));
            nlohmann::json rep = res.report.to_json();
            std::vector<fs::path> inputs = {cfg.get("data.trips"), cfg.get("data.zones")};
            if (cfg.has("data.schema")) inputs.push_back(cfg.get("data.schema"));
            rep["manifest"] = make_manifest("ingest", cfg.hash(), 0, inputs);
            write_json(rep, ingest_report);
            std::cout << "accepted " << res.report.accepted << " of " << res.report.total_rows << " rows; "
                      << series.length() << " days\n";
        } else if (trainc->parsed()) {
            const PipelineConfig cfg = resolve_config(common, train_keys);
            const DemandSeries series = load_series(train_demand);
            const ModelSpec spec = cfg.model_spec(series.zones());
            Checkpoint ckpt = train_from_config(series, cfg, model_name(spec));
            ckpt.extra["manifest"] = make_manifest("train", cfg.hash(), cfg.get_seed("train.seed"), {train_demand});
            save_checkpoint(ckpt, train_out);
            std::cout << "trained " << ckpt.extra["name"].get<std::string>() << " for " << ckpt.history.size()
                      << " epochs";
            if (!ckpt.history.empty()) std::cout << "; final loss " << ckpt.history.back();
            std::cout << "\n";
        } else if (fitgmm->parsed()) {
            const PipelineConfig cfg = resolve_config(common, fit_keys);
            const DemandSeries series = load_series(fit_demand);
            const auto f = load_forecaster(fit_ckpt, "");
            const auto train_end = series.index_of(cfg.get_date("split.train_end"));
            if (!train_end) throw ConfigError("split.train_end", "outside the demand series");
            // Residuals come from the held-out tail when one is configured.
            const std::size_t held = cfg.get_size("split.validation_days");
            const std::size_t end = *train_end + 1;
            const std::size_t begin = held > 0 && held < end ? end - held : 0;
            const std::vector<EmFit> fits = fit_residual_mixtures(*f, series, begin, end, cfg.em_options());
            nlohmann::json out{{"manifest", make_manifest("fit-gmm", cfg.hash(), cfg.get_seed("em.seed"),
                                                          {fit_demand, fit_ckpt})}};
            out["zone_ids"] = series.zone_ids;
            out["mixtures"] = nlohmann::json::array();
            out["fits"] = nlohmann::json::array();
            for (const auto& fit : fits) {
                out["mixtures"].push_back(fit.best.params);
                out["fits"].push_back(fit_record(fit));
            }
            write_json(out, fit_out);
            std::cout << "fitted " << fits.size() << " residual mixtures\n";
        } else if (forecastc->parsed()) {
            const DemandSeries series = load_series(fc_demand);
            const auto f = load_forecaster(fc_ckpt, fc_residuals);
            const Day target = fc_date.empty() ? series.days.back() + std::chrono::days{1} : parse_date(fc_date);
            std::size_t idx = series.length();
            if (const auto i = series.index_of(target)) {
                idx = *i;
            } else if (target != series.days.back() + std::chrono::days{1}) {
                throw std::runtime_error("forecast: " + format_date(target) + " is not in or right after the series");
            }
            const DayForecast fc = f->forecast(history_window(series, idx, f->window()), target);
            nlohmann::json out{{"manifest", make_manifest("forecast", "", 0, {fc_demand, fc_ckpt})},
                               {"model", f->name()},
                               {"date", format_date(target)},
                               {"records", forecast_to_json(fc, series.zone_ids, target)}};
            write_json(out, fc_out);
            std::cout << out["records"].dump(2) << "\n";
        } else if (optimize->parsed()) {
            const PipelineConfig cfg = resolve_config(common, opt_keys);
            const DayForecast fc = forecast_from_json(read_json(opt_forecast, "forecast"));
            const RelocationInstance inst = load_instance(opt_instance);
            const PlanMode mode = parse_plan_mode(cfg.get("eval.mode"));
            const std::size_t n = cfg.get_size("scenario.count");
            const std::uint64_t seed = cfg.get_seed("scenario.seed");
            const PlanResult r = plan_day(fc, mode, inst, n, seed);
            nlohmann::json out{{"manifest", make_manifest("optimize", cfg.hash(), seed, {opt_forecast, opt_instance})},
                               {"mode", to_string(mode)},
                               {"status", to_string(r.status)},
                               {"objective", r.objective},
                               {"iterations", r.iterations},
                               {"plan", r.plan},
                               {"certificate",
                                {{"primal_infeasibility", r.certificate.primal_infeasibility},
                                 {"dual_infeasibility", r.certificate.dual_infeasibility},
                                 {"complementary_slackness", r.certificate.complementary_slackness},
                                 {"duality_gap", r.certificate.duality_gap}}}};
            if (opt_round || !opt_lp.empty()) {
                const ScenarioSet sc = mode == PlanMode::Stochastic
                                           ? sample_scenarios(fc.distribution, n, seed)
                                           : ScenarioSet{{fc.point}, seed};
                if (opt_round) {
                    const RoundingReport rr = round_plan(inst, r.plan, sc);
                    out["rounded"] = {{"plan", rr.rounded}, {"relaxed_value", rr.relaxed_value},
                                      {"rounded_value", rr.rounded_value}, {"gap", rr.gap()}};
                }
                if (!opt_lp.empty()) {
                    const TwoStageModel m =
                        mode == PlanMode::Stochastic ? build_two_stage(inst, sc) : deterministic_model(inst, fc.point);
                    write_text(to_lp_format(m.lp), opt_lp);
                }
            }
            write_json(out, opt_out);
            std::cout << "objective " << r.objective << ", moving " << r.plan.moving() << "\n";
        } else if (evaluate->parsed()) {
            PipelineConfig cfg = resolve_config(common, eval_keys);
            if (ev_threads > 0) cfg.set("eval.threads", std::to_string(ev_threads));
            const DemandSeries series = load_series(ev_demand);
            const RelocationInstance inst = load_instance(ev_instance);
            const bool post_hoc = cfg.get("eval.forecast") == "post-hoc";
            if (post_hoc && ev_residuals.empty()) {
                throw ConfigError("eval.forecast", "post-hoc needs --residuals (run `ddsp fit-gmm`)");
            }
            const auto f = load_forecaster(ev_ckpt, post_hoc ? ev_residuals : "");
            const auto [train, test] = chronological_split(series, cfg.get_date("split.train_end"),
                                                           test_end_of(cfg, series));
            const PlanMode mode = parse_plan_mode(cfg.get("eval.mode"));
            EvaluationReport rep = rolling_evaluate(*f, mode, series, test.days.front(), test.days.back(), inst,
                                                    cfg.evaluation_config());
            nlohmann::json out = rep.to_json();
            // Threads change wall time only, so they stay out of the hash.
            PipelineConfig hashed = cfg;
            hashed.set("eval.threads", "1");
            out["manifest"] = make_manifest("evaluate", hashed.hash(), cfg.get_seed("scenario.seed"),
                                            {ev_demand, ev_ckpt, ev_instance});
            write_json(out, ev_out);
            if (!ev_csv.empty()) write_text(rep.days_csv(), ev_csv);
            std::cout << rep.method << ": " << rep.day_count() << " days, average profit " << rep.avg_profit << "\n";
        } else if (comparec->parsed()) {
            const EvaluationReport a = EvaluationReport::from_json(read_json(cmp_a, "evaluate"));
            const EvaluationReport b = EvaluationReport::from_json(read_json(cmp_b, "evaluate"));
            const ComparisonReport c = compare(a, b);
            if (!cmp_out.empty()) write_json(c.to_json(), cmp_out);
            std::cout << c.table();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

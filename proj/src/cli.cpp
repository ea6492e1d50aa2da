#include "hemopt/cli.hpp"

#include "hemopt/accounting.hpp"
#include "hemopt/errors.hpp"
#include "hemopt/forecast.hpp"
#include "hemopt/io.hpp"
#include "hemopt/mpc.hpp"
#include "hemopt/prescient.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace hemopt {

namespace {

namespace fs = std::filesystem;

std::string out_path(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.output_dir);
    return (fs::path(cfg.output_dir) / name).string();
}

void describe_scenario(const Scenario& s) {
    const auto& g = s.grid;
    if (g.synthetic)
        std::printf("scenario: synthetic, %d months x %d periods (%d-period days)\n",
                    g.num_months, g.periods, g.day_length);
    else
        std::printf("scenario: %d periods in %d months, %s .. %s\n", g.periods, g.num_months,
                    format_civil_hour(g.hour_at(0)).c_str(),
                    format_civil_hour(g.hour_at(g.periods - 1)).c_str());
}

void describe_report(const char* label, const CostReport& r) {
    std::printf("%s: total %.2f NOK (tou %.2f, da %.2f, peak %.2f)\n", label, r.totals.total,
                r.totals.tou, r.totals.da, r.totals.peak);
    if (r.savings_nok)
        std::printf("savings vs no storage: %.2f NOK (%.2f%%)\n", *r.savings_nok,
                    *r.savings_pct);
}

int cmd_baseline(const std::string& config_path) {
    const RunConfig cfg = read_config(config_path);
    const Scenario s = scenario_from_config(cfg);
    describe_scenario(s);
    const CostReport report = baseline_no_storage(s);
    const std::string path = out_path(cfg, "report.json");
    write_text_file(path, report_to_json(report));
    describe_report("baseline", report);
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

int cmd_prescient(const std::string& config_path, bool enumerate_oracle,
                  double time_budget) {
    const RunConfig cfg = read_config(config_path);
    const Scenario s = scenario_from_config(cfg);
    describe_scenario(s);

    PrescientOptions opt;
    opt.time_budget_seconds = time_budget;
    const PlanResult plan = solve_prescient(s, opt);

    CostReport report = evaluate(plan.p, s);
    set_reference(report, baseline_no_storage(s));
    write_text_file(out_path(cfg, "report.json"), report_to_json(report));
    write_trace_csv(out_path(cfg, "trace.csv"), s, plan.p, plan.c, plan.d, plan.q);

    nlohmann::json stats;
    stats["nodes_explored"] = plan.stats.nodes_explored;
    stats["lps_solved"] = plan.stats.lps_solved;
    stats["wall_seconds"] = plan.stats.wall_seconds;
    stats["exact"] = plan.stats.exact;
    stats["bound_gap"] = plan.stats.bound_gap;
    stats["objective"] = {{"energy", plan.objective.energy},
                          {"peak", plan.objective.peak},
                          {"total", plan.objective.total}};
    stats["assignment"] = plan.assignment.tiers;
    write_text_file(out_path(cfg, "solve-stats.json"), stats.dump(2) + "\n");

    describe_report("prescient", report);
    std::printf("solve: %d nodes, %d LPs, %.2fs%s\n", plan.stats.nodes_explored,
                plan.stats.lps_solved, plan.stats.wall_seconds,
                plan.stats.exact ? "" : " (time budget hit; bound gap reported)");
    std::printf("wrote %s, trace.csv, solve-stats.json\n",
                out_path(cfg, "report.json").c_str());

    if (enumerate_oracle) {
        const PlanResult ex = enumerate_exact(s);
        const double gap = std::abs(ex.objective.total - plan.objective.total);
        std::printf("enumeration oracle: total %.6f vs branch-and-bound %.6f (gap %.2e)\n",
                    ex.objective.total, plan.objective.total, gap);
        if (gap > 1e-6) {
            std::fprintf(stderr, "error: prescient: enumeration disagrees with search\n");
            return 1;
        }
    }
    return 0;
}

int cmd_mpc(const std::string& config_path, const std::string& forecast_kind, int surrogate_n,
            int horizon, int threads, const std::string& load_model_flag,
            const std::string& price_model_flag) {
    RunConfig cfg = read_config(config_path);
    if (surrogate_n > 0) cfg.mpc.surrogate_n = surrogate_n;
    if (horizon > 0) cfg.mpc.horizon = horizon;
    if (threads > 0) cfg.mpc.threads = threads;
    if (!load_model_flag.empty()) cfg.load_model = load_model_flag;
    if (!price_model_flag.empty()) cfg.price_model = price_model_flag;

    const Scenario s = scenario_from_config(cfg);
    describe_scenario(s);

    std::unique_ptr<Forecaster> fc;
    if (forecast_kind == "oracle") {
        fc = std::make_unique<OracleForecaster>(s);
    } else if (forecast_kind == "simple") {
        fc = std::make_unique<SimpleForecaster>(s);
    } else if (forecast_kind == "fitted") {
        if (cfg.load_model.empty() || cfg.price_model.empty())
            throw ValidationError(
                "mpc: fitted forecasts need model files; set forecast.load_model and "
                "forecast.price_model in the config or pass --load-model/--price-model "
                "(produce them with fit-forecast)");
        auto [lb, lar] = models_from_json(read_text_file(cfg.load_model));
        auto [pb, par] = models_from_json(read_text_file(cfg.price_model));
        fc = std::make_unique<FittedForecaster>(s, std::move(lb), std::move(lar),
                                                std::move(pb), std::move(par));
    } else {
        throw ValidationError("mpc: --forecast must be fitted, simple, or oracle, got '" +
                              forecast_kind + "'");
    }

    const SimulationTrace tr = run_mpc(s, *fc, cfg.mpc);
    CostReport report = tr.report;
    set_reference(report, baseline_no_storage(s));
    write_text_file(out_path(cfg, "report.json"), report_to_json(report));
    write_trace_csv(out_path(cfg, "trace.csv"), s, tr.p, tr.c, tr.d, tr.q, tr.tier_cur,
                    tr.tier_next);

    describe_report("mpc", report);
    std::printf("simulation: %s forecasts, horizon %d, planning top-day count %d, %lld LPs, "
                "%.2fs\n",
                forecast_kind.c_str(), cfg.mpc.horizon, cfg.mpc.surrogate_n, tr.lps_solved,
                tr.wall_seconds);
    std::printf("wrote %s, trace.csv\n", out_path(cfg, "report.json").c_str());
    return 0;
}

int cmd_fit(const std::string& train_path, const std::string& out, const std::string& target,
            double quantile, double lambda, int ar_window, int ar_horizon, bool search) {
    const TimedSeries train = load_series_csv(train_path);
    std::printf("training %s series: %zu hours, %s .. %s\n", target.c_str(),
                train.values.size(), format_civil_hour(train.start).c_str(),
                format_civil_hour(train.start + static_cast<CivilHour>(train.values.size()) - 1)
                    .c_str());

    BaselineConfig base = default_baseline_config();
    base.quantile = quantile;
    base.lambda_reg = lambda;
    if (search) {
        FitSearchSpace space;
        space.quantiles = {quantile};
        space.lambdas = {0.01, 0.1, 1.0, 10.0};
        const FitChoice pick = search_baseline_fit(train.values, train.start, base, space);
        base.quantile = pick.quantile;
        base.lambda_reg = pick.lambda_reg;
        std::printf("grid search picked quantile %.3f, lambda %.4g (validation loss %.6f)\n",
                    pick.quantile, pick.lambda_reg, pick.validation_loss);
    }

    const BaselineModel model = fit_baseline(train.values, train.start, base);
    const auto residuals = baseline_residuals(model, train.values, train.start);
    ArResidualModel ar;
    if (ar_window > 0)
        ar = fit_ar_residual(residuals, ar_window, ar_horizon, base.quantile,
                             base.lambda_reg);

    double loss = 0.0;
    for (const double r : residuals) loss += pinball_loss(r, base.quantile);
    std::printf("baseline residual pinball (quantile %.3f): %.6f per hour\n", base.quantile,
                loss / static_cast<double>(residuals.size()));

    write_text_file(out, models_to_json(model, ar) + "\n");
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_spec) {
    double lo = 0.0, hi = 0.0, step = 0.0;
    if (std::sscanf(grid_spec.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3)
        throw ValidationError("sweep: --grid must be 'start:stop:step', got '" + grid_spec +
                              "'");
    if (step <= 0.0 || hi < lo)
        throw ValidationError("sweep: grid needs stop >= start and step > 0");
    std::vector<double> capacities;
    for (double q = lo; q <= hi + 1e-9; q += step) capacities.push_back(q);
    if (capacities.size() > 1000) throw ValidationError("sweep: more than 1000 grid points");

    const RunConfig cfg = read_config(config_path);
    const Scenario s = scenario_from_config(cfg);
    describe_scenario(s);

    const auto points = sweep_capacity(s, capacities);
    const std::string path = out_path(cfg, "sweep.csv");
    write_sweep_csv(path, points);
    for (const auto& pt : points)
        std::printf("Q=%7.2f kWh  total %12.2f NOK  savings %6.2f%%\n", pt.capacity_kwh,
                    pt.total_nok, pt.savings_pct);
    std::printf("wrote %s\n", path.c_str());
    return 0;
}

int cmd_synth(std::uint64_t seed, int months, int days, int day_length,
              const std::string& out_dir) {
    const Scenario s = make_synthetic_scenario(seed, months, days, day_length);
    fs::create_directories(out_dir);
    const std::string scenario_path = (fs::path(out_dir) / "scenario.json").string();
    write_scenario(scenario_path, s);

    RunConfig cfg = default_config();
    cfg.scenario = scenario_path;
    cfg.output_dir = out_dir;
    cfg.seed = seed;
    const std::string config_path = (fs::path(out_dir) / "config.json").string();
    write_text_file(config_path, config_to_json(cfg));

    std::printf("wrote %s (%d periods) and %s\n", scenario_path.c_str(), s.grid.periods,
                config_path.c_str());
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"home battery scheduling against energy and tiered peak-power charges"};
    app.require_subcommand(1);

    std::string config_path, forecast_kind, grid_spec, train_path, model_out;
    std::string target = "load", load_model_flag, price_model_flag, synth_out = ".";
    bool enumerate_oracle = false, search = false;
    double time_budget = 0.0, quantile = 0.5, lambda = 1.0;
    int surrogate_n = 0, horizon = 0, threads = 0, ar_window = 24, ar_horizon = 23;
    std::uint64_t seed = 0;
    int months = 2, days = 5, day_length = 4;

    auto* baseline = app.add_subcommand("baseline", "cost of serving the load with no storage");
    baseline->add_option("--config", config_path, "run configuration JSON")
        ->required()
        ->check(CLI::ExistingFile);

    auto* prescient =
        app.add_subcommand("prescient", "optimal plan under perfect foresight");
    prescient->add_option("--config", config_path, "run configuration JSON")
        ->required()
        ->check(CLI::ExistingFile);
    prescient->add_flag("--enumerate-oracle", enumerate_oracle,
                        "cross-check against exhaustive tier enumeration");
    prescient->add_option("--time-budget", time_budget,
                          "seconds before returning the incumbent (0: none)");

    auto* mpc = app.add_subcommand("mpc", "receding-horizon simulation with forecasts");
    mpc->add_option("--config", config_path, "run configuration JSON")
        ->required()
        ->check(CLI::ExistingFile);
    mpc->add_option("--forecast", forecast_kind, "fitted, simple, or oracle")
        ->required()
        ->check(CLI::IsMember({"fitted", "simple", "oracle"}));
    mpc->add_option("--surrogate-n", surrogate_n, "top-day count used inside plans");
    mpc->add_option("--horizon", horizon, "plan length in periods");
    mpc->add_option("--threads", threads, "tier-pair LPs solved concurrently");
    mpc->add_option("--load-model", load_model_flag, "fitted load model JSON");
    mpc->add_option("--price-model", price_model_flag, "fitted price model JSON");

    auto* fit = app.add_subcommand("fit-forecast", "fit a baseline-plus-AR quantile model");
    fit->add_option("--train", train_path, "training series CSV")
        ->required()
        ->check(CLI::ExistingFile);
    fit->add_option("--out", model_out, "model JSON output path")->required();
    fit->add_option("--target", target, "load or price")
        ->check(CLI::IsMember({"load", "price"}));
    fit->add_option("--quantile", quantile, "pinball quantile eta");
    fit->add_option("--lambda", lambda, "ridge strength");
    fit->add_option("--ar-window", ar_window, "residual lags fed to the AR stage (0: none)");
    fit->add_option("--ar-horizon", ar_horizon, "steps ahead the AR stage predicts");
    fit->add_flag("--search", search, "grid-search quantile and lambda on a holdout");

    auto* sweep = app.add_subcommand("sweep-capacity", "prescient savings per capacity");
    sweep->add_option("--config", config_path, "run configuration JSON")
        ->required()
        ->check(CLI::ExistingFile);
    sweep->add_option("--grid", grid_spec, "capacities as start:stop:step kWh")->required();

    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic scenario");
    synth->add_option("--seed", seed, "RNG seed");
    synth->add_option("--months", months, "synthetic months");
    synth->add_option("--days", days, "days per month");
    synth->add_option("--day-length", day_length, "periods per day");
    synth->add_option("--out", synth_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(baseline)) return cmd_baseline(config_path);
        if (app.got_subcommand(prescient))
            return cmd_prescient(config_path, enumerate_oracle, time_budget);
        if (app.got_subcommand(mpc))
            return cmd_mpc(config_path, forecast_kind, surrogate_n, horizon, threads,
                           load_model_flag, price_model_flag);
        if (app.got_subcommand(fit))
            return cmd_fit(train_path, model_out, target, quantile, lambda, ar_window,
                           ar_horizon, search);
        if (app.got_subcommand(sweep)) return cmd_sweep(config_path, grid_spec);
        if (app.got_subcommand(synth))
            return cmd_synth(seed, months, days, day_length, synth_out);
        return 2;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const InfeasibleError& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
}

} // namespace hemopt

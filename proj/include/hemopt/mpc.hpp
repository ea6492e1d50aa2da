#pragma once

#include "hemopt/accounting.hpp"
#include "hemopt/forecast.hpp"
#include "hemopt/scenario.hpp"

#include <memory>
#include <vector>

namespace hemopt {

struct MpcState {
    int t = 0;
    double q = 0.0;
    // Daily maxima of executed grid power for completed days of the current
    // month, oldest first; the running maximum covers the day in progress.
    std::vector<double> month_daily_maxima;
    double today_running_max = 0.0;
};

enum class TerminalRule {
    plan_to_initial, // every plan steers the charge back to q_init
    free_end,        // no terminal constraint on mid-run plans
};

struct MpcOptions {
    int horizon = 720;
    int surrogate_n = 1; // top-day count used inside plans; accounting uses the true one
    TerminalRule terminal = TerminalRule::plan_to_initial;
    bool enforce_final_at_data_end = true; // plans reaching the data end pin q_final
    int threads = 1;                       // tier-pair LPs evaluated concurrently
};

// Periods from t (inclusive) whose day-ahead prices are already published:
// through the end of the current day before the announcement hour, through
// the end of the next day from it.
int known_price_horizon(int t, const TimeGrid& grid, int announcement_hour);

class Forecaster {
  public:
    virtual ~Forecaster() = default;
    // Both return h values for periods t..t+h-1. Position 0 is overwritten
    // with the true observation by the rollout, as is the known-price prefix.
    virtual std::vector<double> load_forecast(int t, int h) = 0;
    virtual std::vector<double> da_forecast(int t, int h) = 0;
};

// Perfect foresight: returns the realized series.
class OracleForecaster final : public Forecaster {
  public:
    explicit OracleForecaster(const Scenario& s) : s_(&s) {}
    std::vector<double> load_forecast(int t, int h) override;
    std::vector<double> da_forecast(int t, int h) override;

  private:
    const Scenario* s_;
};

// Persistence: tiles the last day_length-1 observed loads over the horizon
// and repeats the last published price beyond the known window.
class SimpleForecaster final : public Forecaster {
  public:
    explicit SimpleForecaster(const Scenario& s) : s_(&s) {}
    std::vector<double> load_forecast(int t, int h) override;
    std::vector<double> da_forecast(int t, int h) override;

  private:
    const Scenario* s_;
};

// Baseline-plus-AR models for load and day-ahead price, conditioned on the
// realized history.
class FittedForecaster final : public Forecaster {
  public:
    FittedForecaster(const Scenario& s, BaselineModel load_base, ArResidualModel load_ar,
                     BaselineModel da_base, ArResidualModel da_ar)
        : s_(&s), load_base_(std::move(load_base)), load_ar_(std::move(load_ar)),
          da_base_(std::move(da_base)), da_ar_(std::move(da_ar)) {}
    std::vector<double> load_forecast(int t, int h) override;
    std::vector<double> da_forecast(int t, int h) override;

  private:
    std::vector<double> combined(const BaselineModel& base, const ArResidualModel& ar,
                                 const std::vector<double>& series, int t, int h) const;
    const Scenario* s_;
    BaselineModel load_base_;
    ArResidualModel load_ar_;
    BaselineModel da_base_;
    ArResidualModel da_ar_;
};

struct MpcAction {
    double p = 0.0, c = 0.0, d = 0.0;
};

struct MpcStepResult {
    MpcAction action;
    int tier_cur = 0;
    int tier_next = 0; // 0 when the window ends inside the current month
    int lps_solved = 0;
    double plan_total = 0.0; // best pair's LP cost plus its tier charges
};

// One planning step: enumerate feasible (current, next) tier pairs over the
// H-period window of plan_scenario (whose series past t hold forecasts) and
// return the first-period flows of the cheapest pair.
MpcStepResult mpc_step(const MpcState& state, const Scenario& plan_scenario,
                       const MpcOptions& options);

// Advance the controller state by one executed period. Violations of bounds,
// balance, or charge limits are errors, never clipped.
MpcState update_state(const MpcState& state, const Scenario& s, const MpcAction& action,
                      double observed_load);

struct SimulationTrace {
    std::vector<double> p, c, d;
    std::vector<double> q; // periods + 1 states
    std::vector<int> tier_cur, tier_next;
    long long lps_solved = 0;
    double wall_seconds = 0.0;
    CostReport report; // true top-day-count accounting of the executed p
};

SimulationTrace run_mpc(const Scenario& s, Forecaster& forecaster,
                        const MpcOptions& options = {});

} // namespace hemopt

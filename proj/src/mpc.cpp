#include "hemopt/mpc.hpp"

#include "hemopt/errors.hpp"
#include "hemopt/flow_lp.hpp"
#include "hemopt/lp.hpp"
#include "hemopt/peak_tariff.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

namespace hemopt {

int known_price_horizon(int t, const TimeGrid& grid, int announcement_hour) {
    const int rest = grid.day_length - grid.hour_of_day(t);
    if (grid.hour_of_day(t) < announcement_hour) return rest;
    return rest + grid.day_length;
}

namespace {

void check_slice(const Scenario& s, int t, int h) {
    if (t < 0 || h < 1 || t + h > s.grid.periods)
        throw ValidationError("forecast window outside the data range");
}

} // namespace

std::vector<double> OracleForecaster::load_forecast(int t, int h) {
    check_slice(*s_, t, h);
    return {s_->load.begin() + t, s_->load.begin() + t + h};
}

std::vector<double> OracleForecaster::da_forecast(int t, int h) {
    check_slice(*s_, t, h);
    return {s_->prices.da.begin() + t, s_->prices.da.begin() + t + h};
}

std::vector<double> SimpleForecaster::load_forecast(int t, int h) {
    check_slice(*s_, t, h);
    const int block_len = std::max(1, s_->grid.day_length - 1);
    std::vector<double> block(block_len);
    for (int j = 0; j < block_len; ++j) {
        const int idx = std::max(0, t - block_len + 1 + j);
        block[j] = s_->load[idx];
    }
    std::vector<double> out(h);
    out[0] = s_->load[t];
    for (int k = 1; k < h; ++k) out[k] = block[(k - 1) % block_len];
    return out;
}

std::vector<double> SimpleForecaster::da_forecast(int t, int h) {
    check_slice(*s_, t, h);
    const int known =
        std::min(known_price_horizon(t, s_->grid, s_->prices.da_announcement_hour), h);
    std::vector<double> out(h);
    for (int i = 0; i < known; ++i) out[i] = s_->prices.da[t + i];
    const double last = s_->prices.da[t + known - 1];
    for (int i = known; i < h; ++i) out[i] = last;
    return out;
}

std::vector<double> FittedForecaster::combined(const BaselineModel& base,
                                               const ArResidualModel& ar,
                                               const std::vector<double>& series, int t,
                                               int h) const {
    const CivilHour hour = s_->grid.hour_at(t);
    if (ar.gamma.empty() || t + 1 < ar.m_in) {
        auto out = predict_baseline(base, hour, h);
        out[0] = series[t];
        return out;
    }
    const std::span<const double> recent(series.data() + t - ar.m_in + 1,
                                         static_cast<size_t>(ar.m_in));
    return forecast(base, ar, recent, hour, h);
}

std::vector<double> FittedForecaster::load_forecast(int t, int h) {
    check_slice(*s_, t, h);
    return combined(load_base_, load_ar_, s_->load, t, h);
}

std::vector<double> FittedForecaster::da_forecast(int t, int h) {
    check_slice(*s_, t, h);
    return combined(da_base_, da_ar_, s_->prices.da, t, h);
}

namespace {

struct PairOutcome {
    bool feasible = false;
    double total = 0.0;
    MpcAction act;
};

// Interior tier caps are tightened by this margin in every plan. Optimal
// plans ride their cap, so without it executed peaks would land on tariff
// boundaries to within solver noise and the billed tier would be a coin
// flip. The margin is far below metering resolution and its cost effect is
// orders of magnitude under the tariff steps it protects against.
constexpr double kCapMargin = 1e-5;
// A tier is only pruned when even the margined cap sits clearly below the
// realized floor; the slack absorbs interior-point feasibility noise.
constexpr double kFloorSlack = 1e-7;
// Executed peaks that rode a margined cap land within solver noise of it.
// Entries this close to a cap are snapped onto it, so re-planning the same
// tier sees an exactly tight constraint instead of a hairline one.
constexpr double kSnapTol = 1e-7;

} // namespace

MpcStepResult mpc_step(const MpcState& state, const Scenario& sp, const MpcOptions& opt) {
    const auto& g = sp.grid;
    if (opt.horizon < 1) throw ValidationError("mpc: horizon must be at least 1");
    if (opt.surrogate_n < 1)
        throw ValidationError("mpc: planning top-day count must be at least 1");
    if (state.t < 0 || state.t >= g.periods)
        throw ValidationError("mpc: planning period outside the grid");

    const int t = state.t;
    const int hw = std::min(opt.horizon, g.periods - t);
    const int k0 = g.month_of[t];
    const int klast = g.month_of[t + hw - 1];
    const int months_in_window = klast - k0 + 1;
    const int L = sp.peak.num_tiers();
    const auto& beta = sp.peak.costs;

    auto snap_to_caps = [&](double v) {
        for (int j = 1; j < L; ++j) {
            const double cap = sp.peak.thresholds[j - 1] - kCapMargin;
            if (std::abs(v - cap) <= kSnapTol) return cap;
        }
        return v;
    };
    std::vector<double> realized = state.month_daily_maxima;
    for (auto& v : realized) v = snap_to_caps(v);
    const double running = snap_to_caps(state.today_running_max);

    // Realized maxima only push the month metric up: padding the remaining
    // plan days with zero gives the lowest metric any plan can achieve, and
    // tiers whose threshold sits below it cannot be completed.
    const int k0_end = g.month_period_range(k0).second;
    const int last_cur = std::min(t + hw - 1, k0_end - 1);
    const int m_count_cur = g.day_of[last_cur] - g.day_of[t] + 1;
    std::vector<double> entries = realized;
    entries.push_back(running);
    entries.resize(entries.size() + static_cast<size_t>(m_count_cur) - 1, 0.0);
    const double z_floor = monthly_peak_metric(entries, opt.surrogate_n);
    int floor = L;
    for (int j = 1; j < L; ++j) {
        if (z_floor <= sp.peak.thresholds[j - 1] - kCapMargin + kFloorSlack) {
            floor = j;
            break;
        }
    }

    FlowBoundary boundary;
    boundary.q_start = state.q;
    boundary.realized_daily_max = std::move(realized);
    boundary.running_max = running;
    if (t + hw == g.periods && opt.enforce_final_at_data_end)
        boundary.q_end = sp.storage.final_kwh;
    else if (opt.terminal == TerminalRule::plan_to_initial)
        boundary.q_end = sp.storage.initial_kwh;

    struct PairPlan {
        int jc, jn;
    };
    std::vector<PairPlan> pairs;
    const bool has_next = months_in_window >= 2;
    for (int jc = floor; jc <= L; ++jc) {
        if (has_next)
            for (int jn = 1; jn <= L; ++jn) pairs.push_back({jc, jn});
        else
            pairs.push_back({jc, 0});
    }

    auto evaluate_pair = [&](const PairPlan& pr) {
        TierAssignment a;
        a.tiers.assign(months_in_window, TierAssignment::unconstrained);
        a.tiers[0] = pr.jc;
        if (pr.jn > 0) a.tiers[1] = pr.jn;
        FlowOptions fo;
        fo.surrogate_n = opt.surrogate_n;
        fo.cap_margin = kCapMargin;
        PairOutcome out;
        const auto F = build_flow_lp(sp, t, hw, a, boundary, fo);
        const auto sol = solve_lp(F.lp);
        if (sol.status == LpStatus::infeasible) return out;
        if (sol.status == LpStatus::error)
            throw std::runtime_error("mpc: LP solve failed at period " + std::to_string(t) +
                                     ": " + sol.message);
        out.feasible = true;
        // Months past the next one carry no tier decision; they enter every
        // pair with the same bottom-tier charge and drop out of the argmin.
        out.total = sol.objective + beta[pr.jc - 1] + (pr.jn > 0 ? beta[pr.jn - 1] : 0.0) +
                    (months_in_window - (pr.jn > 0 ? 2 : 1)) * beta.front();
        out.act = {F.powers(sol)[0], F.charges(sol)[0], F.discharges(sol)[0]};
        return out;
    };

    std::vector<PairOutcome> outcomes(pairs.size());
    const int workers = std::min<int>(opt.threads, static_cast<int>(pairs.size()));
    if (workers > 1) {
        std::atomic<size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < pairs.size(); i = next.fetch_add(1)) {
                    try {
                        outcomes[i] = evaluate_pair(pairs[i]);
                    } catch (...) {
                        const std::lock_guard<std::mutex> lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    } else {
        for (size_t i = 0; i < pairs.size(); ++i) outcomes[i] = evaluate_pair(pairs[i]);
    }

    MpcStepResult res;
    res.lps_solved = static_cast<int>(pairs.size());
    bool found = false;
    for (size_t i = 0; i < pairs.size(); ++i) {
        if (!outcomes[i].feasible) continue;
        if (!found || outcomes[i].total < res.plan_total) {
            found = true;
            res.plan_total = outcomes[i].total;
            res.action = outcomes[i].act;
            res.tier_cur = pairs[i].jc;
            res.tier_next = pairs[i].jn;
        }
    }
    if (!found)
        throw InfeasibleError("mpc: every tier pair is infeasible at period " +
                              std::to_string(t));
    return res;
}

MpcState update_state(const MpcState& state, const Scenario& s, const MpcAction& a,
                      double observed_load) {
    const auto& g = s.grid;
    constexpr double tol = 1e-6;
    if (state.t < 0 || state.t >= g.periods)
        throw ValidationError("update_state: period outside the grid");
    if (a.p < -tol || a.p > s.gridp.max_power_kw + tol)
        throw ValidationError("update_state: grid power outside [0, P]");
    if (a.c < -tol || a.c > s.storage.max_charge_kw + tol)
        throw ValidationError("update_state: charge rate outside [0, C]");
    if (a.d < -tol || a.d > s.storage.max_discharge_kw + tol)
        throw ValidationError("update_state: discharge rate outside [0, D]");
    if (std::abs(a.p + a.d - observed_load - a.c) > 1e-5)
        throw ValidationError("update_state: power balance violated");
    const double q_next = step_storage(state.q, a.c, a.d, s.storage, g.h);
    if (q_next < -tol || q_next > s.storage.capacity_kwh + tol)
        throw ValidationError("update_state: charge leaves [0, Q]");

    MpcState ns;
    ns.t = state.t + 1;
    ns.q = std::clamp(q_next, 0.0, s.storage.capacity_kwh);
    ns.month_daily_maxima = state.month_daily_maxima;
    ns.today_running_max = std::max(state.today_running_max, std::max(a.p, 0.0));
    if (ns.t >= g.periods) {
        ns.month_daily_maxima.push_back(ns.today_running_max);
        ns.today_running_max = 0.0;
        return ns;
    }
    if (g.day_of[ns.t] != g.day_of[state.t]) {
        if (g.month_of[ns.t] != g.month_of[state.t])
            ns.month_daily_maxima.clear();
        else
            ns.month_daily_maxima.push_back(ns.today_running_max);
        ns.today_running_max = 0.0;
    }
    return ns;
}

SimulationTrace run_mpc(const Scenario& s, Forecaster& forecaster, const MpcOptions& opt) {
    require_valid(s);
    if (opt.horizon < 1) throw ValidationError("mpc: horizon must be at least 1");
    if (opt.surrogate_n < 1)
        throw ValidationError("mpc: planning top-day count must be at least 1");
    const auto t_start = std::chrono::steady_clock::now();
    const auto& g = s.grid;

    Scenario sp = s; // planning copy; series from t onward hold forecasts
    MpcState state;
    state.q = s.storage.initial_kwh;

    SimulationTrace tr;
    tr.q.push_back(state.q);
    for (int t = 0; t < g.periods; ++t) {
        const int hw = std::min(opt.horizon, g.periods - t);
        auto lf = forecaster.load_forecast(t, hw);
        auto df = forecaster.da_forecast(t, hw);
        if (static_cast<int>(lf.size()) != hw || static_cast<int>(df.size()) != hw)
            throw ValidationError("mpc: forecaster returned the wrong horizon length");
        lf[0] = s.load[t];
        // Keep planned loads inside the per-period servable interval so a
        // wild forecast cannot make the plan LP infeasible on its own.
        for (auto& v : lf)
            v = std::clamp(v, -s.storage.max_charge_kw,
                           s.gridp.max_power_kw + s.storage.max_discharge_kw);
        const int known = std::min(known_price_horizon(t, g, s.prices.da_announcement_hour), hw);
        for (int i = 0; i < known; ++i) df[i] = s.prices.da[t + i];
        std::copy(lf.begin(), lf.end(), sp.load.begin() + t);
        std::copy(df.begin(), df.end(), sp.prices.da.begin() + t);

        state.t = t;
        const auto step = mpc_step(state, sp, opt);
        state = update_state(state, s, step.action, s.load[t]);

        tr.p.push_back(step.action.p);
        tr.c.push_back(step.action.c);
        tr.d.push_back(step.action.d);
        tr.q.push_back(state.q);
        tr.tier_cur.push_back(step.tier_cur);
        tr.tier_next.push_back(step.tier_next);
        tr.lps_solved += step.lps_solved;
    }
    tr.report = evaluate(tr.p, s);
    tr.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return tr;
}

} // namespace hemopt

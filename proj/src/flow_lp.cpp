#include "hemopt/flow_lp.hpp"

#include "hemopt/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hemopt {

EpigraphCols encode_sum_largest_leq(LinearProgram& lp, std::span<const int> entry_cols,
                                    std::span<const double> entry_consts, int n,
                                    double bound, const std::string& tag) {
    const int total = static_cast<int>(entry_cols.size() + entry_consts.size());
    if (n < 1 || n > total)
        throw ValidationError("sum-largest: N out of range for " + tag);
    EpigraphCols epi;
    epi.t_col = lp.add_variables("t_" + tag, 1, 0.0, kInf);
    epi.v0 = lp.add_variables("v_" + tag, total, 0.0, kInf);
    epi.v_count = total;
    int v = epi.v0;
    for (const int col : entry_cols) {
        const int r = lp.add_inequality(0.0); // m - t - v <= 0
        lp.le_coeff(r, col, 1.0);
        lp.le_coeff(r, epi.t_col, -1.0);
        lp.le_coeff(r, v++, -1.0);
    }
    for (const double value : entry_consts) {
        const int r = lp.add_inequality(-value); // -t - v <= -value
        lp.le_coeff(r, epi.t_col, -1.0);
        lp.le_coeff(r, v++, -1.0);
    }
    if (std::isfinite(bound)) {
        const int r = lp.add_inequality(n * bound); // N*t + sum(v) <= N*bound
        lp.le_coeff(r, epi.t_col, n);
        for (int i = 0; i < total; ++i) lp.le_coeff(r, epi.v0 + i, 1.0);
    }
    return epi;
}

FlowLp build_flow_lp(const Scenario& s, int first, int periods,
                     const TierAssignment& assignment, const FlowBoundary& boundary,
                     const FlowOptions& options) {
    const TimeGrid& g = s.grid;
    if (first < 0 || periods < 1 || first + periods > g.periods)
        throw ValidationError("flow window out of range");
    const int last = first + periods;
    const int month_first = g.month_of[first];
    const int month_count = g.month_of[last - 1] - month_first + 1;
    if (static_cast<int>(assignment.tiers.size()) != month_count)
        throw ValidationError("tier assignment covers " +
                              std::to_string(assignment.tiers.size()) + " months, window has " +
                              std::to_string(month_count));
    const int n_days = options.surrogate_n > 0 ? options.surrogate_n : s.peak.n_days;
    if (options.cap_margin < 0.0) throw ValidationError("cap margin must be nonnegative");
    const bool peak_obj = options.objective.kind == FlowObjective::month_peak;
    if (peak_obj && (options.objective.month < 0 || options.objective.month >= month_count))
        throw ValidationError("peak objective month outside window");

    const StorageParams& st = s.storage;
    if (boundary.q_start < -1e-9 || boundary.q_start > st.capacity_kwh + 1e-9)
        throw ValidationError("window start charge outside [0, Q]");
    if (boundary.q_end && (*boundary.q_end < -1e-9 || *boundary.q_end > st.capacity_kwh + 1e-9))
        throw ValidationError("window end charge outside [0, Q]");
    if (boundary.running_max > 1e-12 && first % g.day_length == 0)
        throw ValidationError("running max given but the window starts a fresh day");
    for (const double r : boundary.realized_daily_max)
        if (r < -1e-9 || r > s.gridp.max_power_kw + 1e-9)
            throw ValidationError("realized daily max outside [0, P]");

    FlowLp F;
    F.first = first;
    F.periods = periods;
    LinearProgram& lp = F.lp;
    F.p0 = lp.add_variables("p", periods, 0.0, s.gridp.max_power_kw);
    F.c0 = lp.add_variables("c", periods, 0.0, st.max_charge_kw);
    F.d0 = lp.add_variables("d", periods, 0.0, st.max_discharge_kw);
    F.q0 = lp.add_variables("q", periods + 1, 0.0, st.capacity_kwh);
    lp.set_bounds(F.q0, boundary.q_start, boundary.q_start);
    if (boundary.q_end) lp.set_bounds(F.q0 + periods, *boundary.q_end, *boundary.q_end);

    if (!peak_obj) {
        for (int i = 0; i < periods; ++i)
            lp.set_cost(F.p0 + i, g.h * (s.prices.tou[first + i] + s.prices.da[first + i]));
    }

    for (int i = 0; i < periods; ++i) {
        const int bal = lp.add_equality(s.load[first + i]); // p + d - c = l
        lp.eq_coeff(bal, F.p0 + i, 1.0);
        lp.eq_coeff(bal, F.d0 + i, 1.0);
        lp.eq_coeff(bal, F.c0 + i, -1.0);
        // q_{i+1} - eta_s q_i - h eta_c c_i + (h/eta_d) d_i = 0
        const int dyn = lp.add_equality(0.0);
        lp.eq_coeff(dyn, F.q0 + i + 1, 1.0);
        lp.eq_coeff(dyn, F.q0 + i, -st.eta_storage);
        lp.eq_coeff(dyn, F.c0 + i, -g.h * st.eta_charge);
        lp.eq_coeff(dyn, F.d0 + i, g.h / st.eta_discharge);
    }

    for (int k = 0; k < month_count; ++k) {
        const int gm = month_first + k;
        auto [ms, me] = g.month_period_range(gm);
        const int start = std::max(ms, first);
        const int end = std::min(me, last);

        FlowMonthInfo info;
        info.grid_month = gm;
        info.first_period = start - first;
        info.last_period = end - first;
        info.tier = assignment.tiers[k];

        const bool target = peak_obj && options.objective.month == k;
        if (target && info.tier != TierAssignment::unconstrained)
            throw ValidationError("peak objective month must be unconstrained");

        // Realized history only exists for the first window month.
        std::span<const double> realized;
        if (k == 0) {
            const int elapsed_days = g.day_of[start] - g.month_first_day[gm];
            if (static_cast<int>(boundary.realized_daily_max.size()) != elapsed_days)
                throw ValidationError(
                    "boundary lists " + std::to_string(boundary.realized_daily_max.size()) +
                    " realized daily maxima, month has " + std::to_string(elapsed_days) +
                    " elapsed days");
            realized = boundary.realized_daily_max;
        }
        info.realized = static_cast<int>(realized.size());

        if (info.tier == TierAssignment::unconstrained && !target) {
            // No peak pressure: m variables would be dead weight.
            F.months.push_back(info);
            continue;
        }
        if (info.tier != TierAssignment::unconstrained) {
            if (info.tier < 1 || info.tier > s.peak.num_tiers())
                throw ValidationError("tier index out of range");
            info.bound = s.peak.thresholds[info.tier - 1];
            if (info.tier < s.peak.num_tiers())
                info.bound = std::max(info.bound - options.cap_margin, 0.0);
        }

        // One m variable per (possibly partial) window day of the month.
        const int day_first = g.day_of[start];
        const int day_last = g.day_of[end - 1];
        info.m_count = day_last - day_first + 1;
        const std::string tag = "mo" + std::to_string(k);
        info.m0 = lp.add_variables("m_" + tag, info.m_count, 0.0, s.gridp.max_power_kw);
        const bool partial_first_day =
            start > g.day_first_period(day_first) && boundary.running_max > 0.0;
        if (k == 0 && partial_first_day)
            lp.set_bounds(info.m0, std::min(boundary.running_max, s.gridp.max_power_kw),
                          s.gridp.max_power_kw);
        for (int t = start; t < end; ++t) {
            const int r = lp.add_inequality(0.0); // p_t - m_day <= 0
            lp.le_coeff(r, F.p0 + (t - first), 1.0);
            lp.le_coeff(r, info.m0 + (g.day_of[t] - day_first), -1.0);
        }

        std::vector<int> entry_cols(info.m_count);
        for (int i = 0; i < info.m_count; ++i) entry_cols[i] = info.m0 + i;
        info.n_eff = std::min(n_days, info.m_count + info.realized);
        info.epi = encode_sum_largest_leq(lp, entry_cols, realized, info.n_eff,
                                          target ? kInf : info.bound, tag);
        if (target) {
            lp.set_cost(info.epi.t_col, 1.0);
            for (int i = 0; i < info.epi.v_count; ++i)
                lp.set_cost(info.epi.v0 + i, 1.0 / info.n_eff);
        }
        F.months.push_back(info);
    }

    lp.validate();
    return F;
}

} // namespace hemopt

#pragma once

#include <optional>
#include <span>
#include <string>

#include "hemopt/lp.hpp"
#include "hemopt/scenario.hpp"

namespace hemopt {

// Tier choice per month of a planning window, in window order (0 = the month
// containing the first period). `unconstrained` drops the month's peak cap,
// which is the branch-and-bound relaxation.
struct TierAssignment {
    static constexpr int unconstrained = 0;
    std::vector<int> tiers;
};

// State at the window edges. `realized_daily_max` holds the completed days of
// the first window month (empty when the window starts on a month boundary);
// `running_max` is the peak so far of a first day already in progress (ignored
// when the window starts on a day boundary).
struct FlowBoundary {
    double q_start = 0.0;
    std::optional<double> q_end;
    std::vector<double> realized_daily_max;
    double running_max = 0.0;
};

struct FlowObjective {
    enum Kind { energy, month_peak } kind = energy;
    int month = 0; // window month whose z is minimized (kind == month_peak)
};

struct FlowOptions {
    int surrogate_n = 0; // 0: use the schedule's N; MPC planning may use 1
    // Shrinks every interior tier cap by this many kW. Receding-horizon plans
    // use a small margin so executed peaks never sit exactly on a tariff
    // boundary, where solver noise could flip the billed tier. The top tier
    // is the physical grid limit and is never shrunk.
    double cap_margin = 0.0;
    FlowObjective objective{};
};

// Columns created by one sum-largest epigraph.
struct EpigraphCols {
    int t_col = -1;
    int v0 = -1;
    int v_count = 0;
};

// Adds t >= 0 and v >= 0 with v_i >= entry_i - t for every entry (variable
// column or constant) and, when `bound` is finite, N*t + sum(v) <= N*bound.
// For nonnegative entries this enforces exactly sum-largest(entries, N) <=
// N*bound, and min over the cone of t + sum(v)/N equals sum-largest/N.
EpigraphCols encode_sum_largest_leq(LinearProgram& lp, std::span<const int> entry_cols,
                                    std::span<const double> entry_consts, int n,
                                    double bound, const std::string& tag);

struct FlowMonthInfo {
    int grid_month = 0;
    int first_period = 0, last_period = 0; // window-local [first, last)
    int tier = TierAssignment::unconstrained;
    int n_eff = 0;        // 0 when no epigraph was built
    double bound = kInf;  // peak cap in kW (tiered months only)
    int realized = 0;     // constant entries from the boundary
    int m0 = -1, m_count = 0;
    EpigraphCols epi;
};

// The storage-scheduling LP over a window of `periods` periods starting at
// grid period `first`, with fixed tier assignment. Objective is the energy
// cost h*sum((tou+da)*p); tier charges are constants handled by callers.
struct FlowLp {
    LinearProgram lp;
    int first = 0, periods = 0;
    int p0 = 0, c0 = 0, d0 = 0, q0 = 0;
    std::vector<FlowMonthInfo> months;

    std::vector<double> powers(const LpSolution& sol) const { return slice(sol, p0, periods); }
    std::vector<double> charges(const LpSolution& sol) const { return slice(sol, c0, periods); }
    std::vector<double> discharges(const LpSolution& sol) const { return slice(sol, d0, periods); }
    std::vector<double> socs(const LpSolution& sol) const { return slice(sol, q0, periods + 1); }

private:
    static std::vector<double> slice(const LpSolution& sol, int off, int count) {
        return {sol.x.begin() + off, sol.x.begin() + off + count};
    }
};

FlowLp build_flow_lp(const Scenario& s, int first, int periods,
                     const TierAssignment& assignment, const FlowBoundary& boundary,
                     const FlowOptions& options = {});

} // namespace hemopt

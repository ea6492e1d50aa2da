#pragma once

#include "hemopt/flow_lp.hpp"

#include <span>
#include <vector>

namespace hemopt {

struct SolveStats {
    int nodes_explored = 0;
    int lps_solved = 0;
    double wall_seconds = 0.0;
    bool exact = true;      // false when a time budget cut the search short
    double bound_gap = 0.0; // incumbent minus best open bound when not exact
};

struct ObjectiveBreakdown {
    double energy = 0.0;
    double peak = 0.0;
    double total = 0.0;
};

struct PlanResult {
    std::vector<double> p, c, d;
    std::vector<double> q; // periods + 1 states
    TierAssignment assignment;
    ObjectiveBreakdown objective;
    SolveStats stats;
};

struct PrescientOptions {
    double time_budget_seconds = 0.0; // 0 disables the budget
    int surrogate_n = 0;              // 0 uses the schedule's top-day count
};

// Globally optimal plan over tier assignments x continuous flows,
// by best-first branch-and-bound on per-month tiers.
PlanResult solve_prescient(const Scenario& s, const PrescientOptions& options = {});

// Brute-force oracle: minimum over every tier assignment.
PlanResult enumerate_exact(const Scenario& s, long long cap = 10000);

struct CapacityPoint {
    double capacity_kwh = 0.0;
    double total_nok = 0.0;
    double savings_pct = 0.0;
};

// Prescient solve per capacity with q_init = q_final = Q/2; savings are
// measured against the no-storage cost of the same scenario.
std::vector<CapacityPoint> sweep_capacity(const Scenario& s, std::span<const double> capacities,
                                          const PrescientOptions& options = {});

} // namespace hemopt

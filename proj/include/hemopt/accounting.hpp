#pragma once

#include "hemopt/scenario.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hemopt {

struct MonthCost {
    std::string month;
    double tou = 0.0;
    double da = 0.0;
    double peak = 0.0;
    double z = 0.0;
    int tier = 0;
};

struct CostTotals {
    double tou = 0.0;
    double da = 0.0;
    double peak = 0.0;
    double total = 0.0;
};

struct CostReport {
    std::vector<MonthCost> months;
    CostTotals totals;
    std::optional<CostTotals> reference;
    std::optional<double> savings_nok;
    std::optional<double> savings_pct;
};

// Energy charge of a power trajectory, split into its two price components.
std::pair<double, double> energy_cost(std::span<const double> p, const PriceSeries& prices,
                                      double h);

// Full cost of a trajectory: energy charges plus the tiered monthly peak
// charge evaluated with the schedule's true top-day count.
CostReport evaluate(std::span<const double> p, const Scenario& s);

// Cost of serving the load directly from the grid.
CostReport baseline_no_storage(const Scenario& s);

// Attach a reference report and derive savings against it.
void set_reference(CostReport& report, const CostReport& reference);

std::string report_to_json(const CostReport& report, int indent = 2);

} // namespace hemopt

#pragma once

#include <span>
#include <vector>

#include "hemopt/domain.hpp"

namespace hemopt {

// Tiered monthly peak-power charge. The monthly metric z is the average of
// the N largest daily-maximum grid powers; the charge is the piecewise
// constant cost[j-1] for the tier j whose interval (T_{j-1}, T_j] contains z
// (T_0 = 0, z = 0 falls in tier 1, boundaries belong to the lower tier).
struct TieredPeakSchedule {
    std::vector<double> costs;        // beta_1..beta_L, NOK, strictly increasing
    std::vector<double> thresholds;   // T_1..T_L, kW, strictly increasing; T_L = max grid power
    int n_days = 3;                   // N

    int num_tiers() const { return static_cast<int>(costs.size()); }
    double top() const { return thresholds.back(); }

    // Throws ValidationError on broken monotonicity / sizes.
    void check() const;
};

// Builds a schedule from the L costs and the L-1 interior thresholds,
// completing the top threshold with the maximum grid power.
TieredPeakSchedule make_peak_schedule(std::vector<double> costs,
                                      std::vector<double> interior_thresholds,
                                      double max_power_kw, int n_days);

struct MonthlyPeakSummary {
    int month = 0;                    // 0-based grid month index
    std::vector<double> daily_max;    // m_k
    double z = 0.0;                   // z_k
    int tier = 0;                     // 1..L
    double charge = 0.0;              // NOK
};

// Sum of the N largest entries (with multiplicity). 1 <= n <= u.size().
double sum_largest(std::span<const double> u, int n);

// One entry per day of month `month`: the maximum of that day's powers.
std::vector<double> daily_max_vector(std::span<const double> p, const TimeGrid& grid, int month);

// psi(m, N')/N' with N' = min(N, m.size()): months (or horizon slices) with
// fewer than N days use the number of days they have.
double monthly_peak_metric(std::span<const double> m, int n_days);

// 1-based tier index of z. Requires 0 <= z <= top threshold.
int tier_of(double z, const TieredPeakSchedule& sched);

double peak_cost(double z, const TieredPeakSchedule& sched);

std::vector<MonthlyPeakSummary> summarize_months(std::span<const double> p, const TimeGrid& grid,
                                                 const TieredPeakSchedule& sched);

} // namespace hemopt

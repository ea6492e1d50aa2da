#include "hemopt/peak_tariff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hemopt {

void TieredPeakSchedule::check() const {
    if (costs.empty() || thresholds.size() != costs.size())
        throw ValidationError("peak schedule needs L costs and L thresholds (top = max grid power)");
    if (n_days < 1) throw ValidationError("peak schedule N must be >= 1");
    double prev = 0.0;
    for (double b : costs) {
        if (!(b > prev) || !std::isfinite(b))
            throw ValidationError("peak tier costs must be positive and strictly increasing");
        prev = b;
    }
    prev = 0.0;
    for (double T : thresholds) {
        if (!(T > prev) || !std::isfinite(T))
            throw ValidationError("peak tier thresholds must be positive and strictly increasing");
        prev = T;
    }
}

TieredPeakSchedule make_peak_schedule(std::vector<double> costs,
                                      std::vector<double> interior_thresholds,
                                      double max_power_kw, int n_days) {
    if (interior_thresholds.size() + 1 != costs.size())
        throw ValidationError("peak schedule needs one more cost than interior thresholds");
    TieredPeakSchedule s;
    s.costs = std::move(costs);
    s.thresholds = std::move(interior_thresholds);
    s.thresholds.push_back(max_power_kw);
    s.n_days = n_days;
    s.check();
    return s;
}

double sum_largest(std::span<const double> u, int n) {
    if (n < 1 || n > static_cast<int>(u.size())) {
        std::ostringstream os;
        os << "sum_largest: N=" << n << " out of range for vector of size " << u.size();
        throw ValidationError(os.str());
    }
    std::vector<double> v(u.begin(), u.end());
    std::nth_element(v.begin(), v.begin() + (n - 1), v.end(), std::greater<double>());
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += v[i];
    return s;
}

std::vector<double> daily_max_vector(std::span<const double> p, const TimeGrid& grid, int month) {
    if (month < 0 || month >= grid.num_months)
        throw ValidationError("daily_max_vector: month index out of range");
    auto [first, last] = grid.month_period_range(month);
    if (static_cast<int>(p.size()) < last)
        throw ValidationError("daily_max_vector: power series does not cover month " +
                              grid.month_label[month]);
    int days = grid.month_day_count[month];
    if (days == 0) throw ValidationError("daily_max_vector: empty month");
    std::vector<double> m(days, -std::numeric_limits<double>::infinity());
    for (int t = first; t < last; ++t) {
        int d = grid.day_of[t] - grid.month_first_day[month];
        m[d] = std::max(m[d], p[t]);
    }
    return m;
}

double monthly_peak_metric(std::span<const double> m, int n_days) {
    if (m.empty()) throw ValidationError("monthly_peak_metric: empty daily-max vector");
    int n = std::min<int>(n_days, static_cast<int>(m.size()));
    return sum_largest(m, n) / n;
}

int tier_of(double z, const TieredPeakSchedule& sched) {
    if (z < 0.0 || z > sched.top()) {
        std::ostringstream os;
        os << "peak metric z=" << z << " outside [0, " << sched.top() << "]";
        throw ValidationError(os.str());
    }
    // Boundaries belong to the lower tier: tier j covers (T_{j-1}, T_j].
    for (int j = 0; j < sched.num_tiers(); ++j)
        if (z <= sched.thresholds[j]) return j + 1;
    return sched.num_tiers(); // z == top, unreachable past the loop
}

double peak_cost(double z, const TieredPeakSchedule& sched) {
    return sched.costs[tier_of(z, sched) - 1];
}

std::vector<MonthlyPeakSummary> summarize_months(std::span<const double> p, const TimeGrid& grid,
                                                 const TieredPeakSchedule& sched) {
    if (static_cast<int>(p.size()) != grid.periods)
        throw ValidationError("summarize_months: power series must cover the whole grid");
    std::vector<MonthlyPeakSummary> out;
    out.reserve(grid.num_months);
    for (int k = 0; k < grid.num_months; ++k) {
        MonthlyPeakSummary s;
        s.month = k;
        s.daily_max = daily_max_vector(p, grid, k);
        s.z = monthly_peak_metric(s.daily_max, sched.n_days);
        s.tier = tier_of(s.z, sched);
        s.charge = sched.costs[s.tier - 1];
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace hemopt

#include "hemopt/accounting.hpp"

#include "hemopt/errors.hpp"
#include "hemopt/peak_tariff.hpp"

#include <json.hpp>

#include <cmath>

namespace hemopt {

std::pair<double, double> energy_cost(std::span<const double> p, const PriceSeries& prices,
                                      double h) {
    if (p.size() != prices.tou.size() || p.size() != prices.da.size())
        throw ValidationError("energy_cost: series lengths differ");
    double tou = 0.0, da = 0.0;
    for (size_t t = 0; t < p.size(); ++t) {
        tou += h * prices.tou[t] * p[t];
        da += h * prices.da[t] * p[t];
    }
    return {tou, da};
}

CostReport evaluate(std::span<const double> p, const Scenario& s) {
    const auto& g = s.grid;
    if (static_cast<int>(p.size()) != g.periods)
        throw ValidationError("evaluate: trajectory does not cover the horizon");
    constexpr double tol = 1e-6;
    for (int t = 0; t < g.periods; ++t) {
        if (!std::isfinite(p[t]) || p[t] < -tol || p[t] > s.gridp.max_power_kw + tol)
            throw ValidationError("evaluate: power outside [0, P] at period " +
                                  std::to_string(t));
    }

    CostReport r;
    const auto peaks = summarize_months(p, g, s.peak);
    for (int k = 0; k < g.num_months; ++k) {
        MonthCost mc;
        mc.month = g.month_label[k];
        const auto [lo, hi] = g.month_period_range(k);
        std::vector<double> slice(p.begin() + lo, p.begin() + hi);
        PriceSeries ps;
        ps.tou.assign(s.prices.tou.begin() + lo, s.prices.tou.begin() + hi);
        ps.da.assign(s.prices.da.begin() + lo, s.prices.da.begin() + hi);
        std::tie(mc.tou, mc.da) = energy_cost(slice, ps, g.h);
        mc.peak = peaks[k].charge;
        mc.z = peaks[k].z;
        mc.tier = peaks[k].tier;
        r.months.push_back(std::move(mc));
        r.totals.tou += r.months.back().tou;
        r.totals.da += r.months.back().da;
        r.totals.peak += r.months.back().peak;
    }
    r.totals.total = r.totals.tou + r.totals.da + r.totals.peak;
    return r;
}

CostReport baseline_no_storage(const Scenario& s) {
    constexpr double tol = 1e-9;
    for (int t = 0; t < s.grid.periods; ++t) {
        if (s.load[t] < -tol || s.load[t] > s.gridp.max_power_kw + tol)
            throw ValidationError("baseline: load at period " + std::to_string(t) +
                                  " cannot be served without storage");
    }
    return evaluate(s.load, s);
}

void set_reference(CostReport& report, const CostReport& reference) {
    report.reference = reference.totals;
    report.savings_nok = reference.totals.total - report.totals.total;
    report.savings_pct = reference.totals.total != 0.0
                             ? 100.0 * *report.savings_nok / reference.totals.total
                             : 0.0;
}

std::string report_to_json(const CostReport& report, int indent) {
    nlohmann::json j;
    j["months"] = nlohmann::json::array();
    for (const auto& m : report.months) {
        j["months"].push_back({{"month", m.month},
                               {"tou", m.tou},
                               {"da", m.da},
                               {"peak", m.peak},
                               {"z", m.z},
                               {"tier", m.tier}});
    }
    j["totals"] = {{"tou", report.totals.tou},
                   {"da", report.totals.da},
                   {"peak", report.totals.peak},
                   {"total", report.totals.total}};
    if (report.reference) {
        j["reference"] = {{"tou", report.reference->tou},
                          {"da", report.reference->da},
                          {"peak", report.reference->peak},
                          {"total", report.reference->total}};
    }
    if (report.savings_nok) {
        j["savings"] = {{"nok", *report.savings_nok}, {"percent", *report.savings_pct}};
    }
    return j.dump(indent);
}

} // namespace hemopt

#include "hemopt/scenario.hpp"

#include <cmath>
#include <sstream>

namespace hemopt {

namespace {

void check_series(const std::vector<double>& v, int periods, const char* what,
                  std::vector<Violation>& out) {
    if (static_cast<int>(v.size()) != periods) {
        std::ostringstream os;
        os << what << " has " << v.size() << " entries, grid has " << periods << " periods";
        out.push_back({-1, os.str()});
        return;
    }
    for (int t = 0; t < periods; ++t) {
        if (!std::isfinite(v[t])) {
            std::ostringstream os;
            os << what << " is not finite at period " << t;
            out.push_back({t, os.str()});
        }
    }
}

} // namespace

std::vector<Violation> validate_scenario(const Scenario& s) {
    std::vector<Violation> out;
    const auto& st = s.storage;
    const double P = s.gridp.max_power_kw;

    if (s.grid.periods < 1) out.push_back({-1, "grid has no periods"});
    if (!(P > 0)) out.push_back({-1, "max grid power P must be positive"});
    if (st.capacity_kwh < 0) out.push_back({-1, "storage capacity Q must be nonnegative"});
    if (st.max_charge_kw < 0 || st.max_discharge_kw < 0)
        out.push_back({-1, "charge/discharge limits must be nonnegative"});
    for (double eta : {st.eta_storage, st.eta_charge, st.eta_discharge})
        if (!(eta > 0.0) || eta > 1.0)
            out.push_back({-1, "efficiencies must lie in (0, 1]"});
    if (st.initial_kwh < 0 || st.initial_kwh > st.capacity_kwh)
        out.push_back({-1, "initial charge outside [0, Q]"});
    if (st.final_kwh < 0 || st.final_kwh > st.capacity_kwh)
        out.push_back({-1, "final charge outside [0, Q]"});

    try {
        s.peak.check();
        if (std::abs(s.peak.top() - P) > 1e-9)
            out.push_back({-1, "top peak threshold must equal max grid power"});
    } catch (const ValidationError& e) {
        out.push_back({-1, e.what()});
    }

    check_series(s.load, s.grid.periods, "load", out);
    check_series(s.prices.tou, s.grid.periods, "tou prices", out);
    check_series(s.prices.da, s.grid.periods, "day-ahead prices", out);

    if (static_cast<int>(s.load.size()) == s.grid.periods) {
        for (int t = 0; t < s.grid.periods; ++t) {
            if (!std::isfinite(s.load[t])) continue;
            if (s.load[t] < -st.max_charge_kw) {
                std::ostringstream os;
                os << "load " << s.load[t] << " below -C=" << -st.max_charge_kw << " at period "
                   << t << " (surplus cannot be absorbed; grid export is not possible)";
                out.push_back({t, os.str()});
            }
            if (s.load[t] > P + st.max_discharge_kw) {
                std::ostringstream os;
                os << "load " << s.load[t] << " above P+D=" << P + st.max_discharge_kw
                   << " at period " << t;
                out.push_back({t, os.str()});
            }
        }
    }
    return out;
}

void require_valid(const Scenario& s) {
    auto v = validate_scenario(s);
    if (v.empty()) return;
    std::ostringstream os;
    os << "scenario validation failed (" << v.size() << " violation(s)):";
    int shown = 0;
    for (const auto& viol : v) {
        os << "\n  - " << viol.message;
        if (++shown == 5) {
            if (v.size() > 5) os << "\n  ... and " << v.size() - 5 << " more";
            break;
        }
    }
    throw ValidationError(os.str());
}

} // namespace hemopt

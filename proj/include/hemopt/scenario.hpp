#pragma once

#include <string>
#include <vector>

#include "hemopt/domain.hpp"
#include "hemopt/peak_tariff.hpp"

namespace hemopt {

// Immutable problem instance: who consumes what, at which prices, with which
// battery, under which tariff. All solvers read it concurrently.
struct Scenario {
    TimeGrid grid;
    std::vector<double> load;   // net load kW per period; may be negative (PV)
    PriceSeries prices;
    StorageParams storage;
    GridParams gridp;
    TieredPeakSchedule peak;
};

struct Violation {
    int period;                 // -1 for scenario-level problems
    std::string message;
};

// Full scan; never aborts early. Empty result means every type invariant
// holds plus per-period flow feasibility (-C <= l_t <= P + D; exporting to
// the grid is not possible, so loads below -C cannot be served).
std::vector<Violation> validate_scenario(const Scenario& s);

// Throws ValidationError listing the first violations.
void require_valid(const Scenario& s);

} // namespace hemopt

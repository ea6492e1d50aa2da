#pragma once

#include "hemopt/mpc.hpp"
#include "hemopt/prescient.hpp"
#include "hemopt/scenario.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hemopt {

// Hourly series read from a `timestamp,value` CSV.
struct TimedSeries {
    CivilHour start = 0;
    std::vector<double> values;
};

// Strict reader: ISO timestamps, gap-free hourly cadence, finite values.
// Violations are collected and reported together, by row number.
TimedSeries load_series_csv(const std::string& path);

// Everything a batch run needs. The defaults are the running-example house:
// a 20 kW connection, a 40 kWh battery charged to half at both ends, the
// five-tier peak schedule, and hourly day-ahead prices published at 13:00.
struct RunConfig {
    std::string load_csv;  // hourly net load, kW
    std::string price_csv; // hourly day-ahead price, NOK/kWh
    std::string scenario;  // self-contained scenario JSON; overrides the CSVs
    GridParams gridp{20.0};
    StorageParams storage{40.0, 20.0, 20.0, 0.99998, 0.95, 0.95, 20.0, 20.0};
    std::vector<double> tier_costs{83.0, 147.0, 252.0, 371.0, 490.0};
    std::vector<double> tier_thresholds{2.0, 5.0, 10.0, 15.0}; // interior; top is P
    int peak_n_days = 3;
    TouSchedule tou; // see default_config()
    int da_announcement_hour = 13;
    MpcOptions mpc;
    double forecast_quantile = 0.5;
    double forecast_lambda = 1.0;
    std::string load_model;  // fitted model files for `mpc --forecast fitted`
    std::string price_model;
    std::string output_dir = ".";
    std::uint64_t seed = 0;
};

RunConfig default_config();
RunConfig parse_config(const std::string& json_text); // unknown keys rejected
RunConfig read_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg, int indent = 2);

// Assembles the scenario a config describes: either the referenced scenario
// file, or the two CSVs on a calendar grid with the configured tariffs.
Scenario scenario_from_config(const RunConfig& cfg);

std::string scenario_to_json(const Scenario& s, int indent = 2);
Scenario scenario_from_json(const std::string& text);
Scenario read_scenario(const std::string& path);
void write_scenario(const std::string& path, const Scenario& s);

// Seeded generator of small feasible instances for oracle testing.
Scenario make_synthetic_scenario(std::uint64_t seed, int months, int days_per_month,
                                 int day_length);

// One row per period: executed flows, end-of-period charge, prices, and (for
// receding-horizon runs) the planned tier pair. Pass empty tier spans to
// leave those columns blank. Values are written with round-trip precision.
void write_trace_csv(const std::string& path, const Scenario& s, std::span<const double> p,
                     std::span<const double> c, std::span<const double> d,
                     std::span<const double> q, std::span<const int> tier_cur = {},
                     std::span<const int> tier_next = {});

struct TraceTable {
    std::vector<std::string> timestamps;
    std::vector<double> p, c, d, q, tou, da;
    std::vector<int> tier_cur, tier_next; // empty when the columns are blank
};

TraceTable read_trace_csv(const std::string& path);

void write_sweep_csv(const std::string& path, std::span<const CapacityPoint> points);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

} // namespace hemopt

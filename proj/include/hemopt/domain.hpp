#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hemopt/errors.hpp"

namespace hemopt {

// Naive local civil time at hourly resolution, stored as hours since
// 1970-01-01T00:00. No time zones, no DST: every day has exactly 24 hours.
using CivilHour = std::int64_t;

CivilHour parse_civil_hour(const std::string& iso);   // "2022-01-31T13:00" (or ' ' separator)
std::string format_civil_hour(CivilHour hour);        // -> "2022-01-31T13:00"
void civil_hour_fields(CivilHour hour, int& year, int& month, int& day, int& hour_of_day);

// Hourly calendar for a scheduling horizon. Periods are indexed t = 0..periods-1,
// grouped into days (contiguous runs of day_length periods) and months
// (contiguous runs of whole days). Calendar grids follow the civil calendar;
// synthetic grids use a uniform month structure for desk-scale testing.
struct TimeGrid {
    CivilHour start_hour = 0;
    int periods = 0;        // T-1 in the scheduling problem (q has periods+1 entries)
    double h = 1.0;         // period length in hours
    int day_length = 24;    // periods per day
    bool synthetic = false;

    int num_days = 0;
    int num_months = 0;     // K

    std::vector<int> month_of;          // per period, 0-based
    std::vector<int> day_of;            // per period, 0-based global day index
    std::vector<int> month_first_day;   // per month
    std::vector<int> month_day_count;   // per month
    std::vector<std::string> month_label; // "2022-01" or "m1"

    int hour_of_day(int t) const { return t % day_length; }
    int day_first_period(int day) const { return day * day_length; }
    CivilHour hour_at(int t) const { return start_hour + static_cast<CivilHour>(t); }

    // [first, last) period range of a month.
    std::pair<int, int> month_period_range(int month) const;
};

enum class MonthRule { whole_months, relaxed };

// Calendar grid. Requires start at midnight, day_length == 24, h == 1, and a
// whole number of days; whole_months additionally requires the horizon to
// start and end on calendar month boundaries.
TimeGrid build_time_grid(CivilHour start, int periods, double h, int day_length,
                         MonthRule rule = MonthRule::whole_months);

// Uniform synthetic grid of `months` months, each `days_per_month` days of
// `day_length` periods.
TimeGrid build_synthetic_grid(int months, int days_per_month, int day_length, double h = 1.0);

struct StorageParams {
    double capacity_kwh = 0.0;      // Q
    double max_charge_kw = 0.0;     // C
    double max_discharge_kw = 0.0;  // D
    double eta_storage = 1.0;       // per-period storing efficiency
    double eta_charge = 1.0;
    double eta_discharge = 1.0;
    double initial_kwh = 0.0;       // q at the start of period 0
    double final_kwh = 0.0;         // q required after the last period
};

struct GridParams {
    double max_power_kw = 0.0;      // P
};

struct PriceSeries {
    std::vector<double> tou;        // NOK/kWh per period
    std::vector<double> da;         // NOK/kWh per period
    int da_announcement_hour = 13;  // hour-of-day at which next-day prices publish
};

// One time-of-use rate window: months [month_from, month_to] (1-based,
// inclusive) crossed with hours [hour_from, hour_to) of the day; the hour
// window may wrap past midnight (e.g. 22 -> 6).
struct TouWindow {
    int month_from = 1;
    int month_to = 12;
    int hour_from = 0;
    int hour_to = 24;
    double rate = 0.0;
};

struct TouSchedule {
    std::vector<TouWindow> windows;

    // Throws ValidationError unless the windows cover every (month, hour)
    // pair exactly once.
    void check_partition() const;
    double rate_at(int month, int hour_of_day) const;
    std::vector<double> generate(const TimeGrid& grid) const;
};

// Exact storage charge update: q+ = eta_s*q + h*(eta_c*c - d/eta_d).
// No clipping; keeping q within [0, Q] is the solvers' job.
double step_storage(double q, double c, double d, const StorageParams& storage, double h);

} // namespace hemopt

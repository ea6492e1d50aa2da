#include "hemopt/domain.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hemopt {

namespace {

constexpr std::int64_t kHoursPerDay = 24;

std::chrono::year_month_day ymd_of_day(std::int64_t day_index) {
    using namespace std::chrono;
    return year_month_day{sys_days{days{day_index}}};
}

} // namespace

CivilHour parse_civil_hour(const std::string& iso) {
    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    char sep = 0;
    int n = std::sscanf(iso.c_str(), "%d-%d-%d%c%d:%d:%d", &year, &month, &day, &sep, &hour,
                        &minute, &second);
    if (n < 5 || (sep != 'T' && sep != ' '))
        throw ValidationError("cannot parse timestamp '" + iso + "' (expected YYYY-MM-DDTHH:MM)");
    if (minute != 0 || second != 0)
        throw ValidationError("timestamp '" + iso + "' is not on an hour boundary");
    using namespace std::chrono;
    year_month_day ymd{std::chrono::year{year}, std::chrono::month{unsigned(month)},
                       std::chrono::day{unsigned(day)}};
    if (!ymd.ok() || hour < 0 || hour > 23)
        throw ValidationError("timestamp '" + iso + "' is not a valid civil time");
    auto d = sys_days{ymd}.time_since_epoch().count();
    return static_cast<CivilHour>(d) * kHoursPerDay + hour;
}

std::string format_civil_hour(CivilHour hour) {
    std::int64_t day = hour >= 0 ? hour / kHoursPerDay : (hour - (kHoursPerDay - 1)) / kHoursPerDay;
    int hod = static_cast<int>(hour - day * kHoursPerDay);
    auto ymd = ymd_of_day(day);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()), hod);
    return buf;
}

void civil_hour_fields(CivilHour hour, int& year, int& month, int& day, int& hour_of_day) {
    std::int64_t d = hour >= 0 ? hour / kHoursPerDay : (hour - (kHoursPerDay - 1)) / kHoursPerDay;
    hour_of_day = static_cast<int>(hour - d * kHoursPerDay);
    auto ymd = ymd_of_day(d);
    year = int(ymd.year());
    month = int(unsigned(ymd.month()));
    day = int(unsigned(ymd.day()));
}

std::pair<int, int> TimeGrid::month_period_range(int month) const {
    int first_day = month_first_day.at(month);
    int first = first_day * day_length;
    int last = (first_day + month_day_count.at(month)) * day_length;
    return {first, last};
}

TimeGrid build_time_grid(CivilHour start, int periods, double h, int day_length, MonthRule rule) {
    if (periods < 1) throw ValidationError("time grid needs at least one period");
    if (day_length != 24 || h != 1.0)
        throw ValidationError("calendar grids are hourly with 24-hour days; "
                              "use a synthetic grid for other shapes");
    if (start % kHoursPerDay != 0)
        throw ValidationError("calendar grid must start at midnight, got " +
                              format_civil_hour(start));
    if (periods % day_length != 0)
        throw ValidationError("horizon must cover whole days (periods % 24 != 0)");

    TimeGrid g;
    g.start_hour = start;
    g.periods = periods;
    g.h = h;
    g.day_length = day_length;
    g.synthetic = false;
    g.num_days = periods / day_length;

    std::int64_t first_day = start / kHoursPerDay;
    int prev_year = 0, prev_month = 0;
    for (int d = 0; d < g.num_days; ++d) {
        auto ymd = ymd_of_day(first_day + d);
        int y = int(ymd.year()), m = int(unsigned(ymd.month()));
        if (d == 0 || y != prev_year || m != prev_month) {
            g.month_first_day.push_back(d);
            char buf[16];
            std::snprintf(buf, sizeof buf, "%04d-%02d", y, m);
            g.month_label.push_back(buf);
            prev_year = y;
            prev_month = m;
        }
    }
    g.num_months = static_cast<int>(g.month_first_day.size());
    g.month_day_count.resize(g.num_months);
    for (int k = 0; k < g.num_months; ++k) {
        int next = (k + 1 < g.num_months) ? g.month_first_day[k + 1] : g.num_days;
        g.month_day_count[k] = next - g.month_first_day[k];
    }

    if (rule == MonthRule::whole_months) {
        auto first_ymd = ymd_of_day(first_day);
        if (unsigned(first_ymd.day()) != 1)
            throw ValidationError("horizon must start on the first day of a month (got " +
                                  format_civil_hour(start) + ")");
        auto past_end = ymd_of_day(first_day + g.num_days);
        if (unsigned(past_end.day()) != 1)
            throw ValidationError("horizon must span whole months; it ends mid-month");
    }

    g.month_of.resize(periods);
    g.day_of.resize(periods);
    for (int t = 0; t < periods; ++t) g.day_of[t] = t / day_length;
    for (int k = 0; k < g.num_months; ++k) {
        auto [first, last] = g.month_period_range(k);
        for (int t = first; t < last; ++t) g.month_of[t] = k;
    }
    return g;
}

TimeGrid build_synthetic_grid(int months, int days_per_month, int day_length, double h) {
    if (months < 1 || days_per_month < 1 || day_length < 1)
        throw ValidationError("synthetic grid needs months, days and day length >= 1");
    if (h <= 0) throw ValidationError("period length must be positive");
    TimeGrid g;
    g.start_hour = 0;
    g.h = h;
    g.day_length = day_length;
    g.synthetic = true;
    g.num_months = months;
    g.num_days = months * days_per_month;
    g.periods = g.num_days * day_length;
    g.month_of.resize(g.periods);
    g.day_of.resize(g.periods);
    for (int t = 0; t < g.periods; ++t) {
        g.day_of[t] = t / day_length;
        g.month_of[t] = g.day_of[t] / days_per_month;
    }
    for (int k = 0; k < months; ++k) {
        g.month_first_day.push_back(k * days_per_month);
        g.month_day_count.push_back(days_per_month);
        g.month_label.push_back("m" + std::to_string(k + 1));
    }
    return g;
}

void TouSchedule::check_partition() const {
    for (const auto& w : windows) {
        if (w.month_from < 1 || w.month_to > 12 || w.month_from > w.month_to)
            throw ValidationError("TOU window has bad month range");
        if (w.hour_from < 0 || w.hour_from > 23 || w.hour_to < 1 || w.hour_to > 24)
            throw ValidationError("TOU window has bad hour range");
        if (!std::isfinite(w.rate)) throw ValidationError("TOU rate must be finite");
    }
    for (int m = 1; m <= 12; ++m) {
        for (int hr = 0; hr < 24; ++hr) {
            int cover = 0;
            for (const auto& w : windows) {
                if (m < w.month_from || m > w.month_to) continue;
                bool in_hours = w.hour_from < w.hour_to ? (hr >= w.hour_from && hr < w.hour_to)
                                                        : (hr >= w.hour_from || hr < w.hour_to);
                if (in_hours) ++cover;
            }
            if (cover != 1) {
                std::ostringstream os;
                os << "TOU windows cover month " << m << " hour " << hr << " " << cover
                   << " times (want exactly once)";
                throw ValidationError(os.str());
            }
        }
    }
}

double TouSchedule::rate_at(int month, int hour_of_day) const {
    for (const auto& w : windows) {
        if (month < w.month_from || month > w.month_to) continue;
        bool in_hours = w.hour_from < w.hour_to
                            ? (hour_of_day >= w.hour_from && hour_of_day < w.hour_to)
                            : (hour_of_day >= w.hour_from || hour_of_day < w.hour_to);
        if (in_hours) return w.rate;
    }
    throw ValidationError("TOU schedule does not cover month " + std::to_string(month) +
                          " hour " + std::to_string(hour_of_day));
}

std::vector<double> TouSchedule::generate(const TimeGrid& grid) const {
    if (grid.synthetic)
        throw ValidationError("TOU schedules apply to calendar grids; synthetic scenarios "
                              "supply an explicit tou series");
    check_partition();
    std::vector<double> out(grid.periods);
    for (int t = 0; t < grid.periods; ++t) {
        int y, mo, dd, hod;
        civil_hour_fields(grid.hour_at(t), y, mo, dd, hod);
        out[t] = rate_at(mo, hod);
    }
    return out;
}

double step_storage(double q, double c, double d, const StorageParams& storage, double h) {
    return storage.eta_storage * q + h * (storage.eta_charge * c - d / storage.eta_discharge);
}

} // namespace hemopt

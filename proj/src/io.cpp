#include "hemopt/io.hpp"

#include "hemopt/errors.hpp"
#include "hemopt/peak_tariff.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace hemopt {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Trailing carriage returns from CRLF files are not data.
void chomp(std::string& line) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
}

} // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path + " for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw ValidationError("write to " + path + " failed");
}

TimedSeries load_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path + " for reading");

    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
    chomp(line);
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (line != "timestamp,value")
        throw ValidationError(path + ": header must be 'timestamp,value', got '" + line + "'");

    TimedSeries out;
    std::vector<std::string> problems;
    auto complain = [&](int row, const std::string& what) {
        if (problems.size() < 8)
            problems.push_back(path + ":" + std::to_string(row) + ": " + what);
        else if (problems.size() == 8)
            problems.push_back("...");
    };

    CivilHour prev = 0;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        chomp(line);
        if (line.empty()) {
            complain(row, "blank line");
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            complain(row, "expected 'timestamp,value', got '" + line + "'");
            continue;
        }
        CivilHour ts;
        try {
            ts = parse_civil_hour(line.substr(0, comma));
        } catch (const ValidationError& e) {
            complain(row, e.what());
            continue;
        }
        double v;
        try {
            size_t used = 0;
            const std::string field = line.substr(comma + 1);
            v = std::stod(field, &used);
            if (used != field.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            complain(row, "bad value '" + line.substr(comma + 1) + "'");
            continue;
        }
        if (!std::isfinite(v)) {
            complain(row, "value is not finite");
            continue;
        }
        if (!out.values.empty()) {
            if (ts == prev)
                complain(row, "duplicate hour " + format_civil_hour(ts));
            else if (ts != prev + 1)
                complain(row, "cadence break: " + format_civil_hour(prev) + " is followed by " +
                                  format_civil_hour(ts) + ", expected " +
                                  format_civil_hour(prev + 1));
        } else {
            out.start = ts;
        }
        prev = ts;
        out.values.push_back(v);
    }
    if (out.values.empty() && problems.empty())
        throw ValidationError(path + ": no data rows");
    if (!problems.empty()) {
        std::string msg = path + ": " + std::to_string(problems.size() > 8 ? 8 : problems.size()) +
                          "+ malformed row(s):";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ValidationError(msg);
    }
    return out;
}

RunConfig default_config() {
    RunConfig cfg;
    // Rate structure of the running example: day (6:00-22:00) and night
    // windows, with a January-March season priced above the rest of the
    // year. The numeric rates are placeholders; real runs supply their own.
    cfg.tou.windows = {
        {1, 3, 6, 22, 0.50},
        {1, 3, 22, 6, 0.40},
        {4, 12, 6, 22, 0.40},
        {4, 12, 22, 6, 0.32},
    };
    return cfg;
}

namespace {

void expect_keys(const json& j, const std::string& where,
                 std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw ValidationError("config: unknown key '" + item.key() + "' in " + where);
    }
}

template <typename T>
void take(const json& j, const char* key, T& into) {
    if (!j.contains(key)) return;
    try {
        into = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

} // namespace

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config: top level must be an object");
    expect_keys(j, "top level",
                {"load_csv", "price_csv", "scenario", "grid", "storage", "peak_tariff",
                 "tou_windows", "da_announcement_hour", "mpc", "forecast", "output_dir",
                 "seed"});

    RunConfig cfg = default_config();
    take(j, "load_csv", cfg.load_csv);
    take(j, "price_csv", cfg.price_csv);
    take(j, "scenario", cfg.scenario);
    take(j, "output_dir", cfg.output_dir);
    take(j, "seed", cfg.seed);
    take(j, "da_announcement_hour", cfg.da_announcement_hour);

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        expect_keys(g, "grid", {"max_power_kw"});
        take(g, "max_power_kw", cfg.gridp.max_power_kw);
    }
    if (j.contains("storage")) {
        const auto& s = j.at("storage");
        expect_keys(s, "storage",
                    {"capacity_kwh", "max_charge_kw", "max_discharge_kw", "eta_storage",
                     "eta_charge", "eta_discharge", "initial_kwh", "final_kwh"});
        take(s, "capacity_kwh", cfg.storage.capacity_kwh);
        take(s, "max_charge_kw", cfg.storage.max_charge_kw);
        take(s, "max_discharge_kw", cfg.storage.max_discharge_kw);
        take(s, "eta_storage", cfg.storage.eta_storage);
        take(s, "eta_charge", cfg.storage.eta_charge);
        take(s, "eta_discharge", cfg.storage.eta_discharge);
        take(s, "initial_kwh", cfg.storage.initial_kwh);
        take(s, "final_kwh", cfg.storage.final_kwh);
    }
    if (j.contains("peak_tariff")) {
        const auto& p = j.at("peak_tariff");
        expect_keys(p, "peak_tariff", {"costs", "interior_thresholds", "n_days"});
        take(p, "costs", cfg.tier_costs);
        take(p, "interior_thresholds", cfg.tier_thresholds);
        take(p, "n_days", cfg.peak_n_days);
    }
    if (j.contains("tou_windows")) {
        const auto& tw = j.at("tou_windows");
        if (!tw.is_array()) throw ValidationError("config: tou_windows must be an array");
        cfg.tou.windows.clear();
        for (const auto& w : tw) {
            expect_keys(w, "tou_windows[]",
                        {"month_from", "month_to", "hour_from", "hour_to", "rate"});
            TouWindow win;
            take(w, "month_from", win.month_from);
            take(w, "month_to", win.month_to);
            take(w, "hour_from", win.hour_from);
            take(w, "hour_to", win.hour_to);
            take(w, "rate", win.rate);
            cfg.tou.windows.push_back(win);
        }
    }
    if (j.contains("mpc")) {
        const auto& m = j.at("mpc");
        expect_keys(m, "mpc",
                    {"horizon", "surrogate_n", "terminal", "enforce_final_at_data_end",
                     "threads"});
        take(m, "horizon", cfg.mpc.horizon);
        take(m, "surrogate_n", cfg.mpc.surrogate_n);
        take(m, "enforce_final_at_data_end", cfg.mpc.enforce_final_at_data_end);
        take(m, "threads", cfg.mpc.threads);
        if (m.contains("terminal")) {
            std::string term;
            take(m, "terminal", term);
            if (term == "plan_to_initial")
                cfg.mpc.terminal = TerminalRule::plan_to_initial;
            else if (term == "free_end")
                cfg.mpc.terminal = TerminalRule::free_end;
            else
                throw ValidationError("config: mpc.terminal must be 'plan_to_initial' or "
                                      "'free_end', got '" +
                                      term + "'");
        }
    }
    if (j.contains("forecast")) {
        const auto& f = j.at("forecast");
        expect_keys(f, "forecast", {"quantile", "lambda", "load_model", "price_model"});
        take(f, "quantile", cfg.forecast_quantile);
        take(f, "lambda", cfg.forecast_lambda);
        take(f, "load_model", cfg.load_model);
        take(f, "price_model", cfg.price_model);
    }
    return cfg;
}

RunConfig read_config(const std::string& path) {
    try {
        return parse_config(read_text_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

std::string config_to_json(const RunConfig& cfg, int indent) {
    json j;
    if (!cfg.load_csv.empty()) j["load_csv"] = cfg.load_csv;
    if (!cfg.price_csv.empty()) j["price_csv"] = cfg.price_csv;
    if (!cfg.scenario.empty()) j["scenario"] = cfg.scenario;
    j["grid"] = {{"max_power_kw", cfg.gridp.max_power_kw}};
    j["storage"] = {{"capacity_kwh", cfg.storage.capacity_kwh},
                    {"max_charge_kw", cfg.storage.max_charge_kw},
                    {"max_discharge_kw", cfg.storage.max_discharge_kw},
                    {"eta_storage", cfg.storage.eta_storage},
                    {"eta_charge", cfg.storage.eta_charge},
                    {"eta_discharge", cfg.storage.eta_discharge},
                    {"initial_kwh", cfg.storage.initial_kwh},
                    {"final_kwh", cfg.storage.final_kwh}};
    j["peak_tariff"] = {{"costs", cfg.tier_costs},
                        {"interior_thresholds", cfg.tier_thresholds},
                        {"n_days", cfg.peak_n_days}};
    json tw = json::array();
    for (const auto& w : cfg.tou.windows)
        tw.push_back({{"month_from", w.month_from},
                      {"month_to", w.month_to},
                      {"hour_from", w.hour_from},
                      {"hour_to", w.hour_to},
                      {"rate", w.rate}});
    j["tou_windows"] = tw;
    j["da_announcement_hour"] = cfg.da_announcement_hour;
    j["mpc"] = {{"horizon", cfg.mpc.horizon},
                {"surrogate_n", cfg.mpc.surrogate_n},
                {"terminal", cfg.mpc.terminal == TerminalRule::plan_to_initial
                                 ? "plan_to_initial"
                                 : "free_end"},
                {"enforce_final_at_data_end", cfg.mpc.enforce_final_at_data_end},
                {"threads", cfg.mpc.threads}};
    json fc = {{"quantile", cfg.forecast_quantile}, {"lambda", cfg.forecast_lambda}};
    if (!cfg.load_model.empty()) fc["load_model"] = cfg.load_model;
    if (!cfg.price_model.empty()) fc["price_model"] = cfg.price_model;
    j["forecast"] = fc;
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    return j.dump(indent) + "\n";
}

Scenario scenario_from_config(const RunConfig& cfg) {
    if (!cfg.scenario.empty()) return read_scenario(cfg.scenario);
    if (cfg.load_csv.empty() || cfg.price_csv.empty())
        throw ValidationError(
            "config: either 'scenario' or both 'load_csv' and 'price_csv' must be set");

    const TimedSeries load = load_series_csv(cfg.load_csv);
    const TimedSeries price = load_series_csv(cfg.price_csv);
    if (load.start != price.start || load.values.size() != price.values.size())
        throw ValidationError("load and price series are misaligned: load covers " +
                              format_civil_hour(load.start) + " x" +
                              std::to_string(load.values.size()) + ", price covers " +
                              format_civil_hour(price.start) + " x" +
                              std::to_string(price.values.size()));

    Scenario s;
    s.grid = build_time_grid(load.start, static_cast<int>(load.values.size()), 1.0, 24);
    s.load = load.values;
    s.prices.da = price.values;
    s.prices.tou = cfg.tou.generate(s.grid);
    s.prices.da_announcement_hour = cfg.da_announcement_hour;
    s.storage = cfg.storage;
    s.gridp = cfg.gridp;
    s.peak = make_peak_schedule(cfg.tier_costs, cfg.tier_thresholds, cfg.gridp.max_power_kw,
                                cfg.peak_n_days);
    require_valid(s);
    return s;
}

std::string scenario_to_json(const Scenario& s, int indent) {
    json j;
    j["version"] = 1;
    if (s.grid.synthetic) {
        j["grid"] = {{"kind", "synthetic"},
                     {"months", s.grid.num_months},
                     {"days_per_month", s.grid.num_days / s.grid.num_months},
                     {"day_length", s.grid.day_length},
                     {"h", s.grid.h}};
    } else {
        j["grid"] = {{"kind", "calendar"},
                     {"start", format_civil_hour(s.grid.start_hour)},
                     {"periods", s.grid.periods}};
    }
    j["load"] = s.load;
    j["tou"] = s.prices.tou;
    j["da"] = s.prices.da;
    j["da_announcement_hour"] = s.prices.da_announcement_hour;
    j["storage"] = {{"capacity_kwh", s.storage.capacity_kwh},
                    {"max_charge_kw", s.storage.max_charge_kw},
                    {"max_discharge_kw", s.storage.max_discharge_kw},
                    {"eta_storage", s.storage.eta_storage},
                    {"eta_charge", s.storage.eta_charge},
                    {"eta_discharge", s.storage.eta_discharge},
                    {"initial_kwh", s.storage.initial_kwh},
                    {"final_kwh", s.storage.final_kwh}};
    j["grid_params"] = {{"max_power_kw", s.gridp.max_power_kw}};
    j["peak_tariff"] = {{"costs", s.peak.costs},
                        {"thresholds", s.peak.thresholds},
                        {"n_days", s.peak.n_days}};
    return j.dump(indent) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("scenario: not valid JSON: ") + e.what());
    }
    try {
        if (j.at("version").get<int>() != 1)
            throw ValidationError("scenario: unsupported version");
        Scenario s;
        const auto& g = j.at("grid");
        const std::string kind = g.at("kind").get<std::string>();
        if (kind == "synthetic") {
            s.grid = build_synthetic_grid(g.at("months").get<int>(),
                                          g.at("days_per_month").get<int>(),
                                          g.at("day_length").get<int>(),
                                          g.value("h", 1.0));
        } else if (kind == "calendar") {
            s.grid = build_time_grid(parse_civil_hour(g.at("start").get<std::string>()),
                                     g.at("periods").get<int>(), 1.0, 24);
        } else {
            throw ValidationError("scenario: grid kind must be 'synthetic' or 'calendar'");
        }
        s.load = j.at("load").get<std::vector<double>>();
        s.prices.tou = j.at("tou").get<std::vector<double>>();
        s.prices.da = j.at("da").get<std::vector<double>>();
        s.prices.da_announcement_hour = j.value("da_announcement_hour", 13);
        const auto& st = j.at("storage");
        s.storage.capacity_kwh = st.at("capacity_kwh").get<double>();
        s.storage.max_charge_kw = st.at("max_charge_kw").get<double>();
        s.storage.max_discharge_kw = st.at("max_discharge_kw").get<double>();
        s.storage.eta_storage = st.at("eta_storage").get<double>();
        s.storage.eta_charge = st.at("eta_charge").get<double>();
        s.storage.eta_discharge = st.at("eta_discharge").get<double>();
        s.storage.initial_kwh = st.at("initial_kwh").get<double>();
        s.storage.final_kwh = st.at("final_kwh").get<double>();
        s.gridp.max_power_kw = j.at("grid_params").at("max_power_kw").get<double>();
        const auto& p = j.at("peak_tariff");
        s.peak.costs = p.at("costs").get<std::vector<double>>();
        s.peak.thresholds = p.at("thresholds").get<std::vector<double>>();
        s.peak.n_days = p.at("n_days").get<int>();
        require_valid(s);
        return s;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("scenario: ") + e.what());
    }
}

Scenario read_scenario(const std::string& path) {
    try {
        return scenario_from_json(read_text_file(path));
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

void write_scenario(const std::string& path, const Scenario& s) {
    write_text_file(path, scenario_to_json(s));
}

Scenario make_synthetic_scenario(std::uint64_t seed, int months, int days_per_month,
                                 int day_length) {
    if (months < 1 || days_per_month < 1 || day_length < 1)
        throw ValidationError("synthetic scenario needs positive months, days, day length");
    Scenario s;
    s.grid = build_synthetic_grid(months, days_per_month, day_length);
    const int n = s.grid.periods;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    // A daily shape with seeded jitter keeps instances distinct but tame.
    s.load.resize(n);
    for (int t = 0; t < n; ++t) {
        const double phase = 2.0 * 3.14159265358979323846 * s.grid.hour_of_day(t) / day_length;
        s.load[t] = 4.0 + 3.0 * std::sin(phase) + 4.0 * u(rng);
    }
    s.prices.tou.resize(n);
    for (int t = 0; t < n; ++t)
        s.prices.tou[t] = s.grid.hour_of_day(t) * 2 >= day_length ? 0.25 : 0.45;
    s.prices.da.resize(n);
    for (int t = 0; t < n; ++t) s.prices.da[t] = 0.2 + 1.6 * u(rng);
    s.prices.da_announcement_hour = std::max(1, day_length / 2);

    s.storage = {6.0, 3.0, 3.0, 1.0, 0.95, 0.95, 3.0, 3.0};
    s.gridp.max_power_kw = 20.0;
    s.peak = make_peak_schedule({10.0, 25.0, 60.0}, {3.0, 7.0}, 20.0, 2);
    require_valid(s);
    return s;
}

void write_trace_csv(const std::string& path, const Scenario& s, std::span<const double> p,
                     std::span<const double> c, std::span<const double> d,
                     std::span<const double> q, std::span<const int> tier_cur,
                     std::span<const int> tier_next) {
    const size_t n = static_cast<size_t>(s.grid.periods);
    if (p.size() != n || c.size() != n || d.size() != n || q.size() != n + 1)
        throw ValidationError("trace: flow series do not match the scenario horizon");
    if ((!tier_cur.empty() && tier_cur.size() != n) ||
        (!tier_next.empty() && tier_next.size() != n))
        throw ValidationError("trace: tier series do not match the scenario horizon");

    std::string out = "timestamp,p_kw,c_kw,d_kw,q_kwh,tou_nok_kwh,da_nok_kwh,tier_cur,tier_next\n";
    for (size_t t = 0; t < n; ++t) {
        out += format_civil_hour(s.grid.hour_at(static_cast<int>(t)));
        out += ',' + fmt(p[t]) + ',' + fmt(c[t]) + ',' + fmt(d[t]) + ',' + fmt(q[t + 1]);
        out += ',' + fmt(s.prices.tou[t]) + ',' + fmt(s.prices.da[t]);
        out += ',';
        if (!tier_cur.empty()) out += std::to_string(tier_cur[t]);
        out += ',';
        if (!tier_next.empty()) out += std::to_string(tier_next[t]);
        out += '\n';
    }
    write_text_file(path, out);
}

TraceTable read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path + " for reading");
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
    chomp(line);
    if (line != "timestamp,p_kw,c_kw,d_kw,q_kwh,tou_nok_kwh,da_nok_kwh,tier_cur,tier_next")
        throw ValidationError(path + ": unexpected trace header '" + line + "'");

    TraceTable tab;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        chomp(line);
        if (line.empty()) continue;
        std::vector<std::string> cells;
        size_t pos = 0;
        while (true) {
            const size_t comma = line.find(',', pos);
            cells.push_back(line.substr(pos, comma == std::string::npos ? comma : comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (cells.size() != 9)
            throw ValidationError(path + ":" + std::to_string(row) + ": expected 9 columns, got " +
                                  std::to_string(cells.size()));
        try {
            tab.timestamps.push_back(cells[0]);
            tab.p.push_back(std::stod(cells[1]));
            tab.c.push_back(std::stod(cells[2]));
            tab.d.push_back(std::stod(cells[3]));
            tab.q.push_back(std::stod(cells[4]));
            tab.tou.push_back(std::stod(cells[5]));
            tab.da.push_back(std::stod(cells[6]));
            if (!cells[7].empty()) tab.tier_cur.push_back(std::stoi(cells[7]));
            if (!cells[8].empty()) tab.tier_next.push_back(std::stoi(cells[8]));
        } catch (const std::exception& e) {
            throw ValidationError(path + ":" + std::to_string(row) + ": " + e.what());
        }
    }
    return tab;
}

void write_sweep_csv(const std::string& path, std::span<const CapacityPoint> points) {
    std::string out = "capacity_kwh,total_nok,savings_pct\n";
    for (const auto& pt : points)
        out += fmt(pt.capacity_kwh) + ',' + fmt(pt.total_nok) + ',' + fmt(pt.savings_pct) + '\n';
    write_text_file(path, out);
}

} // namespace hemopt

#include <doctest.h>

#include "hemopt/accounting.hpp"
#include "hemopt/errors.hpp"
#include "hemopt/io.hpp"

#include <filesystem>
#include <string>
#include <vector>

using namespace hemopt;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    static int counter = 0;
    const fs::path dir =
        fs::temp_directory_path() / ("hemopt_io_" + tag + "_" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string hourly_csv(const std::string& start, int count, double base = 1.0) {
    std::string out = "timestamp,value\n";
    const CivilHour s = parse_civil_hour(start);
    for (int i = 0; i < count; ++i)
        out += format_civil_hour(s + i) + "," + std::to_string(base + 0.25 * (i % 4)) + "\n";
    return out;
}

} // namespace

TEST_CASE("series reader accepts clean hourly files and reports the span") {
    const auto dir = fresh_dir("ok");
    const auto path = (dir / "load.csv").string();
    write_text_file(path, hourly_csv("2022-01-01T00:00", 48));

    const auto ts = load_series_csv(path);
    CHECK(ts.start == parse_civil_hour("2022-01-01T00:00"));
    REQUIRE(ts.values.size() == 48);
    CHECK(ts.values[0] == 1.0);
    CHECK(ts.values[3] == 1.75);

    // Windows line endings are tolerated.
    std::string crlf = "timestamp,value\r\n2022-01-01T00:00,2.5\r\n2022-01-01T01:00,3\r\n";
    write_text_file(path, crlf);
    const auto ts2 = load_series_csv(path);
    REQUIRE(ts2.values.size() == 2);
    CHECK(ts2.values[0] == 2.5);
    fs::remove_all(dir);
}

TEST_CASE("series reader rejects duplicates, gaps, and malformed rows by row number") {
    const auto dir = fresh_dir("bad");
    const auto path = (dir / "bad.csv").string();

    write_text_file(path, "timestamp,value\n2022-01-01T00:00,1\n2022-01-01T00:00,2\n");
    CHECK_THROWS_WITH_AS(load_series_csv(path),
                         doctest::Contains("duplicate hour 2022-01-01T00:00"), ValidationError);

    write_text_file(path, "timestamp,value\n2022-01-01T00:00,1\n2022-01-01T02:00,2\n");
    CHECK_THROWS_WITH_AS(load_series_csv(path), doctest::Contains("cadence break"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(load_series_csv(path), doctest::Contains(":3:"), ValidationError);

    write_text_file(path, "time,value\n");
    CHECK_THROWS_WITH_AS(load_series_csv(path), doctest::Contains("header"), ValidationError);

    write_text_file(path, "timestamp,value\n2022-01-01T00:00,abc\n");
    CHECK_THROWS_WITH_AS(load_series_csv(path), doctest::Contains("bad value"), ValidationError);

    write_text_file(path, "timestamp,value\nnot-a-time,1\n");
    CHECK_THROWS_AS(load_series_csv(path), ValidationError);

    write_text_file(path, "timestamp,value\n");
    CHECK_THROWS_WITH_AS(load_series_csv(path), doctest::Contains("no data rows"),
                         ValidationError);

    CHECK_THROWS_WITH_AS(load_series_csv((dir / "absent.csv").string()),
                         doctest::Contains("cannot open"), ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("three calendar years load as 26304 hours and 36 months") {
    const auto dir = fresh_dir("years");
    const auto path = (dir / "span.csv").string();
    write_text_file(path, hourly_csv("2020-01-01T00:00", 26304));
    const auto ts = load_series_csv(path);
    REQUIRE(ts.values.size() == 26304);
    const auto grid =
        build_time_grid(ts.start, static_cast<int>(ts.values.size()), 1.0, 24);
    CHECK(grid.num_months == 36);
    CHECK(grid.num_days == 1096);
    fs::remove_all(dir);
}

TEST_CASE("config defaults carry the running-example parameters") {
    const auto cfg = default_config();
    CHECK(cfg.gridp.max_power_kw == 20.0);
    CHECK(cfg.storage.capacity_kwh == 40.0);
    CHECK(cfg.storage.max_charge_kw == 20.0);
    CHECK(cfg.storage.max_discharge_kw == 20.0);
    CHECK(cfg.storage.eta_storage == 0.99998);
    CHECK(cfg.storage.eta_charge == 0.95);
    CHECK(cfg.storage.eta_discharge == 0.95);
    CHECK(cfg.storage.initial_kwh == 20.0);
    CHECK(cfg.storage.final_kwh == 20.0);
    CHECK(cfg.tier_costs == std::vector<double>{83.0, 147.0, 252.0, 371.0, 490.0});
    CHECK(cfg.tier_thresholds == std::vector<double>{2.0, 5.0, 10.0, 15.0});
    CHECK(cfg.peak_n_days == 3);
    CHECK(cfg.da_announcement_hour == 13);
    CHECK(cfg.mpc.horizon == 720);
    CHECK(cfg.mpc.surrogate_n == 1);
    CHECK(cfg.tou.windows.size() == 4);
    cfg.tou.check_partition();
}

TEST_CASE("config serialization round-trips and rejects unknown keys") {
    RunConfig cfg = default_config();
    cfg.load_csv = "a.csv";
    cfg.price_csv = "b.csv";
    cfg.mpc.horizon = 96;
    cfg.mpc.terminal = TerminalRule::free_end;
    cfg.forecast_quantile = 0.7;
    cfg.seed = 42;

    const auto text = config_to_json(cfg);
    const auto back = parse_config(text);
    CHECK(back.load_csv == "a.csv");
    CHECK(back.price_csv == "b.csv");
    CHECK(back.mpc.horizon == 96);
    CHECK(back.mpc.terminal == TerminalRule::free_end);
    CHECK(back.forecast_quantile == 0.7);
    CHECK(back.seed == 42);
    CHECK(back.storage.eta_storage == cfg.storage.eta_storage);
    CHECK(back.tou.windows.size() == 4);
    CHECK(back.tou.windows[0].rate == cfg.tou.windows[0].rate);

    CHECK_THROWS_WITH_AS(parse_config(R"({"power": 3})"),
                         doctest::Contains("unknown key 'power'"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"storage": {"Q": 40}})"),
                         doctest::Contains("unknown key 'Q'"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"mpc": {"terminal": "hold"}})"),
                         doctest::Contains("terminal"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"seed": "many"})"), doctest::Contains("seed"),
                         ValidationError);
    CHECK_THROWS_AS(parse_config("not json"), ValidationError);
    CHECK_THROWS_AS(parse_config("[1,2]"), ValidationError);
}

TEST_CASE("synthetic scenarios are seeded, valid, and serialize losslessly") {
    const auto a = make_synthetic_scenario(11, 2, 3, 4);
    const auto b = make_synthetic_scenario(11, 2, 3, 4);
    const auto c = make_synthetic_scenario(12, 2, 3, 4);
    CHECK(a.load == b.load);
    CHECK(a.prices.da == b.prices.da);
    CHECK(a.load != c.load);
    CHECK(a.grid.periods == 2 * 3 * 4);

    const auto text = scenario_to_json(a);
    const auto back = scenario_from_json(text);
    CHECK(back.grid.periods == a.grid.periods);
    CHECK(back.grid.synthetic);
    CHECK(back.load == a.load);
    CHECK(back.prices.tou == a.prices.tou);
    CHECK(back.prices.da == a.prices.da);
    CHECK(back.prices.da_announcement_hour == a.prices.da_announcement_hour);
    CHECK(back.storage.eta_charge == a.storage.eta_charge);
    CHECK(back.peak.costs == a.peak.costs);
    CHECK(back.peak.thresholds == a.peak.thresholds);
    CHECK(back.peak.n_days == a.peak.n_days);

    const auto base_a = baseline_no_storage(a);
    const auto base_b = baseline_no_storage(back);
    CHECK(base_a.totals.total == base_b.totals.total);

    CHECK_THROWS_AS(scenario_from_json("{}"), ValidationError);
    CHECK_THROWS_AS(scenario_from_json(R"({"version": 3})"), ValidationError);
    CHECK_THROWS_AS(make_synthetic_scenario(1, 0, 3, 4), ValidationError);
}

TEST_CASE("calendar scenarios rebuild from config CSVs with generated TOU rates") {
    const auto dir = fresh_dir("cfg");
    write_text_file((dir / "load.csv").string(), hourly_csv("2022-01-01T00:00", 744, 2.0));
    write_text_file((dir / "price.csv").string(), hourly_csv("2022-01-01T00:00", 744, 0.1));

    RunConfig cfg = default_config();
    cfg.load_csv = (dir / "load.csv").string();
    cfg.price_csv = (dir / "price.csv").string();

    const auto s = scenario_from_config(cfg);
    CHECK(s.grid.num_months == 1);
    CHECK(s.grid.periods == 744);
    CHECK(s.load[0] == 2.0);
    CHECK(s.prices.da[0] == 0.1);
    // January noon is winter day rate; 23:00 is winter night rate.
    CHECK(s.prices.tou[12] == 0.50);
    CHECK(s.prices.tou[23] == 0.40);
    CHECK(s.peak.top() == 20.0);

    // A shifted price file is a misalignment, not a silent truncation.
    write_text_file((dir / "price.csv").string(), hourly_csv("2022-01-01T01:00", 744, 0.1));
    CHECK_THROWS_WITH_AS(scenario_from_config(cfg), doctest::Contains("misaligned"),
                         ValidationError);

    RunConfig empty;
    CHECK_THROWS_WITH_AS(scenario_from_config(empty), doctest::Contains("load_csv"),
                         ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("trace files round-trip executed flows exactly") {
    const auto dir = fresh_dir("trace");
    const auto s = make_synthetic_scenario(3, 1, 2, 4);
    const int n = s.grid.periods;

    std::vector<double> p(s.load.begin(), s.load.end());
    std::vector<double> c(n, 0.0), d(n, 0.0);
    std::vector<double> q(n + 1, s.storage.initial_kwh);
    std::vector<int> cur(n, 2), nxt(n, 0);

    const auto path = (dir / "trace.csv").string();
    write_trace_csv(path, s, p, c, d, q, cur, nxt);

    const auto tab = read_trace_csv(path);
    REQUIRE(tab.p.size() == static_cast<size_t>(n));
    CHECK(tab.p == p);
    CHECK(tab.q.back() == q.back());
    CHECK(tab.tier_cur == cur);
    CHECK(tab.tier_next == nxt);
    CHECK(tab.tou == s.prices.tou);

    // The written trajectory re-evaluates to the same money, bit for bit.
    const auto direct = evaluate(p, s);
    const auto reread = evaluate(tab.p, s);
    CHECK(direct.totals.total == reread.totals.total);
    CHECK(report_to_json(direct) == report_to_json(reread));

    // Blank tier columns come back empty, not as zeros.
    write_trace_csv(path, s, p, c, d, q);
    const auto bare = read_trace_csv(path);
    CHECK(bare.tier_cur.empty());
    CHECK(bare.tier_next.empty());

    std::vector<double> short_q(n, 0.0);
    CHECK_THROWS_AS(write_trace_csv(path, s, p, c, d, short_q), ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("sweep files carry capacity, total, and savings columns") {
    const auto dir = fresh_dir("sweep");
    const std::vector<CapacityPoint> pts = {{0.0, 100.0, 0.0}, {5.0, 90.0, 10.0}};
    const auto path = (dir / "sweep.csv").string();
    write_sweep_csv(path, pts);
    const auto text = read_text_file(path);
    CHECK(text == "capacity_kwh,total_nok,savings_pct\n0,100,0\n5,90,10\n");
    fs::remove_all(dir);
}

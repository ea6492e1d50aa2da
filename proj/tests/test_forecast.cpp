#include <doctest.h>

#include "hemopt/errors.hpp"
#include "hemopt/forecast.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace hemopt;

namespace {

double laplace(std::mt19937& rng, double scale) {
    std::uniform_real_distribution<double> un(-0.5, 0.5);
    const double u = un(rng);
    return -scale * (u < 0 ? -1.0 : 1.0) * std::log(1.0 - 2.0 * std::abs(u));
}

double model_objective(const BaselineModel& m, std::span<const double> history,
                       CivilHour start) {
    double f = 0.0;
    for (size_t i = 0; i < history.size(); ++i)
        f += pinball_loss(history[i] - predict_baseline_at(m, start + static_cast<CivilHour>(i)),
                          m.quantile);
    for (size_t k = 0; k < m.periods.size(); ++k)
        f += m.lambda_reg * m.nu[k] * (m.a[k] * m.a[k] + m.b[k] * m.b[k]);
    return f;
}

} // namespace

TEST_CASE("pinball loss hinges at zero with quantile weights") {
    CHECK(pinball_loss(0.0, 0.3) == 0.0);
    CHECK(pinball_loss(1.0, 0.9) == doctest::Approx(0.9));
    CHECK(pinball_loss(-1.0, 0.9) == doctest::Approx(0.1));
    CHECK(pinball_loss(2.0, 0.5) == doctest::Approx(1.0));
    CHECK(pinball_loss(-2.0, 0.5) == doctest::Approx(1.0));
    CHECK(pinball_loss(-3.5, 0.0) == doctest::Approx(3.5));
    CHECK(pinball_loss(-3.5, 1.0) == 0.0);
    CHECK_THROWS_AS(pinball_loss(1.0, 1.5), ValidationError);
}

TEST_CASE("noise-free sinusoid is recovered") {
    const CivilHour start = 450000;
    std::vector<double> x(2000);
    for (size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(start + static_cast<CivilHour>(i));
        x[i] = 5.0 + 3.0 * std::sin(2.0 * std::numbers::pi * t / 24.0);
    }
    BaselineConfig cfg;
    cfg.periods = {24.0};
    cfg.nu = {1.0};
    cfg.quantile = 0.5;
    cfg.lambda_reg = 1e-6;
    const auto m = fit_baseline(x, start, cfg);
    CHECK(m.intercept == doctest::Approx(5.0).epsilon(2e-3));
    CHECK(std::hypot(m.a[0], m.b[0]) == doctest::Approx(3.0).epsilon(4e-3));
    const auto pred = predict_baseline(m, start, static_cast<int>(x.size()));
    for (size_t i = 0; i < x.size(); i += 97)
        CHECK(pred[i] == doctest::Approx(x[i]).scale(1.0).epsilon(1e-2));
}

TEST_CASE("constant history collapses to the intercept") {
    std::vector<double> x(300, 7.5);
    auto cfg = default_baseline_config();
    REQUIRE(cfg.periods.size() == 12);
    REQUIRE(cfg.nu == std::vector<double>({1, 4, 9, 16, 1, 4, 9, 16, 1, 4, 9, 16}));
    const auto m = fit_baseline(x, 460000, cfg);
    CHECK(m.intercept == doctest::Approx(7.5).epsilon(1e-4));
    for (size_t k = 0; k < m.a.size(); ++k) {
        CHECK(std::abs(m.a[k]) < 1e-3);
        CHECK(std::abs(m.b[k]) < 1e-3);
    }
}

TEST_CASE("the fitted quantile covers the right fraction of training data") {
    std::mt19937 rng(8);
    const CivilHour start = 470000;
    std::vector<double> x(10000);
    for (auto& v : x) v = 10.0 + laplace(rng, 1.0);
    BaselineConfig cfg;
    cfg.periods = {24.0};
    cfg.nu = {1.0};
    cfg.quantile = 0.9;
    cfg.lambda_reg = 1e-3;
    const auto m = fit_baseline(x, start, cfg);
    int below = 0;
    for (size_t i = 0; i < x.size(); ++i)
        if (x[i] - predict_baseline_at(m, start + static_cast<CivilHour>(i)) <= 0.0) ++below;
    const double frac = static_cast<double>(below) / static_cast<double>(x.size());
    CHECK(frac == doctest::Approx(0.9).epsilon(0.034));
}

TEST_CASE("no small perturbation improves the fitted objective") {
    std::mt19937 rng(21);
    const CivilHour start = 480000;
    std::vector<double> x(3000);
    for (size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(start + static_cast<CivilHour>(i));
        x[i] = 4.0 + 1.5 * std::sin(2.0 * std::numbers::pi * t / 24.0) + laplace(rng, 0.5);
    }
    BaselineConfig cfg;
    cfg.periods = {24.0, 12.0};
    cfg.nu = {1.0, 4.0};
    cfg.quantile = 0.7;
    cfg.lambda_reg = 0.5;
    const auto m = fit_baseline(x, start, cfg);
    const double f0 = model_objective(m, x, start);

    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> delta(5);
        double norm = 0.0;
        for (auto& d : delta) {
            d = gauss(rng);
            norm += d * d;
        }
        norm = std::sqrt(norm);
        auto pert = m;
        pert.intercept += 1e-3 * delta[0] / norm;
        pert.a[0] += 1e-3 * delta[1] / norm;
        pert.b[0] += 1e-3 * delta[2] / norm;
        pert.a[1] += 1e-3 * delta[3] / norm;
        pert.b[1] += 1e-3 * delta[4] / norm;
        CHECK(model_objective(pert, x, start) >= f0 - 1e-6 * (1.0 + std::abs(f0)));
    }
}

TEST_CASE("prediction is a direct evaluation of the sinusoid sum") {
    BaselineModel m;
    m.intercept = 2.0;
    m.a = {0.5, -1.0};
    m.b = {0.25, 0.75};
    m.periods = {24.0, 7.3};
    m.nu = {1.0, 1.0};
    std::mt19937 rng(3);
    std::uniform_int_distribution<CivilHour> hour(0, 1000000);
    for (int rep = 0; rep < 50; ++rep) {
        const CivilHour t = hour(rng);
        double want = 2.0;
        for (int k = 0; k < 2; ++k) {
            const double ph = 2.0 * std::numbers::pi * static_cast<double>(t) / m.periods[k];
            want += m.a[k] * std::sin(ph) + m.b[k] * std::cos(ph);
        }
        CHECK(predict_baseline_at(m, t) == doctest::Approx(want).epsilon(1e-12));
    }

    BaselineModel flat;
    flat.intercept = 3.25;
    const auto series = predict_baseline(flat, 12345, 10);
    for (const double v : series) CHECK(v == 3.25);
}

TEST_CASE("white-noise residuals with heavy ridge give a null AR matrix") {
    std::mt19937 rng(14);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> r(2000);
    for (auto& v : r) v = gauss(rng);
    const auto m = fit_ar_residual(r, 6, 3, 0.5, 1e6);
    for (const auto& row : m.gamma)
        for (const double g : row) CHECK(std::abs(g) < 1e-3);
}

TEST_CASE("an AR(1) chain concentrates weight on the newest lag") {
    std::mt19937 rng(25);
    std::normal_distribution<double> gauss(0.0, 0.1);
    std::vector<double> r(3000);
    r[0] = 0.0;
    for (size_t i = 1; i < r.size(); ++i) r[i] = 0.9 * r[i - 1] + gauss(rng);
    const auto m = fit_ar_residual(r, 8, 3, 0.5, 1e-3);
    REQUIRE(m.gamma.size() == 3);
    REQUIRE(m.gamma[0].size() == 8);
    CHECK(m.gamma[0][7] == doctest::Approx(0.9).epsilon(0.06));
    for (int j = 0; j < 7; ++j) CHECK(std::abs(m.gamma[0][j]) < 0.12);
    CHECK(m.gamma[1][7] == doctest::Approx(0.81).epsilon(0.1));

    CHECK_THROWS_AS(fit_ar_residual(std::vector<double>(10, 0.0), 8, 3, 0.5, 1.0),
                    ValidationError);
}

TEST_CASE("the AR correction helps on held-out residuals") {
    std::mt19937 rng(30);
    std::normal_distribution<double> gauss(0.0, 0.3);
    const CivilHour start = 490000;
    const int n = 2900, train = 2500;
    std::vector<double> x(n), rtrue(n);
    rtrue[0] = 0.0;
    for (int i = 1; i < n; ++i) rtrue[i] = 0.85 * rtrue[i - 1] + gauss(rng);
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(start + i);
        x[i] = 5.0 + 2.0 * std::sin(2.0 * std::numbers::pi * t / 24.0) + rtrue[i];
    }
    BaselineConfig cfg;
    cfg.periods = {24.0};
    cfg.nu = {1.0};
    cfg.lambda_reg = 1e-3;
    const auto base = fit_baseline(std::span(x).first(train), start, cfg);
    const auto res = baseline_residuals(base, std::span(x).first(train), start);
    const auto ar = fit_ar_residual(res, 6, 2, 0.5, 1e-3);

    const auto all_res = baseline_residuals(base, x, start);
    double with_ar = 0.0, without = 0.0;
    for (int t = train; t + 1 < n; ++t) {
        double rhat = 0.0;
        for (int j = 0; j < 6; ++j) rhat += ar.gamma[0][j] * all_res[t - 5 + j];
        with_ar += pinball_loss(all_res[t + 1] - rhat, 0.5);
        without += pinball_loss(all_res[t + 1], 0.5);
    }
    CHECK(with_ar < without);
}

TEST_CASE("forecast anchors, corrects, then falls back to the baseline") {
    BaselineModel base;
    base.intercept = 3.0;
    base.a = {1.0};
    base.b = {0.0};
    base.periods = {24.0};
    base.nu = {1.0};

    ArResidualModel ar;
    ar.m_in = 4;
    ar.l_out = 2;
    ar.gamma = {{0.1, 0.0, 0.2, 0.5}, {0.0, 0.0, 0.0, 0.25}};

    const CivilHour t = 777777;
    std::vector<double> recent(4);
    for (int i = 0; i < 4; ++i)
        recent[i] = predict_baseline_at(base, t - 3 + i) + 0.5 * (i + 1);

    const int h = 6;
    const auto f = forecast(base, ar, recent, t, h);
    REQUIRE(static_cast<int>(f.size()) == h);
    CHECK(f[0] == recent.back());
    // Residual window is 0.5, 1.0, 1.5, 2.0.
    CHECK(f[1] == doctest::Approx(predict_baseline_at(base, t + 1) + 0.05 + 0.3 + 1.0));
    CHECK(f[2] == doctest::Approx(predict_baseline_at(base, t + 2) + 0.5));
    for (int k = 3; k < h; ++k)
        CHECK(f[k] == doctest::Approx(predict_baseline_at(base, t + k)));

    // Zero matrix leaves everything past the anchor at the baseline.
    ArResidualModel zero = ar;
    for (auto& row : zero.gamma) row.assign(4, 0.0);
    const auto fz = forecast(base, zero, recent, t, h);
    CHECK(fz[0] == recent.back());
    for (int k = 1; k < h; ++k)
        CHECK(fz[k] == doctest::Approx(predict_baseline_at(base, t + k)));

    // Short horizons are prefixes of longer ones.
    const auto f2 = forecast(base, ar, recent, t, 2);
    CHECK(f2[0] == f[0]);
    CHECK(f2[1] == doctest::Approx(f[1]));

    std::vector<double> wrong(3, 1.0);
    CHECK_THROWS_AS(forecast(base, ar, wrong, t, 4), ValidationError);
    CHECK_THROWS_AS(forecast(base, ar, recent, t, 0), ValidationError);
}

TEST_CASE("forecast is affine in the recent window") {
    BaselineModel base;
    base.intercept = 1.0;
    base.a = {0.4};
    base.b = {-0.2};
    base.periods = {24.0};
    base.nu = {1.0};
    ArResidualModel ar;
    ar.m_in = 5;
    ar.l_out = 3;
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> un(-1.0, 1.0);
    ar.gamma.assign(3, std::vector<double>(5));
    for (auto& row : ar.gamma)
        for (auto& g : row) g = un(rng);

    const CivilHour t = 500001;
    std::vector<double> h1(5), h2(5), mix(5);
    for (int i = 0; i < 5; ++i) {
        h1[i] = 2.0 + un(rng);
        h2[i] = 3.0 + un(rng);
    }
    const double a = 0.3;
    for (int i = 0; i < 5; ++i) mix[i] = a * h1[i] + (1.0 - a) * h2[i];
    const auto f1 = forecast(base, ar, h1, t, 8);
    const auto f2 = forecast(base, ar, h2, t, 8);
    const auto fm = forecast(base, ar, mix, t, 8);
    for (int k = 0; k < 8; ++k)
        CHECK(fm[k] == doctest::Approx(a * f1[k] + (1.0 - a) * f2[k]).epsilon(1e-12));
}

TEST_CASE("models survive a JSON round trip") {
    std::mt19937 rng(55);
    std::uniform_real_distribution<double> un(-2.0, 2.0);
    BaselineModel base;
    base.intercept = un(rng);
    base.periods = {24.0, 12.0, 8760.0};
    base.nu = {1.0, 4.0, 1.0};
    base.quantile = 0.62;
    base.lambda_reg = 0.37;
    for (int k = 0; k < 3; ++k) {
        base.a.push_back(un(rng));
        base.b.push_back(un(rng));
    }
    ArResidualModel ar;
    ar.m_in = 3;
    ar.l_out = 2;
    ar.quantile = 0.5;
    ar.lambda_reg = 2.0;
    ar.gamma = {{un(rng), un(rng), un(rng)}, {un(rng), un(rng), un(rng)}};

    const auto text = models_to_json(base, ar);
    const auto [b2, a2] = models_from_json(text);
    CHECK(b2.intercept == base.intercept);
    CHECK(b2.a == base.a);
    CHECK(b2.b == base.b);
    CHECK(b2.periods == base.periods);
    CHECK(b2.quantile == base.quantile);
    CHECK(a2.gamma == ar.gamma);
    CHECK(a2.m_in == 3);
    CHECK(a2.l_out == 2);

    CHECK_THROWS_AS(models_from_json("not json at all {"), ValidationError);
    CHECK_THROWS_AS(models_from_json(R"({"version": 7})"), ValidationError);
    CHECK_THROWS_AS(models_from_json(R"({"version": 1, "baseline": {}})"), ValidationError);
}

TEST_CASE("grid search prefers the setting that predicts the tail") {
    const CivilHour start = 510000;
    std::mt19937 rng(60);
    std::vector<double> x(1200);
    for (size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(start + static_cast<CivilHour>(i));
        x[i] = 6.0 + 2.5 * std::sin(2.0 * std::numbers::pi * t / 24.0) + laplace(rng, 0.2);
    }
    BaselineConfig cfg;
    cfg.periods = {24.0};
    cfg.nu = {1.0};
    FitSearchSpace space;
    space.quantiles = {0.5};
    space.lambdas = {1e-4, 1e5};
    const auto choice = search_baseline_fit(x, start, cfg, space);
    CHECK(choice.lambda_reg == doctest::Approx(1e-4));
    CHECK(choice.validation_loss < 0.5);

    const auto again = search_baseline_fit(x, start, cfg, space);
    CHECK(again.lambda_reg == choice.lambda_reg);
    CHECK(again.validation_loss == choice.validation_loss);
}

#include "hemopt/forecast.hpp"

#include "hemopt/errors.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hemopt {

double pinball_loss(double u, double eta) {
    if (eta < 0.0 || eta > 1.0) throw ValidationError("pinball_loss: quantile outside [0,1]");
    return eta * std::max(u, 0.0) + (1.0 - eta) * std::max(-u, 0.0);
}

namespace {

// min over W of  sum_ij pinball(Y - X W, eta) + lambda * sum_j nu_j |W(j,:)|^2
// via ADMM on the split z = Y - X W, with over-relaxation and residual-balanced
// penalty updates. Outputs share the lag matrix, so they are fitted jointly.
Eigen::MatrixXd quantile_ridge(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                               const Eigen::VectorXd& nu, double eta, double lambda) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    const Eigen::Index q = Y.cols();

    const Eigen::MatrixXd XtX = X.transpose() * X;
    double rho = 1.0;
    constexpr double alpha = 1.7;

    auto factor = [&] {
        Eigen::MatrixXd M = rho * XtX;
        M.diagonal() += 2.0 * lambda * nu;
        Eigen::LLT<Eigen::MatrixXd> llt(M);
        if (llt.info() != Eigen::Success) {
            M.diagonal().array() += 1e-10 * (1.0 + M.diagonal().maxCoeff());
            llt.compute(M);
        }
        return llt;
    };
    Eigen::LLT<Eigen::MatrixXd> llt = factor();

    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(p, q);
    Eigen::MatrixXd Z = Y; // feasible split for W = 0
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(n, q);

    auto objective = [&](const Eigen::MatrixXd& resid, const Eigen::MatrixXd& w) {
        double f = 0.0;
        for (Eigen::Index j = 0; j < q; ++j)
            for (Eigen::Index i = 0; i < n; ++i) f += pinball_loss(resid(i, j), eta);
        for (Eigen::Index j = 0; j < p; ++j) f += lambda * nu(j) * w.row(j).squaredNorm();
        return f;
    };

    Eigen::MatrixXd Wbest = W;
    double fbest = objective(Y, W);

    constexpr double eps_abs = 1e-8, eps_rel = 1e-8;
    constexpr int max_iter = 6000;
    for (int it = 0; it < max_iter; ++it) {
        W = llt.solve(rho * (X.transpose() * (Y - Z - U)));
        const Eigen::MatrixXd XW = X * W;

        const double f = objective(Y - XW, W);
        if (f < fbest) {
            fbest = f;
            Wbest = W;
        }

        const Eigen::MatrixXd V = alpha * XW + (1.0 - alpha) * (Y - Z);
        const Eigen::MatrixXd Zold = Z;
        const double hi = eta / rho, lo = (1.0 - eta) / rho;
        Z = (Y - V - U).unaryExpr([&](double s) {
            if (s > hi) return s - hi;
            if (s < -lo) return s + lo;
            return 0.0;
        });
        U += V + Z - Y;

        const double rpri = (XW + Z - Y).norm();
        const double sdual = rho * (X.transpose() * (Z - Zold)).norm();
        const double eps_pri =
            std::sqrt(static_cast<double>(n * q)) * eps_abs +
            eps_rel * std::max({XW.norm(), Z.norm(), Y.norm()});
        const double eps_dual = std::sqrt(static_cast<double>(p * q)) * eps_abs +
                                eps_rel * rho * (X.transpose() * U).norm();
        if (rpri <= eps_pri && sdual <= eps_dual) break;

        if (it % 25 == 24) {
            if (rpri > 10.0 * sdual && rho < 1e6) {
                rho *= 2.0;
                U /= 2.0;
                llt = factor();
            } else if (sdual > 10.0 * rpri && rho > 1e-4) {
                rho /= 2.0;
                U *= 2.0;
                llt = factor();
            }
        }
    }
    return Wbest;
}

void check_fit_params(double eta, double lambda) {
    if (eta < 0.0 || eta > 1.0) throw ValidationError("fit: quantile outside [0,1]");
    if (!(lambda > 0.0)) throw ValidationError("fit: ridge weight must be positive");
}

Eigen::MatrixXd baseline_design(std::span<const double> periods, CivilHour start,
                                Eigen::Index n) {
    const Eigen::Index p = 1 + 2 * static_cast<Eigen::Index>(periods.size());
    Eigen::MatrixXd X(n, p);
    X.col(0).setOnes();
    for (size_t k = 0; k < periods.size(); ++k) {
        const double w = 2.0 * std::numbers::pi / periods[k];
        for (Eigen::Index i = 0; i < n; ++i) {
            const double ph = w * static_cast<double>(start + i);
            X(i, 1 + 2 * k) = std::sin(ph);
            X(i, 2 + 2 * k) = std::cos(ph);
        }
    }
    return X;
}

} // namespace

BaselineConfig default_baseline_config() {
    BaselineConfig cfg;
    for (const double base : {24.0, 168.0, 8760.0})
        for (int harmonic = 1; harmonic <= 4; ++harmonic) {
            cfg.periods.push_back(base / harmonic);
            cfg.nu.push_back(static_cast<double>(harmonic * harmonic));
        }
    return cfg;
}

BaselineModel fit_baseline(std::span<const double> history, CivilHour start_hour,
                           const BaselineConfig& cfg) {
    check_fit_params(cfg.quantile, cfg.lambda_reg);
    if (cfg.periods.size() != cfg.nu.size())
        throw ValidationError("fit_baseline: periods and nu lengths differ");
    for (const double p : cfg.periods)
        if (!(p > 0.0)) throw ValidationError("fit_baseline: periods must be positive");
    for (const double v : cfg.nu)
        if (!(v > 0.0)) throw ValidationError("fit_baseline: nu must be positive");
    const size_t p = 1 + 2 * cfg.periods.size();
    if (history.size() < 2 * p)
        throw ValidationError("fit_baseline: history shorter than twice the parameter count");

    const Eigen::Index n = static_cast<Eigen::Index>(history.size());
    const Eigen::MatrixXd X = baseline_design(cfg.periods, start_hour, n);
    Eigen::MatrixXd Y(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) Y(i, 0) = history[i];

    Eigen::VectorXd nu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    for (size_t k = 0; k < cfg.nu.size(); ++k) {
        nu(1 + 2 * k) = cfg.nu[k];
        nu(2 + 2 * k) = cfg.nu[k];
    }

    const Eigen::MatrixXd W = quantile_ridge(X, Y, nu, cfg.quantile, cfg.lambda_reg);

    BaselineModel m;
    m.intercept = W(0, 0);
    for (size_t k = 0; k < cfg.periods.size(); ++k) {
        m.a.push_back(W(1 + 2 * k, 0));
        m.b.push_back(W(2 + 2 * k, 0));
    }
    m.periods = cfg.periods;
    m.nu = cfg.nu;
    m.quantile = cfg.quantile;
    m.lambda_reg = cfg.lambda_reg;
    return m;
}

double predict_baseline_at(const BaselineModel& model, CivilHour t) {
    double v = model.intercept;
    for (size_t k = 0; k < model.periods.size(); ++k) {
        const double ph = 2.0 * std::numbers::pi * static_cast<double>(t) / model.periods[k];
        v += model.a[k] * std::sin(ph) + model.b[k] * std::cos(ph);
    }
    return v;
}

std::vector<double> predict_baseline(const BaselineModel& model, CivilHour start, int count) {
    if (count < 0) throw ValidationError("predict_baseline: negative count");
    std::vector<double> out(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) out[i] = predict_baseline_at(model, start + i);
    return out;
}

std::vector<double> baseline_residuals(const BaselineModel& model,
                                       std::span<const double> history, CivilHour start_hour) {
    std::vector<double> r(history.size());
    for (size_t i = 0; i < history.size(); ++i)
        r[i] = history[i] - predict_baseline_at(model, start_hour + static_cast<CivilHour>(i));
    return r;
}

ArResidualModel fit_ar_residual(std::span<const double> residuals, int m_in, int l_out,
                                double eta, double lambda_reg) {
    check_fit_params(eta, lambda_reg);
    if (m_in < 1 || l_out < 1)
        throw ValidationError("fit_ar_residual: window sizes must be positive");
    const int n = static_cast<int>(residuals.size());
    if (n <= m_in + l_out)
        throw ValidationError("fit_ar_residual: history shorter than one input+output window");

    const int rows = n - m_in - l_out + 1;
    Eigen::MatrixXd X(rows, m_in), Y(rows, l_out);
    for (int r = 0; r < rows; ++r) {
        const int t = m_in - 1 + r; // most recent observed index for this row
        for (int j = 0; j < m_in; ++j) X(r, j) = residuals[t - m_in + 1 + j];
        for (int l = 0; l < l_out; ++l) Y(r, l) = residuals[t + 1 + l];
    }

    const Eigen::VectorXd nu = Eigen::VectorXd::Ones(m_in);
    const Eigen::MatrixXd W = quantile_ridge(X, Y, nu, eta, lambda_reg);

    ArResidualModel m;
    m.m_in = m_in;
    m.l_out = l_out;
    m.quantile = eta;
    m.lambda_reg = lambda_reg;
    m.gamma.assign(l_out, std::vector<double>(m_in, 0.0));
    for (int l = 0; l < l_out; ++l)
        for (int j = 0; j < m_in; ++j) m.gamma[l][j] = W(j, l);
    return m;
}

std::vector<double> forecast(const BaselineModel& model, const ArResidualModel& ar,
                             std::span<const double> recent, CivilHour t, int h) {
    if (h < 1) throw ValidationError("forecast: horizon must be at least 1");
    if (recent.empty()) throw ValidationError("forecast: current observation missing");

    std::vector<double> out = predict_baseline(model, t, h);
    if (!ar.gamma.empty()) {
        if (static_cast<int>(recent.size()) != ar.m_in)
            throw ValidationError("forecast: recent window must hold exactly m_in observations");
        std::vector<double> rw(ar.m_in);
        for (int i = 0; i < ar.m_in; ++i) {
            const CivilHour hour = t - ar.m_in + 1 + i;
            rw[i] = recent[i] - predict_baseline_at(model, hour);
        }
        for (int l = 0; l < ar.l_out && l + 1 < h; ++l) {
            double rhat = 0.0;
            for (int j = 0; j < ar.m_in; ++j) rhat += ar.gamma[l][j] * rw[j];
            out[l + 1] += rhat;
        }
    }
    out[0] = recent.back();
    return out;
}

std::string models_to_json(const BaselineModel& model, const ArResidualModel& ar, int indent) {
    nlohmann::json j;
    j["version"] = 1;
    j["baseline"] = {{"intercept", model.intercept}, {"a", model.a},
                     {"b", model.b},                 {"periods", model.periods},
                     {"nu", model.nu},               {"quantile", model.quantile},
                     {"lambda_reg", model.lambda_reg}};
    j["ar"] = {{"gamma", ar.gamma},
               {"m_in", ar.m_in},
               {"l_out", ar.l_out},
               {"quantile", ar.quantile},
               {"lambda_reg", ar.lambda_reg}};
    return j.dump(indent);
}

std::pair<BaselineModel, ArResidualModel> models_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model document is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("version").get<int>() != 1)
            throw ValidationError("model document has an unsupported version");
        BaselineModel m;
        const auto& b = j.at("baseline");
        m.intercept = b.at("intercept").get<double>();
        m.a = b.at("a").get<std::vector<double>>();
        m.b = b.at("b").get<std::vector<double>>();
        m.periods = b.at("periods").get<std::vector<double>>();
        m.nu = b.at("nu").get<std::vector<double>>();
        m.quantile = b.at("quantile").get<double>();
        m.lambda_reg = b.at("lambda_reg").get<double>();
        if (m.a.size() != m.periods.size() || m.b.size() != m.periods.size() ||
            m.nu.size() != m.periods.size())
            throw ValidationError("model document: baseline coefficient lengths differ");

        ArResidualModel ar;
        const auto& a = j.at("ar");
        ar.gamma = a.at("gamma").get<std::vector<std::vector<double>>>();
        ar.m_in = a.at("m_in").get<int>();
        ar.l_out = a.at("l_out").get<int>();
        ar.quantile = a.at("quantile").get<double>();
        ar.lambda_reg = a.at("lambda_reg").get<double>();
        if (!ar.gamma.empty()) {
            if (static_cast<int>(ar.gamma.size()) != ar.l_out)
                throw ValidationError("model document: gamma row count differs from l_out");
            for (const auto& row : ar.gamma)
                if (static_cast<int>(row.size()) != ar.m_in)
                    throw ValidationError("model document: gamma column count differs from m_in");
        }
        return {std::move(m), std::move(ar)};
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("model document is missing fields: ") + e.what());
    }
}

FitChoice search_baseline_fit(std::span<const double> history, CivilHour start_hour,
                              const BaselineConfig& base, const FitSearchSpace& space,
                              double validation_fraction) {
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw ValidationError("search_baseline_fit: validation fraction outside (0,1)");
    if (space.quantiles.empty() || space.lambdas.empty())
        throw ValidationError("search_baseline_fit: empty search space");
    const size_t n = history.size();
    const size_t n_val = std::max<size_t>(1, static_cast<size_t>(validation_fraction * n));
    if (n_val >= n) throw ValidationError("search_baseline_fit: history too short to split");
    const size_t n_train = n - n_val;

    FitChoice best;
    bool have = false;
    for (const double eta : space.quantiles) {
        for (const double lam : space.lambdas) {
            BaselineConfig cfg = base;
            cfg.quantile = eta;
            cfg.lambda_reg = lam;
            const auto model = fit_baseline(history.first(n_train), start_hour, cfg);
            const auto pred = predict_baseline(
                model, start_hour + static_cast<CivilHour>(n_train), static_cast<int>(n_val));
            double loss = 0.0;
            for (size_t i = 0; i < n_val; ++i)
                loss += pinball_loss(history[n_train + i] - pred[i], 0.5);
            loss /= static_cast<double>(n_val);
            if (!have || loss < best.validation_loss) {
                best = {eta, lam, loss};
                have = true;
            }
        }
    }
    return best;
}

} // namespace hemopt

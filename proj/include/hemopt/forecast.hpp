#pragma once

#include "hemopt/domain.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hemopt {

// Standard nonnegative pinball loss: eta*max(u,0) + (1-eta)*max(-u,0).
double pinball_loss(double u, double eta);

struct BaselineConfig {
    std::vector<double> periods; // sinusoid periods in hours
    std::vector<double> nu;      // ridge weight per harmonic pair
    double quantile = 0.5;
    double lambda_reg = 1.0;
};

// Four harmonics each of the daily, weekly, and yearly cycles; ridge weights
// grow with the square of the harmonic number within each cycle.
BaselineConfig default_baseline_config();

struct BaselineModel {
    double intercept = 0.0;
    std::vector<double> a; // sine coefficients
    std::vector<double> b; // cosine coefficients
    std::vector<double> periods;
    std::vector<double> nu;
    double quantile = 0.5;
    double lambda_reg = 1.0;
};

// Quantile-ridge fit of the sinusoid sum to an hourly series starting at
// start_hour. The intercept is not regularized.
BaselineModel fit_baseline(std::span<const double> history, CivilHour start_hour,
                           const BaselineConfig& cfg);

double predict_baseline_at(const BaselineModel& model, CivilHour t);
std::vector<double> predict_baseline(const BaselineModel& model, CivilHour start, int count);

// history[i] minus the baseline at start_hour + i.
std::vector<double> baseline_residuals(const BaselineModel& model,
                                       std::span<const double> history, CivilHour start_hour);

struct ArResidualModel {
    std::vector<std::vector<double>> gamma; // l_out rows of m_in lag weights
    int m_in = 24;
    int l_out = 23;
    double quantile = 0.5;
    double lambda_reg = 1.0;
};

// Each output horizon is an independent quantile-ridge regression of the
// residual on the previous m_in residuals; rows are fitted jointly since
// they share the lag matrix.
ArResidualModel fit_ar_residual(std::span<const double> residuals, int m_in, int l_out,
                                double eta, double lambda_reg);

// Combined predictor for hours t..t+h-1: position 0 repeats the current
// observation, the next l_out positions add the AR residual correction to
// the baseline, and the rest are baseline only. recent holds the last m_in
// observations ending at hour t.
std::vector<double> forecast(const BaselineModel& model, const ArResidualModel& ar,
                             std::span<const double> recent, CivilHour t, int h);

std::string models_to_json(const BaselineModel& model, const ArResidualModel& ar,
                           int indent = 2);
std::pair<BaselineModel, ArResidualModel> models_from_json(const std::string& text);

struct FitSearchSpace {
    std::vector<double> quantiles = {0.5};
    std::vector<double> lambdas = {0.1, 1.0, 10.0};
};

struct FitChoice {
    double quantile = 0.5;
    double lambda_reg = 1.0;
    double validation_loss = 0.0;
};

// Holdout grid search over (quantile, lambda): fits on the leading part of
// the history and scores median pinball loss on the tail.
FitChoice search_baseline_fit(std::span<const double> history, CivilHour start_hour,
                              const BaselineConfig& base, const FitSearchSpace& space,
                              double validation_fraction = 0.25);

} // namespace hemopt

#pragma once

#include <vector>

#include "mdlseg/core.hpp"

// Periodic autoregression fitting and prediction.  The error process is
// observed as residuals over d complete cycles of period T; season-nu moments
// are averaged over cycles with early lags that reach before the sample
// zero-padded.

namespace mdlseg {

// Sample seasonal autocovariances gamma[nu-1][h] for h = 0..h_max:
//   gamma_nu(h) = (1/d) * sum_{n=0}^{d-1} e_{nT+nu} * e_{nT+nu-h},
// with e_t taken as 0 for t <= 0.
struct SeasonalACVF {
    int period = 0;
    int max_lag = 0;
    std::vector<std::vector<double>> gamma;  // [nu-1][h]

    double at(int nu, int h) const { return gamma[static_cast<std::size_t>(nu - 1)][static_cast<std::size_t>(h)]; }
};

SeasonalACVF seasonal_acvf(const std::vector<double>& resid, int period, int max_lag);

// Per-season moment equations solved for the order-p coefficients and the
// innovation variances.  Throws YuleWalkerSingular when a season's system is
// numerically singular and NonPositiveVariance when an implied variance is
// <= 0.
PARModel yule_walker_from_acvf(const SeasonalACVF& acvf, int order);
PARModel yule_walker(const std::vector<double>& resid, int period, int order);

// Stationary second moments of the error process itself: gamma[nu-1][h] for
// h = 0..max_lag, obtained by iterating the variance recursion of the
// cycle-stacked process to a fixed point.  Throws NonCausalPAR when the
// iteration fails to converge (relative change 1e-12 within 1000 sweeps).
struct StationaryMoments {
    int period = 0;
    int max_lag = 0;
    std::vector<std::vector<double>> gamma;  // [nu-1][h]

    double at(int nu, int h) const { return gamma[static_cast<std::size_t>(nu - 1)][static_cast<std::size_t>(h)]; }
    double var(int nu) const { return at(nu, 0); }
};

StationaryMoments stationary_moments(const PARModel& par, int max_lag);

// Covariance matrix of the first `count` errors (e_1, ..., e_count) under
// the stationary process.
std::vector<double> leading_covariance(const PARModel& par, int count);

struct OneStepPredictions {
    std::vector<double> one_step_pred;  // xhat_t
    std::vector<double> pred_var;       // v_t
};

// One-step-ahead predictors of the observations and their error variances.
// For t > p the predictor uses the autoregression directly with v_t =
// sigma2(nu); for t <= p it uses the exact finite-past projection from the
// stationary covariance of the first p errors, so v_1 = Var(e_1).
OneStepPredictions one_step_predictions(const PeriodicSeries& x, const MeanParams& mean,
                                        const Segmentation& seg, const PARModel& par);

}  // namespace mdlseg

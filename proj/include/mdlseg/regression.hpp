#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mdlseg/core.hpp"

// Mean-function estimation.  The design has one indicator column per season,
// an optional linear trend column and one indicator column per regime after
// the first; regime 1 is the baseline, so the fitted shift of regime j+1 is
// measured against it.

namespace mdlseg {

// Rows are times 1..n_obs; columns [seasons (T) | trend | regime 2.. (m)].
// Requires only structural validity of `seg` (see validate_structure); rank
// is checked by the solvers, not here.
Eigen::MatrixXd build_design_matrix(int n_obs, int period, const Segmentation& seg,
                                    bool include_trend = true);

struct LinearFit {
    Eigen::VectorXd beta;           // [seasonal means, trend?, shifts]
    std::vector<double> fitted;     // design * beta
    std::vector<double> residuals;  // x - fitted
    double whitened_rss = 0.0;      // at the solution, in the metric solved
};

// Ordinary least squares via rank-revealing QR (relative pivot threshold
// 1e-12).  Throws RankDeficient when the design loses column rank.
LinearFit ols_fit(const PeriodicSeries& x, const Segmentation& seg, bool include_trend = true);

// Generalized least squares under a periodic autoregressive error model.
// Rows t > p are whitened by the autoregression filter scaled by the season's
// innovation standard deviation; rows t <= p by the exact Cholesky transform
// of the stationary covariance of the first p errors.  When `beta_cov` is
// given it receives (D' Sigma^{-1} D)^{-1}.
LinearFit gls_fit(const PeriodicSeries& x, const Segmentation& seg, const PARModel& par,
                  bool include_trend = true, Eigen::MatrixXd* beta_cov = nullptr);

struct FitOptions {
    bool include_trend = true;
    int max_iterations = 20;
    double beta_tol = 1e-8;  // max-norm relative change between mean fits
};

struct CochraneOrcuttTrace {
    std::vector<double> whitened_rss;        // one entry per mean fit
    std::vector<Eigen::VectorXd> betas;
};

// Alternates mean estimation (least squares first, then generalized least
// squares) with moment estimation of the error autoregression until the
// coefficient vector stabilizes.  A zero innovation variance (noise-free
// data) yields a degenerate-flagged model with +inf score; running past the
// iteration cap yields the last iterate flagged not converged.  The returned
// model's mdl_nats is NaN (degenerate: +inf); scoring fills it in.
FittedModel cochrane_orcutt(const PeriodicSeries& x, const Segmentation& seg,
                            const FitOptions& opts = {}, CochraneOrcuttTrace* trace = nullptr,
                            Eigen::MatrixXd* beta_cov = nullptr);

}  // namespace mdlseg

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

// Core value types shared by every other module.  Time indices are 1-based
// everywhere: observation t = n*T + nu lands in cycle n (0-based) and season
// nu (1-based), t = 1..N with N = d*T for d complete cycles.

namespace mdlseg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Data and validation failures.
struct EmptySeries : Error {
    using Error::Error;
};
struct NotFullCycles : Error {
    using Error::Error;
};
struct NonFinite : Error {
    using Error::Error;
};
struct InadmissibleSegmentation : Error {
    using Error::Error;
};
struct AlignmentError : Error {
    using Error::Error;
};

// Numerical failures raised while fitting a candidate model.  These are
// recoverable: a search loop treats the candidate as infinitely bad.
struct FitError : Error {
    using Error::Error;
};
struct RankDeficient : FitError {
    using FitError::FitError;
};
struct YuleWalkerSingular : FitError {
    using FitError::FitError;
};
struct NonPositiveVariance : FitError {
    using FitError::FitError;
};
struct NonCausalPAR : FitError {
    using FitError::FitError;
};
struct DegenerateVariance : FitError {
    using FitError::FitError;
};

// File ingest failures.
struct ParseError : Error {
    ParseError(const std::string& msg, long line_no)
        : Error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
    long line;
};
struct GapError : Error {
    GapError(const std::string& msg, int y, int s)
        : Error(msg + " (year " + std::to_string(y) + ", season " + std::to_string(s) + ")"),
          year(y),
          season(s) {}
    int year;
    int season;
};

inline int season_of(int t, int period) { return (t - 1) % period + 1; }
inline int cycle_of(int t, int period) { return (t - 1) / period; }

// Wraps an arbitrary (possibly non-positive) season index into 1..period.
inline int wrap_season(int nu, int period) {
    int r = nu % period;
    return r <= 0 ? r + period : r;
}

// A series observed over complete cycles of a fixed period.
struct PeriodicSeries {
    std::vector<double> values;  // values[t-1] is observation t
    int period = 0;              // T >= 1
    int cycles = 0;              // d = N / T

    int length() const { return static_cast<int>(values.size()); }
    double at_time(int t) const { return values[static_cast<std::size_t>(t - 1)]; }
};

// Checks N > 0, N divisible by T, all values finite; returns the series
// with `cycles` filled in.
PeriodicSeries validate_series(std::vector<double> values, int period);

// A candidate model structure: the autoregressive order of the error
// process and the ordered changepoint times.  Regime 1 covers t < taus[0];
// regime j+1 starts at taus[j-1].
struct Segmentation {
    int par_order = 0;             // p >= 0
    std::vector<int> changepoints; // strictly increasing, each in (1, N]

    int num_changepoints() const { return static_cast<int>(changepoints.size()); }
    bool same_model(const Segmentation& other) const {
        return par_order == other.par_order && changepoints == other.changepoints;
    }
};

// Structural validity: enough to build a design matrix (strictly increasing
// changepoints inside (1, N], non-negative order).  Throws
// InadmissibleSegmentation otherwise.
void validate_structure(const Segmentation& seg, int n_obs);

// Search-space constraints.  A segmentation is admissible when every regime
// holds at least min_cycles_between full cycles, the order is within
// max_par_order, and (when capped) the changepoint count is within
// max_changepoints.
struct SearchConstraints {
    int min_cycles_between = 1;  // regimes span at least this many cycles
    int max_par_order = 3;
    int max_changepoints = -1;   // < 0 means uncapped

    int min_spacing(int period) const { return min_cycles_between * period; }
    bool is_admissible(const Segmentation& seg, int n_obs, int period) const;
    // Throws InadmissibleSegmentation with a reason when not admissible.
    void require_admissible(const Segmentation& seg, int n_obs, int period) const;
};

// Mean function parameters: per-season levels, one linear trend slope and
// the per-regime shifts (regime 1 is pinned at zero shift).
struct MeanParams {
    std::vector<double> seasonal_means;  // length T
    double trend = 0.0;                  // per-time-unit slope
    std::vector<double> shifts;          // length m, shift of regime j+1
};

// Mean value at time t under a segmentation.
double mean_value(const MeanParams& mean, const Segmentation& seg, int period, int t);

// Periodic autoregression for the error process: for season nu,
//   e_t = sum_k phi(nu, k) * e_{t-k} + z_t,   Var(z_t) = sigma2[nu-1].
struct PARModel {
    int order = 0;                // p
    int period = 0;               // T
    std::vector<double> phi;      // T x p, row-major by season; empty when p = 0
    std::vector<double> sigma2;   // length T

    double phi_at(int nu, int k) const {  // k = 1..order
        return phi[static_cast<std::size_t>((nu - 1) * order + (k - 1))];
    }
    double& phi_at(int nu, int k) {
        return phi[static_cast<std::size_t>((nu - 1) * order + (k - 1))];
    }
};

// Everything a fitted candidate carries.  `residuals` are the detrended,
// demeaned observations; `one_step_pred` / `pred_var` are the one-step-ahead
// predictors of the observations themselves and their error variances.
struct FittedModel {
    Segmentation segmentation;
    MeanParams mean;
    PARModel par;
    std::vector<double> residuals;
    std::vector<double> one_step_pred;
    std::vector<double> pred_var;
    double mdl_nats = 0.0;
    bool converged = true;    // mean/error alternation met tolerance
    bool degenerate = false;  // zero innovation variance (noise-free data)
    int iterations = 0;
};

}  // namespace mdlseg

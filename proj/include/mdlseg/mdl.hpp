#pragma once

#include <string>
#include <vector>

#include "mdlseg/core.hpp"

// Two-part description-length scoring.  Code lengths of estimated reals use
// half a log of the effective sample size; bounded integers use a full log
// of their bound.  The reported breakdown is in bits; the search objective
// is the same quantity in nats with model-independent constants dropped.

namespace mdlseg {

enum class MdlVariant {
    Standard,         // per-season levels, one trend, per-regime shifts
    PerSegmentTrend,  // each regime carries its own trend
    SingleMu,         // one overall level instead of per-season levels
};

std::string variant_name(MdlVariant v);
MdlVariant variant_from_name(const std::string& name);

// Bits for the mean-function parameters: trend, per-season levels and one
// shift per regime after the first, each priced at half a log of the sample
// it is estimated from (tau_{m+1} = N + 1).
double mean_param_bits(int n_obs, int period, const std::vector<int>& changepoints);

// Bits for the error-model parameters: per-season innovation variances and
// the order-p coefficients.
double par_param_bits(int period, int cycles, int order);

// Bits for the changepoint locations themselves; 0 when there are none.
double changepoint_bits(const std::vector<int>& changepoints, int n_obs);

// Bits for the two structure counts (log of each, zero-argument terms drop).
double order_bits(int num_changepoints, int par_order);

// Bits for the data given the model, from the one-step predictors and their
// error variances.  Throws DegenerateVariance when any variance is <= 0.
double residual_codelength(const std::vector<double>& x, const std::vector<double>& one_step_pred,
                           const std::vector<double>& pred_var);

// Search objective in nats (additive constants independent of the candidate
// dropped; zero-argument logs drop).  +inf for degenerate fits.
double mdl_score(const FittedModel& fit, int period, MdlVariant variant = MdlVariant::Standard);

struct MdlBreakdown {
    double mean_bits = 0.0;
    double par_bits = 0.0;
    double changepoint_bits = 0.0;
    double order_bits = 0.0;
    double model_bits = 0.0;     // sum of the four above
    double residual_bits = 0.0;
    double objective_nats = 0.0;
    MdlVariant variant = MdlVariant::Standard;
};

MdlBreakdown mdl_breakdown(const FittedModel& fit, int period,
                           MdlVariant variant = MdlVariant::Standard);

// Computes the objective, stores it on the fit and returns it.
double score_fit(FittedModel& fit, int period, MdlVariant variant = MdlVariant::Standard);

}  // namespace mdlseg

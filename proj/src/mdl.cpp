#include "mdlseg/mdl.hpp"

#include <cmath>
#include <limits>

namespace mdlseg {

namespace {

constexpr double kLog2E = 1.4426950408889634073599246810019;  // log2(e)
constexpr double kTwoPi = 6.2831853071795864769252867665590;

double inf() { return std::numeric_limits<double>::infinity(); }

// Segment lengths tau_j - tau_{j-1} for j = 1..m+1 with tau_0 = 1 and
// tau_{m+1} = N + 1.
std::vector<int> segment_lengths(const std::vector<int>& changepoints, int n_obs) {
    std::vector<int> lens;
    lens.reserve(changepoints.size() + 1);
    int prev = 1;
    for (int tau : changepoints) {
        lens.push_back(tau - prev);
        prev = tau;
    }
    lens.push_back(n_obs + 1 - prev);
    return lens;
}

}  // namespace

std::string variant_name(MdlVariant v) {
    switch (v) {
        case MdlVariant::Standard: return "standard";
        case MdlVariant::PerSegmentTrend: return "per-segment-trend";
        case MdlVariant::SingleMu: return "single-mu";
    }
    return "standard";
}

MdlVariant variant_from_name(const std::string& name) {
    if (name == "standard") return MdlVariant::Standard;
    if (name == "per-segment-trend") return MdlVariant::PerSegmentTrend;
    if (name == "single-mu") return MdlVariant::SingleMu;
    throw Error("unknown objective variant: " + name);
}

double mean_param_bits(int n_obs, int period, const std::vector<int>& changepoints) {
    const int cycles = n_obs / period;
    double bits = 0.5 * std::log2(static_cast<double>(n_obs)) +
                  0.5 * period * std::log2(static_cast<double>(cycles));
    std::vector<int> lens = segment_lengths(changepoints, n_obs);
    for (std::size_t j = 1; j < lens.size(); ++j)  // regimes after the first
        bits += 0.5 * std::log2(static_cast<double>(lens[j]));
    return bits;
}

double par_param_bits(int period, int cycles, int order) {
    return 0.5 * period * std::log2(static_cast<double>(cycles)) +
           0.5 * order * period * std::log2(2.0 * cycles);
}

double changepoint_bits(const std::vector<int>& changepoints, int n_obs) {
    if (changepoints.empty()) return 0.0;
    double bits = std::log2(static_cast<double>(n_obs));
    for (std::size_t j = 1; j < changepoints.size(); ++j)
        bits += std::log2(static_cast<double>(changepoints[j]));
    return bits;
}

double order_bits(int num_changepoints, int par_order) {
    double bits = 0.0;
    if (num_changepoints >= 1) bits += std::log2(static_cast<double>(num_changepoints));
    if (par_order >= 1) bits += std::log2(static_cast<double>(par_order));
    return bits;
}

double residual_codelength(const std::vector<double>& x, const std::vector<double>& one_step_pred,
                           const std::vector<double>& pred_var) {
    const std::size_t n = x.size();
    double bits = 0.5 * n * std::log2(kTwoPi);
    for (std::size_t i = 0; i < n; ++i) {
        if (pred_var[i] <= 0.0) throw DegenerateVariance("prediction variance <= 0");
        const double e = x[i] - one_step_pred[i];
        bits += 0.5 * std::log2(pred_var[i]) + 0.5 * kLog2E * e * e / pred_var[i];
    }
    return bits;
}

namespace {

double penalty_nats(MdlVariant variant, const Segmentation& seg, int n_obs, int period) {
    const int m = seg.num_changepoints();
    const int p = seg.par_order;
    const int cycles = n_obs / period;
    std::vector<int> lens = segment_lengths(seg.changepoints, n_obs);

    double nats = 0.5 * p * period * std::log(2.0 * cycles);
    for (std::size_t j = 1; j < seg.changepoints.size(); ++j)
        nats += std::log(static_cast<double>(seg.changepoints[j]));
    if (m >= 1) nats += std::log(static_cast<double>(m));
    if (p >= 1) nats += std::log(static_cast<double>(p));

    switch (variant) {
        case MdlVariant::Standard:
            for (std::size_t j = 1; j < lens.size(); ++j)
                nats += 0.5 * std::log(static_cast<double>(lens[j]));
            break;
        case MdlVariant::SingleMu:
            for (std::size_t j = 0; j < lens.size(); ++j)
                nats += 0.5 * std::log(static_cast<double>(lens[j]));
            break;
        case MdlVariant::PerSegmentTrend:
            for (std::size_t j = 0; j < lens.size(); ++j)
                nats += std::log(static_cast<double>(lens[j]));
            nats -= 0.5 * std::log(static_cast<double>(lens[0]));
            break;
    }
    return nats;
}

double likelihood_nats(const FittedModel& fit, int period) {
    const std::size_t n = fit.residuals.size();
    double nats = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = fit.pred_var[i];
        if (v <= 0.0) return inf();
        const int t = static_cast<int>(i) + 1;
        const double x_t = fit.residuals[i] + mean_value(fit.mean, fit.segmentation, period, t);
        const double e = x_t - fit.one_step_pred[i];
        nats += 0.5 * std::log(v) + 0.5 * e * e / v;
    }
    return nats;
}

}  // namespace

double mdl_score(const FittedModel& fit, int period, MdlVariant variant) {
    if (fit.degenerate) return inf();
    const int n = static_cast<int>(fit.residuals.size());
    const double like = likelihood_nats(fit, period);
    if (!std::isfinite(like)) return inf();
    return penalty_nats(variant, fit.segmentation, n, period) + like;
}

MdlBreakdown mdl_breakdown(const FittedModel& fit, int period, MdlVariant variant) {
    const int n = static_cast<int>(fit.residuals.size());
    const int cycles = n / period;
    MdlBreakdown out;
    out.variant = variant;
    out.mean_bits = mean_param_bits(n, period, fit.segmentation.changepoints);
    out.par_bits = par_param_bits(period, cycles, fit.segmentation.par_order);
    out.changepoint_bits = changepoint_bits(fit.segmentation.changepoints, n);
    out.order_bits = order_bits(fit.segmentation.num_changepoints(), fit.segmentation.par_order);
    out.model_bits = out.mean_bits + out.par_bits + out.changepoint_bits + out.order_bits;
    out.objective_nats = mdl_score(fit, period, variant);
    if (fit.degenerate || !std::isfinite(out.objective_nats)) {
        out.residual_bits = inf();
        return out;
    }
    std::vector<double> x(fit.residuals.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = fit.residuals[i] +
               mean_value(fit.mean, fit.segmentation, period, static_cast<int>(i) + 1);
    out.residual_bits = residual_codelength(x, fit.one_step_pred, fit.pred_var);
    return out;
}

double score_fit(FittedModel& fit, int period, MdlVariant variant) {
    fit.mdl_nats = mdl_score(fit, period, variant);
    return fit.mdl_nats;
}

}  // namespace mdlseg

#include "mdlseg/core.hpp"

#include <cmath>

namespace mdlseg {

PeriodicSeries validate_series(std::vector<double> values, int period) {
    if (period < 1) throw Error("period must be >= 1");
    if (values.empty()) throw EmptySeries("series is empty");
    if (values.size() % static_cast<std::size_t>(period) != 0)
        throw NotFullCycles("series length " + std::to_string(values.size()) +
                            " is not a multiple of period " + std::to_string(period));
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            throw NonFinite("non-finite value at t=" + std::to_string(i + 1));
    }
    PeriodicSeries s;
    s.period = period;
    s.cycles = static_cast<int>(values.size()) / period;
    s.values = std::move(values);
    return s;
}

void validate_structure(const Segmentation& seg, int n_obs) {
    if (seg.par_order < 0) throw InadmissibleSegmentation("negative autoregressive order");
    int prev = 1;
    for (int tau : seg.changepoints) {
        if (tau <= prev)
            throw InadmissibleSegmentation("changepoints must be strictly increasing and > 1");
        if (tau > n_obs)
            throw InadmissibleSegmentation("changepoint " + std::to_string(tau) +
                                           " beyond series end " + std::to_string(n_obs));
        prev = tau;
    }
}

bool SearchConstraints::is_admissible(const Segmentation& seg, int n_obs, int period) const {
    if (seg.par_order < 0 || seg.par_order > max_par_order) return false;
    if (max_changepoints >= 0 && seg.num_changepoints() > max_changepoints) return false;
    const int spacing = min_spacing(period);
    int prev = 1;
    for (std::size_t j = 0; j < seg.changepoints.size(); ++j) {
        int tau = seg.changepoints[j];
        int gap = j == 0 ? tau - 1 : tau - prev;
        if (gap < spacing) return false;
        prev = tau;
    }
    if (!seg.changepoints.empty() && seg.changepoints.back() > n_obs - spacing) return false;
    return true;
}

void SearchConstraints::require_admissible(const Segmentation& seg, int n_obs, int period) const {
    validate_structure(seg, n_obs);
    if (!is_admissible(seg, n_obs, period))
        throw InadmissibleSegmentation("segmentation violates search constraints");
}

double mean_value(const MeanParams& mean, const Segmentation& seg, int period, int t) {
    double v = mean.seasonal_means[static_cast<std::size_t>(season_of(t, period) - 1)] +
               mean.trend * t;
    // regime index: number of changepoints at or before t
    int r = 0;
    for (int tau : seg.changepoints) {
        if (tau <= t)
            ++r;
        else
            break;
    }
    if (r > 0) v += mean.shifts[static_cast<std::size_t>(r - 1)];
    return v;
}

}  // namespace mdlseg

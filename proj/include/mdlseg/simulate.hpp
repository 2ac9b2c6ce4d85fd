#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mdlseg/core.hpp"
#include "mdlseg/ga.hpp"
#include "mdlseg/rng.hpp"

// Synthetic-series generation and replicated detection studies.

namespace mdlseg {

struct ShiftSpec {
    enum class Kind {
        None,         // no level shifts
        ScaledWalk,   // regime levels follow +-delta steps at each changepoint,
                      // delta = scale * sqrt(mean stationary error variance)
        FixedLevels,  // explicit shift of each regime after the first
    };
    Kind kind = Kind::None;
    double scale = 0.0;
    std::vector<double> levels;
};

struct StudySpec {
    int replicates = 200;
    int period = 12;
    int cycles = 100;
    std::vector<int> changepoints;       // true shift times
    std::vector<double> seasonal_means;  // length period
    double trend = 0.0;
    PARModel noise;                      // true error process
    ShiftSpec shifts;
    bool iid_mode = false;  // single level, no trend, order-0 search, single-mu objective
    GaConfig ga;
    std::uint64_t seed = 1;
    int burn_in_cycles = 100;
};

// Shift step size used by the scaled-walk mode.
double shift_magnitude(const PARModel& noise, double scale);

// One synthetic path: burn-in cycles are simulated and discarded before the
// kept window, then the mean function and regime shifts are added.
PeriodicSeries simulate_series(const StudySpec& spec, Rng& rng);

struct StudyResult {
    int replicates = 0;
    std::vector<long> m_hist;    // detected changepoint counts
    std::vector<long> p_hist;    // detected orders
    std::vector<long> tau_hist;  // per-time detection counts, length N
    long failures = 0;           // replicates whose search returned no finite score
    double mean_m = 0.0;
    double sd_m = 0.0;

    double m_fraction(int m) const;
    double p_fraction(int p) const;
};

using StudyProgress = std::function<void(int done, int total)>;

// Replicated simulate-and-detect loop; each replicate owns derived random
// streams so the aggregate is independent of the worker count.
StudyResult run_study(const StudySpec& spec, const StudyProgress& progress = {});

// CSV blocks (m, p and tau histograms) plus a one-line summary.
std::string study_csv(const StudyResult& result);

}  // namespace mdlseg

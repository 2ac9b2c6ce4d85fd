#pragma once

#include <string>
#include <vector>

#include "mdlseg/core.hpp"

// Residual whiteness diagnostics.

namespace mdlseg {

struct AcfReport {
    std::vector<double> acf;  // acf[h-1] is the lag-h autocorrelation
    double bound = 0.0;       // 1.96 / sqrt(N)
};

// Mean-centered sample autocorrelations with the 1/N normalization (so the
// lag-h value shrinks toward zero as h approaches N).  Throws on an empty
// input and on a constant series (zero variance).
AcfReport sample_acf(const std::vector<double>& values, int max_lag);

struct Periodogram {
    std::vector<double> freq;      // 2*pi*k/N for k = 1..floor(N/2)
    std::vector<double> ordinate;  // |sum_t r_t exp(-i t w)|^2 / N, mean-centered
};

Periodogram periodogram(const std::vector<double>& values);

// CSV renderings (`lag,acf,bound` and `freq,ordinate`).
std::string acf_csv(const AcfReport& report);
std::string periodogram_csv(const Periodogram& gram);

}  // namespace mdlseg

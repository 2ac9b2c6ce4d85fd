#include "mdlseg/diagnostics.hpp"

#include <cmath>
#include <complex>
#include <cstdio>

namespace mdlseg {

AcfReport sample_acf(const std::vector<double>& values, int max_lag) {
    const int n = static_cast<int>(values.size());
    if (n == 0) throw EmptySeries("cannot compute autocorrelations of an empty series");
    if (max_lag < 1 || max_lag >= n) throw Error("max_lag must be in [1, N)");

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;

    double c0 = 0.0;
    for (double v : values) c0 += (v - mean) * (v - mean);
    c0 /= n;
    if (c0 <= 0.0) throw DegenerateVariance("series has zero variance");

    AcfReport report;
    report.bound = 1.96 / std::sqrt(static_cast<double>(n));
    report.acf.resize(static_cast<std::size_t>(max_lag));
    for (int h = 1; h <= max_lag; ++h) {
        double c = 0.0;
        for (int t = 0; t + h < n; ++t)
            c += (values[static_cast<std::size_t>(t)] - mean) *
                 (values[static_cast<std::size_t>(t + h)] - mean);
        report.acf[static_cast<std::size_t>(h - 1)] = c / n / c0;
    }
    return report;
}

Periodogram periodogram(const std::vector<double>& values) {
    const int n = static_cast<int>(values.size());
    if (n == 0) throw EmptySeries("cannot compute the periodogram of an empty series");

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;

    Periodogram gram;
    const int half = n / 2;
    gram.freq.reserve(static_cast<std::size_t>(half));
    gram.ordinate.reserve(static_cast<std::size_t>(half));
    const double base = 2.0 * 3.14159265358979323846264338327950288 / n;
    for (int k = 1; k <= half; ++k) {
        const double w = base * k;
        // incremental rotation avoids n trig calls per frequency
        const std::complex<double> step(std::cos(-w), std::sin(-w));
        std::complex<double> rot = step;
        std::complex<double> acc(0.0, 0.0);
        for (int t = 1; t <= n; ++t) {
            acc += (values[static_cast<std::size_t>(t - 1)] - mean) * rot;
            rot *= step;
        }
        gram.freq.push_back(w);
        gram.ordinate.push_back(std::norm(acc) / n);
    }
    return gram;
}

std::string acf_csv(const AcfReport& report) {
    std::string out = "lag,acf,bound\n";
    char buf[128];
    for (std::size_t h = 0; h < report.acf.size(); ++h) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", h + 1, report.acf[h], report.bound);
        out += buf;
    }
    return out;
}

std::string periodogram_csv(const Periodogram& gram) {
    std::string out = "freq,ordinate\n";
    char buf[128];
    for (std::size_t k = 0; k < gram.freq.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", gram.freq[k], gram.ordinate[k]);
        out += buf;
    }
    return out;
}

}  // namespace mdlseg

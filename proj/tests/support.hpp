#pragma once

// Helpers shared by the test suites: tolerance comparison and an
// independent oracle for first-order seasonal error moments.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "mdlseg/core.hpp"

namespace testsupport {

inline bool close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

// Solves the cyclic variance recursion v_nu = phi_nu^2 v_{nu-1} + sigma2_nu
// by sweeping to a fixed point, then extends to positive lags via
// gamma_nu(h) = phi_nu * gamma_{nu-1}(h-1).  Only valid for order-1 models.
inline std::vector<std::vector<double>> order1_moments_oracle(const mdlseg::PARModel& par,
                                                              int max_lag) {
    const int T = par.period;
    std::vector<double> v(static_cast<std::size_t>(T), 0.0);
    for (int sweep = 0; sweep < 2000; ++sweep)
        for (int nu = 1; nu <= T; ++nu) {
            const double prev = v[static_cast<std::size_t>(mdlseg::wrap_season(nu - 1, T) - 1)];
            const double f = par.phi_at(nu, 1);
            v[static_cast<std::size_t>(nu - 1)] =
                f * f * prev + par.sigma2[static_cast<std::size_t>(nu - 1)];
        }
    std::vector<std::vector<double>> g(static_cast<std::size_t>(T),
                                       std::vector<double>(static_cast<std::size_t>(max_lag) + 1));
    for (int nu = 1; nu <= T; ++nu)
        g[static_cast<std::size_t>(nu - 1)][0] = v[static_cast<std::size_t>(nu - 1)];
    for (int h = 1; h <= max_lag; ++h)
        for (int nu = 1; nu <= T; ++nu)
            g[static_cast<std::size_t>(nu - 1)][static_cast<std::size_t>(h)] =
                par.phi_at(nu, 1) *
                g[static_cast<std::size_t>(mdlseg::wrap_season(nu - 1, T) - 1)]
                 [static_cast<std::size_t>(h - 1)];
    return g;
}

// Simulates a first-order seasonal error path with the standard library
// generator (independent of any library sampling code), returning the last
// n values after a burn-in.
inline std::vector<double> simulate_order1_path(const mdlseg::PARModel& par, int n, int burn,
                                                std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    double prev = 0.0;
    for (int t = 1; t <= n + burn; ++t) {
        const int nu = mdlseg::season_of(t, par.period);
        const double e = par.phi_at(nu, 1) * prev +
                         std::sqrt(par.sigma2[static_cast<std::size_t>(nu - 1)]) * z(gen);
        if (t > burn) out.push_back(e);
        prev = e;
    }
    return out;
}

}  // namespace testsupport

#include "mdlseg/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>

#include "mdlseg/par.hpp"
#include "mdlseg/parallel.hpp"

namespace mdlseg {

double shift_magnitude(const PARModel& noise, double scale) {
    StationaryMoments mom = stationary_moments(noise, 0);
    double total = 0.0;
    for (int nu = 1; nu <= noise.period; ++nu) total += mom.var(nu);
    return scale * std::sqrt(total / noise.period);
}

PeriodicSeries simulate_series(const StudySpec& spec, Rng& rng) {
    const int T = spec.period;
    const int d = spec.cycles;
    const int n = d * T;
    if (T < 1 || d < 1) throw Error("period and cycles must be >= 1");
    if (spec.noise.period != T) throw Error("error-model period differs from the series period");
    if (static_cast<int>(spec.seasonal_means.size()) != T)
        throw Error("seasonal mean list must have one entry per season");
    for (double s2 : spec.noise.sigma2)
        if (s2 <= 0.0) throw NonPositiveVariance("innovation variance must be > 0");

    const int burn = std::max(spec.burn_in_cycles, 100);
    const int total = (burn + d) * T;
    const int p = spec.noise.order;
    std::vector<double> path(static_cast<std::size_t>(total));
    for (int t = 1; t <= total; ++t) {
        const int nu = season_of(t, T);
        double e = std::sqrt(spec.noise.sigma2[static_cast<std::size_t>(nu - 1)]) * rng.normal();
        for (int k = 1; k <= p && t - k >= 1; ++k)
            e += spec.noise.phi_at(nu, k) * path[static_cast<std::size_t>(t - k - 1)];
        path[static_cast<std::size_t>(t - 1)] = e;
    }

    const int m = static_cast<int>(spec.changepoints.size());
    std::vector<double> level(static_cast<std::size_t>(m));
    switch (spec.shifts.kind) {
        case ShiftSpec::Kind::None:
            break;
        case ShiftSpec::Kind::ScaledWalk: {
            const double delta = shift_magnitude(spec.noise, spec.shifts.scale);
            double cur = 0.0;
            for (int j = 0; j < m; ++j) {
                cur += rng.bernoulli(0.5) ? delta : -delta;
                level[static_cast<std::size_t>(j)] = cur;
            }
            break;
        }
        case ShiftSpec::Kind::FixedLevels:
            if (static_cast<int>(spec.shifts.levels.size()) != m)
                throw Error("fixed shift list must have one entry per changepoint");
            level = spec.shifts.levels;
            break;
    }

    std::vector<double> x(static_cast<std::size_t>(n));
    int regime = 0;
    for (int t = 1; t <= n; ++t) {
        while (regime < m && spec.changepoints[static_cast<std::size_t>(regime)] <= t) ++regime;
        double v = spec.seasonal_means[static_cast<std::size_t>(season_of(t, T) - 1)] +
                   spec.trend * t + path[static_cast<std::size_t>(burn * T + t - 1)];
        if (regime > 0) v += level[static_cast<std::size_t>(regime - 1)];
        x[static_cast<std::size_t>(t - 1)] = v;
    }
    return validate_series(std::move(x), T);
}

double StudyResult::m_fraction(int m) const {
    if (m < 0 || m >= static_cast<int>(m_hist.size()) || replicates == 0) return 0.0;
    return static_cast<double>(m_hist[static_cast<std::size_t>(m)]) / replicates;
}

double StudyResult::p_fraction(int p) const {
    if (p < 0 || p >= static_cast<int>(p_hist.size()) || replicates == 0) return 0.0;
    return static_cast<double>(p_hist[static_cast<std::size_t>(p)]) / replicates;
}

StudyResult run_study(const StudySpec& spec, const StudyProgress& progress) {
    const int n = spec.period * spec.cycles;
    const int reps = spec.replicates;
    if (reps < 1) throw Error("replicates must be >= 1");

    struct Replicate {
        int m = 0;
        int p = 0;
        std::vector<int> taus;
        bool failed = false;
    };
    std::vector<Replicate> out(static_cast<std::size_t>(reps));

    std::mutex progress_mutex;
    int done = 0;

    parallel_blocks(reps, worker_count(spec.ga.threads), [&](int r) {
        Rng sim_rng(derive_stream(spec.seed, 3, static_cast<std::uint64_t>(r)));
        PeriodicSeries x = simulate_series(spec, sim_rng);

        GaConfig ga = spec.ga;
        ga.seed = derive_stream(spec.seed, 4, static_cast<std::uint64_t>(r));
        ga.threads = 1;  // replicates are the parallel unit here
        if (spec.iid_mode) {
            ga.constraints.max_par_order = 0;
            ga.include_trend = false;
            ga.variant = MdlVariant::SingleMu;
        }

        Replicate& rep = out[static_cast<std::size_t>(r)];
        try {
            FittedModel fit = run_ga(x, ga);
            if (!std::isfinite(fit.mdl_nats)) {
                rep.failed = true;
            } else {
                rep.m = fit.segmentation.num_changepoints();
                rep.p = fit.segmentation.par_order;
                rep.taus = fit.segmentation.changepoints;
            }
        } catch (const Error&) {
            rep.failed = true;
        }
        if (progress) {
            std::lock_guard<std::mutex> guard(progress_mutex);
            progress(++done, reps);
        }
    });

    StudyResult result;
    result.replicates = reps;
    result.tau_hist.assign(static_cast<std::size_t>(n), 0);
    int max_m = 0;
    int max_p = 0;
    for (const Replicate& rep : out) {
        if (rep.failed) continue;
        max_m = std::max(max_m, rep.m);
        max_p = std::max(max_p, rep.p);
    }
    result.m_hist.assign(static_cast<std::size_t>(max_m) + 1, 0);
    result.p_hist.assign(static_cast<std::size_t>(max_p) + 1, 0);

    double sum = 0.0;
    double sum_sq = 0.0;
    long counted = 0;
    for (const Replicate& rep : out) {
        if (rep.failed) {
            ++result.failures;
            continue;
        }
        ++result.m_hist[static_cast<std::size_t>(rep.m)];
        ++result.p_hist[static_cast<std::size_t>(rep.p)];
        for (int tau : rep.taus) ++result.tau_hist[static_cast<std::size_t>(tau - 1)];
        sum += rep.m;
        sum_sq += static_cast<double>(rep.m) * rep.m;
        ++counted;
    }
    if (counted > 0) result.mean_m = sum / counted;
    if (counted > 1)
        result.sd_m = std::sqrt((sum_sq - sum * sum / counted) / (counted - 1));
    return result;
}

std::string study_csv(const StudyResult& result) {
    std::string out;
    char buf[160];
    out += "m,count\n";
    for (std::size_t m = 0; m < result.m_hist.size(); ++m) {
        std::snprintf(buf, sizeof(buf), "%zu,%ld\n", m, result.m_hist[m]);
        out += buf;
    }
    out += "\np,count\n";
    for (std::size_t p = 0; p < result.p_hist.size(); ++p) {
        std::snprintf(buf, sizeof(buf), "%zu,%ld\n", p, result.p_hist[p]);
        out += buf;
    }
    out += "\nt,count\n";
    for (std::size_t t = 0; t < result.tau_hist.size(); ++t) {
        if (result.tau_hist[t] == 0) continue;
        std::snprintf(buf, sizeof(buf), "%zu,%ld\n", t + 1, result.tau_hist[t]);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "\n{\"replicates\": %d, \"failures\": %ld, \"mean_m\": %.6g, \"sd_m\": %.6g}\n",
                  result.replicates, result.failures, result.mean_m, result.sd_m);
    out += buf;
    return out;
}

}  // namespace mdlseg

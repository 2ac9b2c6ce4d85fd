#include "mdlseg/ga.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <utility>

#include "mdlseg/parallel.hpp"
#include "mdlseg/regression.hpp"

namespace mdlseg {

namespace {

constexpr int kDuplicateLimit = 100;

double inf() { return std::numeric_limits<double>::infinity(); }

int worst_index(const Island& island) {
    int worst = 0;
    for (int i = 1; i < static_cast<int>(island.size()); ++i)
        if (island[static_cast<std::size_t>(i)].fitness > island[static_cast<std::size_t>(worst)].fitness)
            worst = i;
    return worst;
}

int best_index(const Island& island) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(island.size()); ++i)
        if (island[static_cast<std::size_t>(i)].fitness < island[static_cast<std::size_t>(best)].fitness)
            best = i;
    return best;
}

bool contains_model(const Island& island, const Segmentation& seg) {
    for (const Chromosome& c : island)
        if (c.seg.same_model(seg)) return true;
    return false;
}

// Members ordered best-first by fitness, stable in member index.
std::vector<int> fitness_order(const Island& island) {
    std::vector<int> order(island.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return island[static_cast<std::size_t>(a)].fitness < island[static_cast<std::size_t>(b)].fitness;
    });
    return order;
}

// Shared memoized fitness over (order, changepoints); the underlying fit is
// deterministic, so cache hits cannot perturb results across thread counts.
class FitnessEvaluator {
public:
    FitnessEvaluator(const PeriodicSeries& x, const GaConfig& cfg) : x_(x), cfg_(cfg) {}

    double operator()(const Segmentation& seg) {
        cfg_.constraints.require_admissible(seg, x_.length(), x_.period);
        const std::pair<int, std::vector<int>> key(seg.par_order, seg.changepoints);
        {
            std::lock_guard<std::mutex> guard(mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end()) return it->second;
        }
        double value;
        try {
            FitOptions opts;
            opts.include_trend = cfg_.include_trend;
            FittedModel fit = cochrane_orcutt(x_, seg, opts);
            value = mdl_score(fit, x_.period, cfg_.variant);
        } catch (const FitError&) {
            value = inf();
        }
        std::lock_guard<std::mutex> guard(mutex_);
        auto inserted = cache_.emplace(key, value);
        if (inserted.second) ++evaluations_;
        return value;
    }

    long evaluations() const { return evaluations_; }

private:
    const PeriodicSeries& x_;
    const GaConfig& cfg_;
    std::map<std::pair<int, std::vector<int>>, double> cache_;
    long evaluations_ = 0;
    std::mutex mutex_;
};

}  // namespace

GaConfig resolve_defaults(GaConfig cfg, int n_obs, int period) {
    const int cycles = n_obs / period;
    if (cfg.new_cp_prob < 0.0) cfg.new_cp_prob = 6.0 / n_obs;
    if (cfg.crossover_prob < 0.0)
        cfg.crossover_prob = 1.0 - static_cast<double>(cfg.constraints.min_cycles_between) / cycles;
    cfg.new_cp_prob = std::clamp(cfg.new_cp_prob, 0.0, 1.0);
    if (cfg.crossover_prob < 0.0 || cfg.crossover_prob > 1.0)
        throw Error("crossover probability outside [0, 1]");
    if (cfg.mutation_prob < 0.0 || cfg.mutation_prob > 1.0)
        throw Error("mutation probability outside [0, 1]");
    if (cfg.population < 1 || cfg.islands < 1 || cfg.migration_interval < 1 || cfg.migrants < 1 ||
        cfg.convergence_migrations < 1 || cfg.max_migrations < 1)
        throw Error("all genetic-search counts must be >= 1");
    if (cfg.constraints.max_par_order < 0) throw Error("max_par_order must be >= 0");
    if (cfg.constraints.min_cycles_between < 1) throw Error("min_cycles_between must be >= 1");
    return cfg;
}

std::vector<int> draw_changepoints(Rng& rng, int n_obs, int period, const GaConfig& cfg) {
    const int spacing = cfg.constraints.min_spacing(period);
    std::vector<int> taus;
    int t = 1 + spacing;
    const int last_slot = n_obs - spacing;
    while (t <= last_slot) {
        if (rng.bernoulli(cfg.new_cp_prob)) {
            taus.push_back(t);
            t += spacing;
        } else {
            ++t;
        }
    }
    return taus;
}

namespace {

// Scan draw that also respects an explicit changepoint cap (redraw, then
// truncate as a last resort; truncation preserves admissibility).
std::vector<int> draw_capped_changepoints(Rng& rng, int n_obs, int period, const GaConfig& cfg) {
    std::vector<int> taus = draw_changepoints(rng, n_obs, period, cfg);
    const int cap = cfg.constraints.max_changepoints;
    if (cap >= 0) {
        for (int attempt = 0; attempt < 1000 && static_cast<int>(taus.size()) > cap; ++attempt)
            taus = draw_changepoints(rng, n_obs, period, cfg);
        if (static_cast<int>(taus.size()) > cap) taus.resize(static_cast<std::size_t>(cap));
    }
    return taus;
}

}  // namespace

Segmentation random_segmentation(Rng& rng, int n_obs, int period, const GaConfig& cfg) {
    Segmentation seg;
    seg.par_order = rng.uniform_int(0, cfg.constraints.max_par_order);
    seg.changepoints = draw_capped_changepoints(rng, n_obs, period, cfg);
    return seg;
}

Island init_island(FitnessFn fitness, const GaConfig& cfg, int n_obs, int period, Rng& rng) {
    Island island;
    island.reserve(static_cast<std::size_t>(cfg.population));
    int failed_draws = 0;
    const int max_failed = 200 * cfg.population;
    while (static_cast<int>(island.size()) < cfg.population) {
        Segmentation seg = random_segmentation(rng, n_obs, period, cfg);
        if (contains_model(island, seg) && failed_draws++ < max_failed) continue;
        island.push_back({std::move(seg), 0.0});
        island.back().fitness = fitness(island.back().seg);
    }
    return island;
}

int rank_select(const Island& island, Rng& rng) {
    const int n = static_cast<int>(island.size());
    std::vector<double> weight(static_cast<std::size_t>(n));
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        int rank = 0;  // number of strictly worse members
        for (int j = 0; j < n; ++j)
            if (island[static_cast<std::size_t>(j)].fitness > island[static_cast<std::size_t>(i)].fitness)
                ++rank;
        weight[static_cast<std::size_t>(i)] = rank + 1.0;
        total += weight[static_cast<std::size_t>(i)];
    }
    double u = rng.uniform() * total;
    for (int i = 0; i < n; ++i) {
        u -= weight[static_cast<std::size_t>(i)];
        if (u < 0.0) return i;
    }
    return n - 1;
}

Segmentation crossover(const Chromosome& mother, const Chromosome& father, const GaConfig& cfg,
                       int period, Rng& rng) {
    if (!rng.bernoulli(cfg.crossover_prob)) {
        // no mixing: the fitter parent survives as the child
        return father.fitness < mother.fitness ? father.seg : mother.seg;
    }
    Segmentation child;
    child.par_order = rng.bernoulli(0.5) ? mother.seg.par_order : father.seg.par_order;

    // Duplicates are kept on purpose: a time present in both parents gets a second
    // chance in the scan below, so locations the parents agree on survive more often.
    std::vector<int> merged = mother.seg.changepoints;
    merged.insert(merged.end(), father.seg.changepoints.begin(), father.seg.changepoints.end());
    std::sort(merged.begin(), merged.end());

    const int spacing = cfg.constraints.min_spacing(period);
    int last_kept = std::numeric_limits<int>::min();
    for (int tau : merged) {
        if (last_kept != std::numeric_limits<int>::min() && tau - last_kept < spacing) continue;
        if (rng.bernoulli(0.5)) {
            child.changepoints.push_back(tau);
            last_kept = tau;
        }
    }
    return child;
}

Segmentation mutate(const Segmentation& seg, const GaConfig& cfg, int n_obs, int period,
                    Rng& rng) {
    if (!rng.bernoulli(cfg.mutation_prob)) return seg;
    Segmentation out = seg;
    if (!rng.bernoulli(0.5)) out.par_order = rng.uniform_int(0, cfg.constraints.max_par_order);
    if (!rng.bernoulli(0.5)) out.changepoints = draw_capped_changepoints(rng, n_obs, period, cfg);
    return out;
}

bool steady_state_step(Island& island, const FitnessFn& fitness, const GaConfig& cfg, int n_obs,
                       int period, Rng& rng) {
    for (int attempt = 0; attempt < kDuplicateLimit; ++attempt) {
        const int mi = rank_select(island, rng);
        int fi = mi;
        if (island.size() > 1) {
            for (int k = 0; k < 1000 && fi == mi; ++k) fi = rank_select(island, rng);
            if (fi == mi) fi = (mi + 1) % static_cast<int>(island.size());
        }
        Segmentation child = crossover(island[static_cast<std::size_t>(mi)],
                                       island[static_cast<std::size_t>(fi)], cfg, period, rng);
        child = mutate(child, cfg, n_obs, period, rng);
        if (cfg.constraints.max_changepoints >= 0 &&
            child.num_changepoints() > cfg.constraints.max_changepoints)
            continue;  // outside the capped search space; counts toward the limit
        if (contains_model(island, child)) continue;
        const double f = fitness(child);
        const int worst = worst_index(island);
        if (cfg.accept_only_better && f >= island[static_cast<std::size_t>(worst)].fitness)
            return false;
        island[static_cast<std::size_t>(worst)] = {std::move(child), f};
        return true;
    }
    return false;  // locally converged: only duplicates produced
}

void migrate_islands(std::vector<Island>& islands, int migrants, Rng& rng) {
    const int n_islands = static_cast<int>(islands.size());
    if (n_islands < 2) return;
    std::vector<std::vector<Chromosome>> best_of(islands.size());
    for (std::size_t i = 0; i < islands.size(); ++i) {
        std::vector<int> order = fitness_order(islands[i]);
        const int take = std::min<int>(migrants, static_cast<int>(order.size()));
        for (int k = 0; k < take; ++k)
            best_of[i].push_back(islands[i][static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
    }
    for (int j = 0; j < n_islands; ++j) {
        int donor = rng.uniform_int(0, n_islands - 2);
        if (donor >= j) ++donor;
        Island& target = islands[static_cast<std::size_t>(j)];
        // k-th best of the donor lands on the k-th worst pre-migration slot,
        // so one event never overwrites its own migrants.
        const std::vector<int> order = fitness_order(target);
        const std::vector<Chromosome>& incoming = best_of[static_cast<std::size_t>(donor)];
        const int take = std::min<int>(static_cast<int>(incoming.size()),
                                       static_cast<int>(order.size()));
        for (int k = 0; k < take; ++k)
            target[static_cast<std::size_t>(order[order.size() - 1 - static_cast<std::size_t>(k)])] =
                incoming[static_cast<std::size_t>(k)];
    }
}

FittedModel run_ga(const PeriodicSeries& x, const GaConfig& raw_cfg, GaReport* report) {
    const int n = x.length();
    const int T = x.period;
    const GaConfig cfg = resolve_defaults(raw_cfg, n, T);

    FitnessEvaluator evaluator(x, cfg);
    FitnessFn fitness = [&evaluator](const Segmentation& seg) { return evaluator(seg); };

    std::vector<Rng> island_rng;
    island_rng.reserve(static_cast<std::size_t>(cfg.islands));
    for (int i = 0; i < cfg.islands; ++i) island_rng.emplace_back(derive_stream(cfg.seed, 1, static_cast<std::uint64_t>(i)));
    Rng master(derive_stream(cfg.seed, 2, 0));

    const int workers = worker_count(cfg.threads);
    std::vector<Island> islands(static_cast<std::size_t>(cfg.islands));
    parallel_blocks(cfg.islands, workers, [&](int i) {
        islands[static_cast<std::size_t>(i)] =
            init_island(fitness, cfg, n, T, island_rng[static_cast<std::size_t>(i)]);
    });

    auto archipelago_best = [&]() -> const Chromosome& {
        const Chromosome* best = &islands[0][static_cast<std::size_t>(best_index(islands[0]))];
        for (std::size_t i = 1; i < islands.size(); ++i) {
            const Chromosome& cand = islands[i][static_cast<std::size_t>(best_index(islands[i]))];
            if (cand.fitness < best->fitness) best = &cand;
        }
        return *best;
    };

    Segmentation champion;
    double champion_fitness = inf();
    bool have_champion = false;
    int unchanged = 0;
    int migrations = 0;
    bool converged = false;

    for (int mig = 1; mig <= cfg.max_migrations; ++mig) {
        parallel_blocks(cfg.islands, workers, [&](int i) {
            for (int g = 0; g < cfg.migration_interval; ++g)
                steady_state_step(islands[static_cast<std::size_t>(i)], fitness, cfg, n, T,
                                  island_rng[static_cast<std::size_t>(i)]);
        });
        migrate_islands(islands, cfg.migrants, master);
        migrations = mig;

        const Chromosome& best = archipelago_best();
        if (cfg.on_migration) cfg.on_migration({mig, best.fitness, best.seg});
        if (have_champion && best.seg.same_model(champion)) {
            if (++unchanged >= cfg.convergence_migrations) {
                champion_fitness = best.fitness;
                converged = true;
                break;
            }
        } else {
            unchanged = 0;
        }
        champion = best.seg;
        champion_fitness = best.fitness;
        have_champion = true;
    }

    if (report) {
        report->migrations = migrations;
        report->evaluations = evaluator.evaluations();
        report->converged = converged;
    }

    FitOptions opts;
    opts.include_trend = cfg.include_trend;
    try {
        FittedModel fit = cochrane_orcutt(x, champion, opts);
        score_fit(fit, T, cfg.variant);
        return fit;
    } catch (const FitError&) {
        FittedModel fit;
        fit.segmentation = champion;
        fit.degenerate = true;
        fit.mdl_nats = champion_fitness;
        return fit;
    }
}

}  // namespace mdlseg

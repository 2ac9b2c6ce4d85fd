#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mdlseg/core.hpp"
#include "mdlseg/mdl.hpp"
#include "mdlseg/rng.hpp"

// Island-model genetic search over (order, changepoints) minimizing the
// description-length objective.  Islands evolve independently between
// migration barriers; every unit of randomness comes from a stream derived
// from the master seed, so results are reproducible bit-for-bit regardless
// of the worker count.

namespace mdlseg {

struct Chromosome {
    Segmentation seg;
    double fitness = 0.0;  // objective in nats; +inf for failed fits
};

using Island = std::vector<Chromosome>;

struct MigrationEvent {
    int migration = 0;   // 1-based event index
    double best_mdl = 0.0;
    Segmentation best;
};

struct GaConfig {
    int population = 30;           // chromosomes per island
    double new_cp_prob = -1.0;     // per-slot scan probability; < 0 derives 6/N
    double crossover_prob = -1.0;  // < 0 derives 1 - min_cycles_between/d
    double mutation_prob = 0.05;
    int islands = 40;
    int migration_interval = 5;    // generations between migration events
    int migrants = 1;              // chromosomes copied per island per event
    int convergence_migrations = 10;
    int max_migrations = 25;
    SearchConstraints constraints;
    std::uint64_t seed = 1;
    MdlVariant variant = MdlVariant::Standard;
    bool include_trend = true;
    bool accept_only_better = false;  // off: the child always replaces the worst
    int threads = 0;                  // 0: MDLSEG_THREADS, else machine parallelism
    std::function<void(const MigrationEvent&)> on_migration;
};

// Fills derived defaults (scan and crossover probabilities) and validates
// ranges.  Fitness is minimized and must never be NaN (failed fits map to
// +inf).
GaConfig resolve_defaults(GaConfig cfg, int n_obs, int period);

using FitnessFn = std::function<double(const Segmentation&)>;

// Left-to-right coin scan over admissible slots: a success places a
// changepoint and advances the scan by the minimum spacing.
std::vector<int> draw_changepoints(Rng& rng, int n_obs, int period, const GaConfig& cfg);

Segmentation random_segmentation(Rng& rng, int n_obs, int period, const GaConfig& cfg);

// Population of distinct chromosomes (duplicates redrawn).
Island init_island(FitnessFn fitness, const GaConfig& cfg, int n_obs, int period, Rng& rng);

// Draw index with probability proportional to 1 + (count of strictly worse
// members), so ties share a rank and an all-tied island selects uniformly.
int rank_select(const Island& island, Rng& rng);

// With the crossover probability combine both parents (order from either
// parent, changepoints kept with probability 1/2 in a left-to-right scan of
// the merged locations, later candidates closer than the minimum spacing to
// a kept one discarded); otherwise copy the fitter parent.
Segmentation crossover(const Chromosome& mother, const Chromosome& father, const GaConfig& cfg,
                       int period, Rng& rng);

// With the mutation probability re-draw: the order keeps with probability
// 1/2 (else uniform on 0..max), the changepoint set keeps with probability
// 1/2 (else a fresh scan draw).
Segmentation mutate(const Segmentation& seg, const GaConfig& cfg, int n_obs, int period, Rng& rng);

// One generation: breed one child and replace the island's least fit member.
// Children duplicating a current member are discarded; after 100 consecutive
// discards the island is locally converged and the step is a no-op (returns
// false).
bool steady_state_step(Island& island, const FitnessFn& fitness, const GaConfig& cfg, int n_obs,
                       int period, Rng& rng);

// For each island, an independently chosen donor island's best members
// replace its worst members (snapshot taken before any copying).
void migrate_islands(std::vector<Island>& islands, int migrants, Rng& rng);

struct GaReport {
    int migrations = 0;
    long evaluations = 0;       // distinct fitness evaluations
    bool converged = false;     // stopped on an unchanged best
};

// Full search; returns the best model refitted and scored.
FittedModel run_ga(const PeriodicSeries& x, const GaConfig& cfg, GaReport* report = nullptr);

}  // namespace mdlseg

#pragma once

#include <cstdint>
#include <vector>

#include "polymer/env.hpp"
#include "polymer/rng.hpp"
#include "polymer/walk.hpp"

namespace polymer {

struct ModelParams {
    int d = 1;
    double beta = 0.0;
    double t = 1.0;
    void validate() const;
};

// log Z_t with a delta-method standard error on the log scale. All
// partition quantities are carried in log space (max-shifted sums).
struct PartitionEstimate {
    double log_Z = 0.0;
    double std_error = 0.0;
    long n_samples = 0;
    ModelParams params;
    std::uint64_t env_seed = 0;
    double ess = 0.0;
    bool degenerate = false;          // all weights collapsed onto the shift
    // series estimator only:
    double truncation_bound = 0.0;    // annealed bound on the dropped tail
    bool truncation_flagged = false;
};

enum class GibbsFunctional { jump_count, replica_overlap, endpoint_displacement };

struct GibbsAverage {
    GibbsFunctional tag = GibbsFunctional::jump_count;
    double value = 0.0;
    double std_error = 0.0;
    double effective_sample_size = 0.0;
    bool low_confidence = false;      // ESS < 10
};

struct FreeEnergyPoint {
    double p_hat = 0.0;
    double se = 0.0;                  // environment-to-environment
    double min_ess = 0.0;
    std::vector<double> per_env;
    std::vector<bool> flagged;        // per-environment degeneracy flags
};

// H_t(b) = sum over constancy intervals of the per-site increments
double hamiltonian(EnvironmentSheet& sheet, const JumpPath& path);

// Hamiltonian of the path restricted to [0, u] (u <= path horizon)
double hamiltonian_up_to(EnvironmentSheet& sheet, const JumpPath& path, double u);

// Var(B - B') for the two paths: t1 + t2 - 2 * intersection_time
double field_distance_sq(const JumpPath& p1, const JumpPath& p2);

// Monte Carlo over free-walk paths via max-shifted log-sum-exp. A
// proposal_rate > 0 samples paths at that jump rate and reweights by the
// exact path-law density ratio (default: the free rate 2d, plain
// sample-mean estimator).
PartitionEstimate estimate_partition(EnvironmentSheet& sheet, const ModelParams& params,
                                     long n_samples, Rng& rng,
                                     double proposal_rate = -1.0);

// Truncated jump-count series: for each n <= n_max, the simplex integral
// is estimated with quad_samples sorted-uniform draws shared across the
// (2d)^n discrete paths. Reports the annealed truncation bound
// P(N_t > n_max) * exp(beta^2 t / 2) and flags it above rel_tol * Z.
PartitionEstimate estimate_partition_series(EnvironmentSheet& sheet, const ModelParams& params,
                                            int n_max, int quad_samples, Rng& rng,
                                            double rel_tol = 1e-6);

// (1/t) E[log Z_t] over n_env independent sheets
FreeEnergyPoint free_energy_point(const ModelParams& params, int n_env, long n_paths,
                                  std::uint64_t seed, double proposal_rate = -1.0,
                                  int workers = 1);

// log M_t = log Z_t - beta^2 t / 2
double martingale_log(double log_Z, const ModelParams& params);

// Self-normalized importance sampling from the free walk. replica_overlap
// uses two independent weighted ensembles on one sheet and integrates
// delta_0(b^1 - b^2) exactly on the merged partition.
GibbsAverage gibbs_average(EnvironmentSheet& sheet, const ModelParams& params,
                           GibbsFunctional tag, long n_samples, Rng& rng);

} // namespace polymer

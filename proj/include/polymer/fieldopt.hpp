#pragma once

#include <cstdint>
#include <vector>

#include "polymer/env.hpp"
#include "polymer/rng.hpp"

namespace polymer {

struct TimeGrid {
    double horizon = 1.0;
    int steps = 1;
    double delta() const { return horizon / steps; }
};

// Dense i.i.d. N(0, delta) increments over (step, site) cells of the box
// [-R, R]^d. Draws are keyed by (seed, site, step), so the field at a
// given cell does not depend on the box radius -- environments with the
// same seed and step count are coupled across budgets.
class GridEnvironment {
public:
    GridEnvironment(TimeGrid grid, int d, int box_radius, std::uint64_t seed);

    double increment(int step, std::size_t site_index) const {
        return increments_[static_cast<std::size_t>(step) * n_sites_ + site_index];
    }

    std::size_t site_count() const { return n_sites_; }
    std::size_t origin_index() const { return origin_; }
    // -1 if the neighbor leaves the box; dir in [0, 2d): (axis, -/+)
    long neighbor_index(std::size_t site_index, int dir) const;
    Site site_coords(std::size_t site_index) const;
    std::size_t index_of(const Site& coords) const;

    TimeGrid grid;
    int d;
    int box_radius;
    std::uint64_t seed;

    std::vector<double>& raw_increments() { return increments_; }

private:
    std::size_t n_sites_;
    std::size_t origin_;
    std::vector<std::size_t> strides_;
    std::vector<double> increments_;
};

// Path-class constraints: at most max_jumps jumps; consecutive jumps (and
// the first/last jump vs the interval endpoints) separated by at least
// min_separation_steps grid boundaries; endpoint_buffer_steps adds an
// extra endpoint-only separation.
struct ConstraintSpec {
    int max_jumps = 0;
    int min_separation_steps = 0;
    int endpoint_buffer_steps = 0;
};

// Grid path: jumps happen at grid boundaries (step indices in [1, K-1]).
struct GridPath {
    std::vector<int> jump_steps;
    std::vector<Site> positions;      // size jump_steps.size() + 1, starts at origin
};

struct SupResult {
    double value = 0.0;
    GridPath argmax_path;
    int jumps_used = 0;
};

// Exact maximum of the accumulated field over all admissible grid paths.
// DP state: (step, site, jumps_used, boundaries-since-last-jump clamped).
SupResult dp_sup_field(const GridEnvironment& genv, const ConstraintSpec& constraints,
                       std::size_t state_cap = 1'000'000'000);

// Exhaustive oracle with the same tie-breaking rule.
SupResult brute_force_sup(const GridEnvironment& genv, const ConstraintSpec& constraints,
                          std::size_t path_cap = 10'000'000);

// Re-evaluates a grid path against the field, summing in step order (the
// same order the DP uses, so the argmax reproduces its value exactly).
double evaluate_grid_path(const GridEnvironment& genv, const GridPath& path);

struct FRow {
    double t = 0.0;
    int K = 0;
    double F_hat = 0.0;
    double se = 0.0;
    double envelope_ratio = 0.0;      // F_hat * t / sqrt(floor(r t) * t)
};

struct FTable {
    double r = 0.0;
    double varrho = 0.0;
    std::vector<FRow> rows;           // one per horizon, increasing t
    double F = 0.0;                   // largest-horizon estimate
    double se = 0.0;
};

// (1/t) E sup B over the jump-budgeted class, per horizon in t_list; the
// largest horizon is reported as the F(r) estimate (no extrapolation).
FTable estimate_F(double r, const std::vector<double>& t_list, int K_per_unit_time,
                  int n_env, int d, std::uint64_t seed, int workers = 1);

// Same with the 2*varrho jump-separation constraint active. varrho = 0
// reproduces estimate_F exactly on the same seeds.
FTable estimate_F_rho(double r, double varrho, const std::vector<double>& t_list,
                      int K_per_unit_time, int n_env, int d, std::uint64_t seed,
                      int workers = 1);

struct UpsilonRow {
    double t = 0.0;
    double upsilon = 0.0;
    double se = 0.0;
};

// Lower-bound estimator of (1/t) E sup A over rho-tubes of jump times:
// bases are the DP argmax plus sampled admissible paths; per base, an
// inner DP maximizes the field difference over per-jump windows
// |s'_j - s_j| <= rho (both orientations). Restricting the base set makes
// this a lower bound of the pair supremum.
std::vector<UpsilonRow> estimate_upsilon(double r, double rho,
                                         const std::vector<double>& t_list, int n_env,
                                         int n_bases, int d, std::uint64_t seed,
                                         int workers = 1);

struct C0Estimate {
    double value = 0.0;
    double se = 0.0;
};

// C0 = F(1)^2 / 8, first-order error propagation
C0Estimate estimate_C0(double F1_hat, double se);

// floor((C0/2) * beta^2 / log^2(beta) * t); requires beta > 1
long default_jump_budget(double beta, double C0_hat, double t);

} // namespace polymer

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polymer/env.hpp"
#include "polymer/rng.hpp"

namespace polymer {

// Continuous-time nearest-neighbor path on [0, horizon]: the walk sits at
// positions[j] during [jump_times[j-1], jump_times[j]) (cadlag), with
// positions[0] occupied from time 0.
struct JumpPath {
    double horizon = 0.0;
    Site start;
    std::vector<double> jump_times;   // nondecreasing, in (0, horizon]
    std::vector<Site> positions;      // size jump_times.size() + 1

    int dimension() const { return static_cast<int>(start.size()); }
    std::size_t jump_count() const { return jump_times.size(); }

    const Site& position_at(double s) const;

    // structural invariants: nondecreasing jump times in (0,t],
    // nearest-neighbor steps, matching lengths
    void validate() const;

    // `(t, start, [(s_j, x_j)...])` one-line record for replay/debugging
    std::string serialize() const;
    static JumpPath parse(const std::string& record);
};

// Free walk: i.i.d. Exponential(rate) holding times, uniform neighbor
// jumps, truncated at the horizon. rate < 0 means the default 2d.
JumpPath sample_path(Rng& rng, int d, double t, double rate = -1.0);

// Law of b^1 - b^2 for independent rate-2d walks: same jump mechanism at
// rate 4d.
JumpPath difference_walk_sampler(Rng& rng, int d, double t);

// All nearest-neighbor position sequences x_0 = 0, ..., x_n; exactly
// (2d)^n of them. Guarded against materializing more than 10^7.
std::vector<std::vector<Site>> enumerate_discrete_paths(int d, int n);

// Lebesgue time the two paths coincide, computed exactly on the merged
// jump-time partition.
double intersection_time(const JumpPath& p1, const JumpPath& p2);

// Lebesgue time the path spends at `site`
double occupation_time(const JumpPath& p, const Site& site);

// Volume of the ordered-times simplex S_{n,t}: t^n / n!
double simplex_volume(int n, double t);

} // namespace polymer

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace polymer {

using Site = std::vector<int>;

// Recorded values of one per-site Brownian motion. The anchor (0, 0) is
// stored explicitly once the site is first touched. `next_ordinal` counts
// the Gaussian draws consumed by this site's stream.
struct SiteTimeline {
    std::map<double, double> points;
    std::uint64_t next_ordinal = 0;
};

// Lazily materialized environment {W(t,x)}: one standard Brownian motion
// per lattice site, independent across sites. Values are sampled exactly
// (Brownian bridge between recorded points, fresh Gaussian extension past
// the last one) and recorded, so repeated queries are consistent.
//
// A sheet is a single-writer object: queries mutate recorded state, so a
// given sheet must be driven from one worker at a time. Parallelism goes
// across sheets, each with its own derived seed.
class EnvironmentSheet {
public:
    EnvironmentSheet(int dimension, std::uint64_t master_seed);

    // W(t, site); draws and records any missing conditioning points
    double value_at(const Site& site, double t);

    // W(t2, site) - W(t1, site), both endpoints recorded
    double increment(const Site& site, double t1, double t2);

    // Versioned textual record set; round-trips recorded points and the
    // per-site draw ordinals bit-for-bit. Format (one record per line):
    //   POLYENV 1
    //   d <dimension>
    //   seed <master_seed>
    //   sites <count>
    //   site <c_1> ... <c_d> <n_points> <next_ordinal>
    //   p <time:hexfloat> <value:hexfloat>     (n_points lines)
    std::string snapshot() const;
    static EnvironmentSheet restore(const std::string& blob);

    int dimension() const { return d_; }
    std::uint64_t master_seed() const { return seed_; }
    const std::map<Site, SiteTimeline>& timelines() const { return timelines_; }

private:
    SiteTimeline& timeline(const Site& site);
    double next_normal(const Site& site, SiteTimeline& tl);

    int d_;
    std::uint64_t seed_;
    std::map<Site, SiteTimeline> timelines_;
};

} // namespace polymer

#include "polymer/fieldopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "polymer/parallel.hpp"

namespace polymer {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

GridEnvironment::GridEnvironment(TimeGrid g, int dim, int radius, std::uint64_t s)
    : grid(g), d(dim), box_radius(radius), seed(s) {
    if (dim < 1 || radius < 0 || g.steps < 1 || g.horizon <= 0.0)
        throw std::invalid_argument("GridEnvironment: bad parameters");
    const std::size_t side = static_cast<std::size_t>(2 * radius + 1);
    n_sites_ = 1;
    strides_.resize(static_cast<std::size_t>(dim));
    for (int a = dim - 1; a >= 0; --a) {
        strides_[static_cast<std::size_t>(a)] = n_sites_;
        if (n_sites_ > std::numeric_limits<std::size_t>::max() / side)
            throw std::length_error("GridEnvironment: box too large");
        n_sites_ *= side;
    }
    origin_ = 0;
    for (int a = 0; a < dim; ++a)
        origin_ += static_cast<std::size_t>(radius) * strides_[static_cast<std::size_t>(a)];

    increments_.resize(n_sites_ * static_cast<std::size_t>(g.steps));
    const double sd = std::sqrt(g.delta());
    for (std::size_t si = 0; si < n_sites_; ++si) {
        const std::uint64_t key = site_stream_key(seed, site_coords(si));
        for (int k = 0; k < g.steps; ++k)
            increments_[static_cast<std::size_t>(k) * n_sites_ + si] =
                sd * counter_normal(key, static_cast<std::uint64_t>(k));
    }
}

long GridEnvironment::neighbor_index(std::size_t site_index, int dir) const {
    const int axis = dir / 2;
    const int step = (dir % 2) ? 1 : -1;
    const std::size_t side = static_cast<std::size_t>(2 * box_radius + 1);
    const std::size_t stride = strides_[static_cast<std::size_t>(axis)];
    const long digit = static_cast<long>((site_index / stride) % side);
    const long next = digit + step;
    if (next < 0 || next >= static_cast<long>(side))
        return -1;
    return static_cast<long>(site_index) + step * static_cast<long>(stride);
}

Site GridEnvironment::site_coords(std::size_t site_index) const {
    Site coords(static_cast<std::size_t>(d));
    const std::size_t side = static_cast<std::size_t>(2 * box_radius + 1);
    for (int a = 0; a < d; ++a)
        coords[static_cast<std::size_t>(a)] =
            static_cast<int>((site_index / strides_[static_cast<std::size_t>(a)]) % side) -
            box_radius;
    return coords;
}

std::size_t GridEnvironment::index_of(const Site& coords) const {
    std::size_t idx = 0;
    for (int a = 0; a < d; ++a) {
        const int digit = coords[static_cast<std::size_t>(a)] + box_radius;
        if (digit < 0 || digit > 2 * box_radius)
            throw std::out_of_range("GridEnvironment::index_of: site outside box");
        idx += static_cast<std::size_t>(digit) * strides_[static_cast<std::size_t>(a)];
    }
    return idx;
}

double evaluate_grid_path(const GridEnvironment& genv, const GridPath& path) {
    double value = 0.0;
    std::size_t pos = genv.index_of(path.positions[0]);
    std::size_t next_jump = 0;
    for (int k = 0; k < genv.grid.steps; ++k) {
        while (next_jump < path.jump_steps.size() && path.jump_steps[next_jump] == k)
            pos = genv.index_of(path.positions[++next_jump]);
        value += genv.increment(k, pos);
    }
    return value;
}

namespace {

struct DpDims {
    int K, S, J, G;                   // steps, sites, jumps+1, separation states
    int m, e, gcap;                   // jump-jump sep, endpoint sep, clamp
    std::size_t states() const {
        return static_cast<std::size_t>(K) * static_cast<std::size_t>(S) *
               static_cast<std::size_t>(J) * static_cast<std::size_t>(G);
    }
    std::size_t idx(int k, std::size_t s, int j, int g) const {
        return ((static_cast<std::size_t>(k) * static_cast<std::size_t>(S) + s) *
                    static_cast<std::size_t>(J) +
                static_cast<std::size_t>(j)) *
                   static_cast<std::size_t>(G) +
               static_cast<std::size_t>(g);
    }
};

DpDims make_dims(const GridEnvironment& genv, const ConstraintSpec& cs) {
    DpDims dims;
    dims.K = genv.grid.steps;
    dims.S = static_cast<int>(genv.site_count());
    dims.J = cs.max_jumps + 1;
    dims.m = cs.min_separation_steps;
    dims.e = std::max(cs.min_separation_steps, cs.endpoint_buffer_steps);
    dims.gcap = std::max(dims.m, dims.e);
    dims.G = dims.gcap + 1;
    return dims;
}

} // namespace

SupResult dp_sup_field(const GridEnvironment& genv, const ConstraintSpec& cs,
                       std::size_t state_cap) {
    if (genv.box_radius < cs.max_jumps)
        throw std::invalid_argument("dp_sup_field: box_radius must cover max_jumps");
    const DpDims dims = make_dims(genv, cs);
    if (dims.states() > state_cap)
        throw std::length_error("dp_sup_field: state space needs " +
                                std::to_string(dims.states()) + " states, cap is " +
                                std::to_string(state_cap));

    std::vector<double> val(dims.states(), kNegInf);
    // decision << 8 | previous separation state; decision 0 = stay,
    // 1 + dir = arrived by jumping along dir
    std::vector<std::uint16_t> bp(dims.states(), 0);

    const std::size_t origin = genv.origin_index();
    val[dims.idx(0, origin, 0, 0)] = genv.increment(0, origin);

    auto relax = [&](std::size_t target, double cand, std::uint16_t from) {
        if (cand > val[target]) {
            val[target] = cand;
            bp[target] = from;
        }
    };

    const int two_d = 2 * genv.d;
    for (int k = 0; k + 1 < dims.K; ++k) {
        for (std::size_t s = 0; s < static_cast<std::size_t>(dims.S); ++s) {
            for (int j = 0; j < dims.J; ++j) {
                for (int g = 0; g < dims.G; ++g) {
                    const double v = val[dims.idx(k, s, j, g)];
                    if (v == kNegInf)
                        continue;
                    const std::uint16_t from_g = static_cast<std::uint16_t>(g);
                    // stay
                    const int g2 = std::min(g + 1, dims.gcap);
                    relax(dims.idx(k + 1, s, j, g2), v + genv.increment(k + 1, s), from_g);
                    // jump at boundary k+1
                    if (j < cs.max_jumps) {
                        const int required = (j == 0) ? dims.e : dims.m;
                        const bool elapsed_ok = (g == dims.gcap) || (g + 1 >= required);
                        if (elapsed_ok) {
                            for (int dir = 0; dir < two_d; ++dir) {
                                const long s2 = genv.neighbor_index(s, dir);
                                if (s2 < 0)
                                    continue;
                                relax(dims.idx(k + 1, static_cast<std::size_t>(s2), j + 1, 0),
                                      v + genv.increment(k + 1, static_cast<std::size_t>(s2)),
                                      static_cast<std::uint16_t>(((dir + 1) << 8) | g));
                            }
                        }
                    }
                }
            }
        }
    }

    // terminal selection: max value, ties resolved toward fewer jumps,
    // then the fixed scan order
    double best = kNegInf;
    int best_j = -1, best_g = -1;
    std::size_t best_s = 0;
    for (int j = 0; j < dims.J; ++j) {
        for (std::size_t s = 0; s < static_cast<std::size_t>(dims.S); ++s) {
            for (int g = 0; g < dims.G; ++g) {
                const double v = val[dims.idx(dims.K - 1, s, j, g)];
                if (v == kNegInf)
                    continue;
                const bool admissible = (j == 0) || (g == dims.gcap) || (g + 1 >= dims.e);
                if (!admissible)
                    continue;
                if (v > best) {
                    best = v;
                    best_s = s;
                    best_j = j;
                    best_g = g;
                }
            }
        }
    }
    if (best_j < 0)
        throw std::runtime_error("dp_sup_field: no admissible path");

    // backtrace
    std::vector<std::pair<int, std::size_t>> jumps; // (boundary, arrived-at site)
    std::size_t s = best_s;
    int j = best_j, g = best_g;
    for (int k = dims.K - 1; k > 0; --k) {
        const std::uint16_t rec = bp[dims.idx(k, s, j, g)];
        const int decision = rec >> 8;
        const int prev_g = rec & 0xff;
        if (decision == 0) {
            g = prev_g;
        } else {
            const int dir = decision - 1;
            jumps.emplace_back(k, s);
            const long prev = genv.neighbor_index(s, dir ^ 1);
            s = static_cast<std::size_t>(prev);
            --j;
            g = prev_g;
        }
    }
    std::reverse(jumps.begin(), jumps.end());

    SupResult res;
    res.value = best;
    res.jumps_used = best_j;
    res.argmax_path.positions.push_back(genv.site_coords(genv.origin_index()));
    for (const auto& [boundary, site] : jumps) {
        res.argmax_path.jump_steps.push_back(boundary);
        res.argmax_path.positions.push_back(genv.site_coords(site));
    }
    return res;
}

namespace {

struct BruteState {
    const GridEnvironment* genv;
    const ConstraintSpec* cs;
    int e;
    double best;
    int best_jumps;
    std::vector<std::pair<int, int>> best_encoding; // (boundary, dir)
    std::vector<std::pair<int, int>> encoding;
};

void brute_recurse(BruteState& st, int boundary, std::size_t site, int jumps,
                   int last_jump, double value) {
    const int K = st.genv->grid.steps;
    if (boundary == K) {
        if (jumps > 0 && K - last_jump < st.e)
            return;
        const bool better =
            value > st.best ||
            (value == st.best &&
             (jumps < st.best_jumps ||
              (jumps == st.best_jumps && st.encoding < st.best_encoding)));
        if (better) {
            st.best = value;
            st.best_jumps = jumps;
            st.best_encoding = st.encoding;
        }
        return;
    }
    // stay
    brute_recurse(st, boundary + 1, site, jumps, last_jump,
                  value + st.genv->increment(boundary, site));
    // jump
    if (jumps < st.cs->max_jumps) {
        const int gap = (jumps == 0) ? boundary : boundary - last_jump;
        const int required = (jumps == 0) ? st.e : st.cs->min_separation_steps;
        if (gap >= required) {
            for (int dir = 0; dir < 2 * st.genv->d; ++dir) {
                const long s2 = st.genv->neighbor_index(site, dir);
                if (s2 < 0)
                    continue;
                st.encoding.emplace_back(boundary, dir);
                brute_recurse(st, boundary + 1, static_cast<std::size_t>(s2), jumps + 1,
                              boundary,
                              value + st.genv->increment(boundary, static_cast<std::size_t>(s2)));
                st.encoding.pop_back();
            }
        }
    }
}

} // namespace

SupResult brute_force_sup(const GridEnvironment& genv, const ConstraintSpec& cs,
                          std::size_t path_cap) {
    if (genv.box_radius < cs.max_jumps)
        throw std::invalid_argument("brute_force_sup: box_radius must cover max_jumps");
    const double sequences = std::pow(2.0 * genv.d + 1.0, genv.grid.steps - 1);
    if (sequences > static_cast<double>(path_cap))
        throw std::length_error("brute_force_sup: instance too large");

    BruteState st{&genv, &cs, std::max(cs.min_separation_steps, cs.endpoint_buffer_steps),
                  kNegInf, 0, {}, {}};
    brute_recurse(st, 1, genv.origin_index(), 0, 0,
                  genv.increment(0, genv.origin_index()));
    if (st.best == kNegInf)
        throw std::runtime_error("brute_force_sup: no admissible path");

    SupResult res;
    res.value = st.best;
    res.jumps_used = st.best_jumps;
    res.argmax_path.positions.push_back(genv.site_coords(genv.origin_index()));
    std::size_t site = genv.origin_index();
    for (const auto& [boundary, dir] : st.best_encoding) {
        site = static_cast<std::size_t>(genv.neighbor_index(site, dir));
        res.argmax_path.jump_steps.push_back(boundary);
        res.argmax_path.positions.push_back(genv.site_coords(site));
    }
    return res;
}

namespace {

std::uint64_t grid_env_seed(std::uint64_t seed, std::size_t t_index, long env) {
    return derive_stream(derive_stream(mix64(seed), t_index),
                         static_cast<std::uint64_t>(env));
}

} // namespace

FTable estimate_F_rho(double r, double varrho, const std::vector<double>& t_list,
                      int K_per_unit_time, int n_env, int d, std::uint64_t seed,
                      int workers) {
    if (r < 0.0 || varrho < 0.0 || K_per_unit_time < 1 || n_env < 2 || d < 1)
        throw std::invalid_argument("estimate_F_rho: bad parameters");
    if (t_list.empty() || !std::is_sorted(t_list.begin(), t_list.end()))
        throw std::invalid_argument("estimate_F_rho: t_list must be nonempty and increasing");

    FTable table;
    table.r = r;
    table.varrho = varrho;
    for (std::size_t ti = 0; ti < t_list.size(); ++ti) {
        const double t = t_list[ti];
        // keep the boundary density per expected jump constant: without
        // this, large r puts a jump on every other boundary and the grid
        // sup loses the sqrt(r) scaling
        const int K =
            static_cast<int>(std::lround(K_per_unit_time * t * std::max(1.0, r)));
        const double delta = t / K;
        const int budget = static_cast<int>(std::floor(r * t + 1e-9));
        ConstraintSpec cs;
        cs.max_jumps = budget;
        cs.min_separation_steps =
            varrho > 0.0 ? static_cast<int>(std::ceil(2.0 * varrho / delta - 1e-9)) : 0;

        std::vector<double> values(static_cast<std::size_t>(n_env));
        parallel_for(n_env, workers, [&](long e) {
            GridEnvironment genv({t, K}, d, budget, grid_env_seed(seed, ti, e));
            values[static_cast<std::size_t>(e)] = dp_sup_field(genv, cs).value / t;
        });

        double mean = 0.0;
        for (double v : values)
            mean += v;
        mean /= n_env;
        double var = 0.0;
        for (double v : values)
            var += (v - mean) * (v - mean);
        var /= (n_env - 1);

        FRow row;
        row.t = t;
        row.K = K;
        row.F_hat = mean;
        row.se = std::sqrt(var / n_env);
        row.envelope_ratio =
            budget > 0 ? mean * t / std::sqrt(static_cast<double>(budget) * t) : 0.0;
        table.rows.push_back(row);
    }
    table.F = table.rows.back().F_hat;
    table.se = table.rows.back().se;
    return table;
}

FTable estimate_F(double r, const std::vector<double>& t_list, int K_per_unit_time,
                  int n_env, int d, std::uint64_t seed, int workers) {
    return estimate_F_rho(r, 0.0, t_list, K_per_unit_time, n_env, d, seed, workers);
}

namespace {

struct TubeBase {
    std::vector<int> boundaries;      // ascending, in [1, K-1]
    std::vector<std::size_t> sites;   // size boundaries.size() + 1
};

// max (or min) of sum_j h_j(b'_j) over nondecreasing b'_j within the
// per-jump windows |b'_j - b_j| <= w
double tube_extremum(const GridEnvironment& genv, const TubeBase& base, int w,
                     bool maximize) {
    const int n = static_cast<int>(base.boundaries.size());
    const int K = genv.grid.steps;
    if (n == 0)
        return 0.0;

    // prefix field sums per path segment site
    std::vector<std::vector<double>> cum(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) {
        auto& c = cum[static_cast<std::size_t>(j)];
        c.assign(static_cast<std::size_t>(K) + 1, 0.0);
        for (int k = 0; k < K; ++k)
            c[static_cast<std::size_t>(k) + 1] =
                c[static_cast<std::size_t>(k)] +
                genv.increment(k, base.sites[static_cast<std::size_t>(j)]);
    }
    auto h = [&](int j, int b) {
        return cum[static_cast<std::size_t>(j) - 1][static_cast<std::size_t>(b)] -
               cum[static_cast<std::size_t>(j)][static_cast<std::size_t>(b)];
    };
    const double sign = maximize ? 1.0 : -1.0;

    int prev_lo = 0, prev_hi = 0;
    std::vector<double> best;
    for (int j = 1; j <= n; ++j) {
        const int lo = std::max(1, base.boundaries[static_cast<std::size_t>(j) - 1] - w);
        const int hi = std::min(K - 1, base.boundaries[static_cast<std::size_t>(j) - 1] + w);
        if (lo > hi)
            throw std::runtime_error("estimate_upsilon: empty tube after gridding");
        std::vector<double> cur(static_cast<std::size_t>(hi - lo) + 1, kNegInf);
        if (j == 1) {
            for (int b = lo; b <= hi; ++b)
                cur[static_cast<std::size_t>(b - lo)] = sign * h(j, b);
        } else {
            // running prefix max of the previous row, advanced with b
            double running = kNegInf;
            int consumed = prev_lo - 1;
            for (int b = lo; b <= hi; ++b) {
                while (consumed < std::min(b, prev_hi)) {
                    ++consumed;
                    running = std::max(running, best[static_cast<std::size_t>(consumed - prev_lo)]);
                }
                if (running != kNegInf)
                    cur[static_cast<std::size_t>(b - lo)] = running + sign * h(j, b);
            }
        }
        best = std::move(cur);
        prev_lo = lo;
        prev_hi = hi;
    }
    double extremum = kNegInf;
    for (double v : best)
        extremum = std::max(extremum, v);
    // subtract the base value of the same signed sum
    double base_sum = 0.0;
    for (int j = 1; j <= n; ++j)
        base_sum += sign * h(j, base.boundaries[static_cast<std::size_t>(j) - 1]);
    return extremum - base_sum;
}

TubeBase sampled_base(const GridEnvironment& genv, int budget, Rng& rng) {
    const int K = genv.grid.steps;
    TubeBase base;
    base.sites.push_back(genv.origin_index());
    if (K < 2 || budget == 0)
        return base;
    int n = rng.uniform_int(std::min(budget, K - 1) + 1);
    std::set<int> chosen;
    while (static_cast<int>(chosen.size()) < n)
        chosen.insert(1 + rng.uniform_int(K - 1));
    base.boundaries.assign(chosen.begin(), chosen.end());
    std::size_t site = genv.origin_index();
    for (std::size_t j = 0; j < base.boundaries.size(); ++j) {
        long next = -1;
        while (next < 0)
            next = genv.neighbor_index(site, rng.uniform_int(2 * genv.d));
        site = static_cast<std::size_t>(next);
        base.sites.push_back(site);
    }
    return base;
}

} // namespace

std::vector<UpsilonRow> estimate_upsilon(double r, double rho,
                                         const std::vector<double>& t_list, int n_env,
                                         int n_bases, int d, std::uint64_t seed,
                                         int workers) {
    if (r < 0.0 || rho <= 0.0 || n_env < 2 || n_bases < 1 || d < 1)
        throw std::invalid_argument("estimate_upsilon: bad parameters");

    std::vector<UpsilonRow> rows;
    for (std::size_t ti = 0; ti < t_list.size(); ++ti) {
        const double t = t_list[ti];
        // same grid resolution as estimate_F
        const int K = static_cast<int>(std::lround(8.0 * t));
        const double delta = t / K;
        const int budget = static_cast<int>(std::floor(r * t + 1e-9));
        const int w = static_cast<int>(std::floor(rho / delta + 1e-9));

        std::vector<double> values(static_cast<std::size_t>(n_env), 0.0);
        parallel_for(n_env, workers, [&](long e) {
            GridEnvironment genv({t, K}, d, budget, grid_env_seed(seed, ti, e));
            if (w == 0) {
                values[static_cast<std::size_t>(e)] = 0.0; // tube collapses to the base
                return;
            }
            ConstraintSpec cs;
            cs.max_jumps = budget;
            const SupResult sup = dp_sup_field(genv, cs);

            std::vector<TubeBase> bases;
            TubeBase argmax_base;
            argmax_base.boundaries = sup.argmax_path.jump_steps;
            for (const Site& x : sup.argmax_path.positions)
                argmax_base.sites.push_back(genv.index_of(x));
            bases.push_back(std::move(argmax_base));
            Rng rng = Rng::from_seed(grid_env_seed(seed, ti, e) ^ 0x75bcd15ULL);
            for (int b = 1; b < n_bases; ++b)
                bases.push_back(sampled_base(genv, budget, rng));

            double best = 0.0;
            for (const TubeBase& base : bases) {
                best = std::max(best, tube_extremum(genv, base, w, true));
                best = std::max(best, tube_extremum(genv, base, w, false));
            }
            values[static_cast<std::size_t>(e)] = best / t;
        });

        double mean = 0.0;
        for (double v : values)
            mean += v;
        mean /= n_env;
        double var = 0.0;
        for (double v : values)
            var += (v - mean) * (v - mean);
        var /= (n_env - 1);
        rows.push_back({t, mean, std::sqrt(var / n_env)});
    }
    return rows;
}

C0Estimate estimate_C0(double F1_hat, double se) {
    if (F1_hat <= 0.0)
        throw std::domain_error("estimate_C0: F(1) estimate must be positive");
    return {F1_hat * F1_hat / 8.0, F1_hat * se / 4.0};
}

long default_jump_budget(double beta, double C0_hat, double t) {
    if (beta <= 1.0)
        throw std::domain_error("default_jump_budget: beta must exceed 1");
    const double lb = std::log(beta);
    return static_cast<long>(std::floor(C0_hat / 2.0 * beta * beta / (lb * lb) * t));
}

} // namespace polymer

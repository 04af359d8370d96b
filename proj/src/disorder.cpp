#include "polymer/disorder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "polymer/parallel.hpp"
#include "polymer/walk.hpp"

namespace polymer {

double gamma_of_beta(int d, double beta) {
    if (d < 1 || beta < 0.0)
        throw std::invalid_argument("gamma_of_beta: need d >= 1, beta >= 0");
    if (beta * beta >= 4.0 * d)
        throw std::domain_error("gamma_of_beta: beta^2 >= 4d (holding-time MGF diverges)");
    return std::log(4.0 * d / (4.0 * d - beta * beta));
}

RatioEstimate second_moment_ratio(const ModelParams& params, long n_samples,
                                  std::uint64_t seed) {
    params.validate();
    if (n_samples < 2)
        throw std::invalid_argument("second_moment_ratio: n_samples must be >= 2");

    Rng rng = Rng::from_seed(seed);
    const Site origin(static_cast<std::size_t>(params.d), 0);
    const double b2 = params.beta * params.beta;
    double sum = 0.0, sum_sq = 0.0;
    for (long i = 0; i < n_samples; ++i) {
        Rng walk_rng = rng.derive(static_cast<std::uint64_t>(i));
        const JumpPath diff = difference_walk_sampler(walk_rng, params.d, params.t);
        const double v = std::exp(b2 * occupation_time(diff, origin));
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / n_samples;
    const double var = (sum_sq - n_samples * mean * mean) / (n_samples - 1);
    return {mean, std::sqrt(var / n_samples)};
}

ReturnProbability return_probability(int d, long n_steps_cap, long n_samples,
                                     std::uint64_t seed) {
    if (d < 1 || n_steps_cap < 2 || n_samples < 2)
        throw std::invalid_argument("return_probability: bad parameters");

    Rng rng = Rng::from_seed(seed);
    long hits_full = 0, hits_half = 0;
    const long half = n_steps_cap / 2;
    std::vector<int> pos(static_cast<std::size_t>(d));
    for (long i = 0; i < n_samples; ++i) {
        Rng walk_rng = rng.derive(static_cast<std::uint64_t>(i));
        std::fill(pos.begin(), pos.end(), 0);
        for (long step = 1; step <= n_steps_cap; ++step) {
            const int dir = walk_rng.uniform_int(2 * d);
            pos[static_cast<std::size_t>(dir / 2)] += (dir % 2) ? 1 : -1;
            bool at_origin = true;
            for (int c : pos)
                if (c != 0) {
                    at_origin = false;
                    break;
                }
            if (at_origin) {
                ++hits_full;
                if (step <= half)
                    ++hits_half;
                break;
            }
        }
    }
    ReturnProbability out;
    out.cap = n_steps_cap;
    out.q_hat = static_cast<double>(hits_full) / n_samples;
    out.se = std::sqrt(out.q_hat * (1.0 - out.q_hat) / n_samples);
    out.q_half = static_cast<double>(hits_half) / n_samples;
    out.se_half = std::sqrt(out.q_half * (1.0 - out.q_half) / n_samples);
    out.nonconvergent = d <= 2;
    return out;
}

LocalTimeStats local_time_mgf(double gamma, double q_hat, double q_se) {
    if (gamma < 0.0 || q_hat < 0.0 || q_hat >= 1.0)
        throw std::invalid_argument("local_time_mgf: need gamma >= 0, q in [0,1)");
    LocalTimeStats out;
    out.gamma = gamma;
    out.q_hat = q_hat;
    out.q_se = q_se;
    const double eg = std::exp(gamma);
    if (q_hat * eg >= 1.0) {
        out.diverged = true;
        out.mgf_value = std::numeric_limits<double>::infinity();
    } else {
        out.mgf_value = (1.0 - q_hat) * eg / (1.0 - q_hat * eg);
    }
    return out;
}

MgfSimEstimate direct_local_time_mgf(int d, double gamma, long n_steps_cap,
                                     long n_samples, std::uint64_t seed) {
    if (d < 1 || gamma < 0.0 || n_steps_cap < 2 || n_samples < 2)
        throw std::invalid_argument("direct_local_time_mgf: bad parameters");

    Rng rng = Rng::from_seed(seed);
    double sum = 0.0, sum_sq = 0.0;
    std::vector<int> pos(static_cast<std::size_t>(d));
    for (long i = 0; i < n_samples; ++i) {
        Rng walk_rng = rng.derive(static_cast<std::uint64_t>(i));
        std::fill(pos.begin(), pos.end(), 0);
        long visits = 1; // the starting visit
        for (long step = 1; step <= n_steps_cap; ++step) {
            const int dir = walk_rng.uniform_int(2 * d);
            pos[static_cast<std::size_t>(dir / 2)] += (dir % 2) ? 1 : -1;
            bool at_origin = true;
            for (int c : pos)
                if (c != 0) {
                    at_origin = false;
                    break;
                }
            if (at_origin)
                ++visits;
        }
        const double v = std::exp(gamma * static_cast<double>(visits));
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / n_samples;
    const double var = (sum_sq - n_samples * mean * mean) / (n_samples - 1);
    return {mean, std::sqrt(var / n_samples)};
}

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    return num / den;
}

} // namespace

DisorderReport martingale_trajectories(int d, double beta, const std::vector<double>& t_grid,
                                       int n_env, long n_paths, std::uint64_t seed,
                                       double theta, int workers, int n_bootstrap) {
    if (t_grid.empty() || !std::is_sorted(t_grid.begin(), t_grid.end()))
        throw std::invalid_argument("martingale_trajectories: t_grid must be increasing");
    if (n_env < 16)
        throw std::invalid_argument("martingale_trajectories: n_env must be >= 16");
    if (n_paths < 2)
        throw std::invalid_argument("martingale_trajectories: n_paths must be >= 2");

    const std::size_t n_t = t_grid.size();
    const double t_max = t_grid.back();
    ModelParams params{d, beta, t_max};
    params.validate();

    DisorderReport report;
    report.params = params;
    report.t_grid = t_grid;
    report.log_M.assign(static_cast<std::size_t>(n_env), std::vector<double>(n_t, 0.0));
    report.excluded.assign(static_cast<std::size_t>(n_env), std::vector<bool>(n_t, false));

    const Rng root = Rng::from_seed(seed);
    parallel_for(n_env, workers, [&](long e) {
        EnvironmentSheet sheet(d, root.derive(2 * static_cast<std::uint64_t>(e)).key());
        Rng path_rng = root.derive(2 * static_cast<std::uint64_t>(e) + 1);

        // per-path Hamiltonians at every nested horizon
        std::vector<std::vector<double>> h(static_cast<std::size_t>(n_paths),
                                           std::vector<double>(n_t, 0.0));
        for (long i = 0; i < n_paths; ++i) {
            const JumpPath path = sample_path(path_rng, d, t_max);
            double acc = 0.0;
            double prev = 0.0;
            std::size_t gi = 0;
            for (std::size_t j = 0; j < path.positions.size() && gi < n_t; ++j) {
                const double next = (j < path.jump_times.size()) ? path.jump_times[j]
                                                                 : path.horizon;
                while (gi < n_t && t_grid[gi] <= next) {
                    h[static_cast<std::size_t>(i)][gi] =
                        acc + sheet.increment(path.positions[j], prev, t_grid[gi]);
                    ++gi;
                }
                acc += sheet.increment(path.positions[j], prev, next);
                prev = next;
            }
        }

        for (std::size_t g = 0; g < n_t; ++g) {
            if (beta == 0.0) {
                report.log_M[static_cast<std::size_t>(e)][g] = 0.0;
                continue;
            }
            double m = -std::numeric_limits<double>::infinity();
            for (long i = 0; i < n_paths; ++i)
                m = std::max(m, beta * h[static_cast<std::size_t>(i)][g]);
            double sum = 0.0, sum_sq = 0.0;
            for (long i = 0; i < n_paths; ++i) {
                const double a = std::exp(beta * h[static_cast<std::size_t>(i)][g] - m);
                sum += a;
                sum_sq += a * a;
            }
            const double log_Z = m + std::log(sum / static_cast<double>(n_paths));
            const double ess = sum * sum / sum_sq;
            report.log_M[static_cast<std::size_t>(e)][g] =
                log_Z - beta * beta * t_grid[g] / 2.0;
            report.excluded[static_cast<std::size_t>(e)][g] = ess < 10.0;
        }
    });

    for (const auto& row : report.excluded)
        for (bool x : row)
            if (x)
                ++report.excluded_count;

    auto median_curve = [&](const std::vector<std::size_t>& env_ids) {
        std::vector<double> med(n_t, 0.0);
        for (std::size_t g = 0; g < n_t; ++g) {
            std::vector<double> vals;
            for (std::size_t e : env_ids)
                if (!report.excluded[e][g])
                    vals.push_back(report.log_M[e][g]);
            if (vals.empty())
                for (std::size_t e : env_ids)
                    vals.push_back(report.log_M[e][g]);
            med[g] = median_of(std::move(vals));
        }
        return med;
    };

    std::vector<std::size_t> all_envs(static_cast<std::size_t>(n_env));
    for (std::size_t e = 0; e < all_envs.size(); ++e)
        all_envs[e] = e;
    report.median_log_M = median_curve(all_envs);
    report.slope = ols_slope(t_grid, report.median_log_M);

    // bootstrap over environments
    Rng boot_rng = root.derive(0xb007ULL);
    long below = 0, within = 0;
    for (int b = 0; b < n_bootstrap; ++b) {
        std::vector<std::size_t> sample(static_cast<std::size_t>(n_env));
        for (auto& e : sample)
            e = static_cast<std::size_t>(boot_rng.uniform_int(n_env));
        const double slope = ols_slope(t_grid, median_curve(sample));
        if (slope < -theta)
            ++below;
        if (std::abs(slope) < theta)
            ++within;
    }
    report.bootstrap_below = static_cast<double>(below) / n_bootstrap;
    report.bootstrap_within = static_cast<double>(within) / n_bootstrap;

    const double median_floor = -5.0;
    const bool bounded_below =
        *std::min_element(report.median_log_M.begin(), report.median_log_M.end()) >
        median_floor;
    if (report.bootstrap_below >= 0.95)
        report.verdict = Verdict::decaying;
    else if (report.bootstrap_within >= 0.95 && bounded_below)
        report.verdict = Verdict::stable;
    else
        report.verdict = Verdict::inconclusive;

    // linear-scale martingale means (unbiased per environment)
    report.mean_M.assign(n_t, 0.0);
    report.mean_M_se.assign(n_t, 0.0);
    for (std::size_t g = 0; g < n_t; ++g) {
        double sum = 0.0;
        for (int e = 0; e < n_env; ++e)
            sum += std::exp(report.log_M[static_cast<std::size_t>(e)][g]);
        const double mean = sum / n_env;
        double var = 0.0;
        for (int e = 0; e < n_env; ++e) {
            const double v = std::exp(report.log_M[static_cast<std::size_t>(e)][g]) - mean;
            var += v * v;
        }
        var /= (n_env - 1);
        report.mean_M[g] = mean;
        report.mean_M_se[g] = std::sqrt(var / n_env);
    }
    return report;
}

} // namespace polymer

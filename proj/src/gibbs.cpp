#include "polymer/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "polymer/parallel.hpp"

namespace polymer {

void ModelParams::validate() const {
    if (d < 1)
        throw std::invalid_argument("ModelParams: d must be >= 1");
    if (beta < 0.0)
        throw std::invalid_argument("ModelParams: beta must be >= 0");
    if (t <= 0.0)
        throw std::invalid_argument("ModelParams: t must be positive");
}

double hamiltonian(EnvironmentSheet& sheet, const JumpPath& path) {
    return hamiltonian_up_to(sheet, path, path.horizon);
}

double hamiltonian_up_to(EnvironmentSheet& sheet, const JumpPath& path, double u) {
    if (u < 0.0 || u > path.horizon)
        throw std::domain_error("hamiltonian_up_to: u outside [0, horizon]");
    double h = 0.0;
    double prev = 0.0;
    for (std::size_t j = 0; j < path.positions.size(); ++j) {
        const double next = (j < path.jump_times.size()) ? path.jump_times[j]
                                                         : path.horizon;
        const double b = std::min(next, u);
        if (b > prev)
            h += sheet.increment(path.positions[j], prev, b);
        if (next >= u)
            break;
        prev = next;
    }
    return h;
}

double field_distance_sq(const JumpPath& p1, const JumpPath& p2) {
    return p1.horizon + p2.horizon - 2.0 * intersection_time(p1, p2);
}

namespace {

// Summarize max-shifted log weights: log of their mean, delta-method SE
// on the log, and effective sample size.
struct LogMeanExp {
    double log_mean = 0.0;
    double se = 0.0;
    double ess = 0.0;
    bool degenerate = false;
};

LogMeanExp log_mean_exp(const std::vector<double>& logw) {
    const std::size_t n = logw.size();
    const double m = *std::max_element(logw.begin(), logw.end());
    double sum = 0.0, sum_sq = 0.0;
    for (double lw : logw) {
        const double a = std::exp(lw - m);
        sum += a;
        sum_sq += a * a;
    }
    LogMeanExp out;
    const double mean = sum / static_cast<double>(n);
    out.log_mean = m + std::log(mean);
    out.ess = sum * sum / sum_sq;
    // sample variance of the shifted weights
    double var = 0.0;
    for (double lw : logw) {
        const double a = std::exp(lw - m);
        var += (a - mean) * (a - mean);
    }
    var /= static_cast<double>(n > 1 ? n - 1 : 1);
    out.se = std::sqrt(var / static_cast<double>(n)) / mean;
    out.degenerate = out.ess < 1.0 + 1e-9 && n > 1;
    return out;
}

double poisson_tail_above(double lambda, int n_max) {
    // P(N > n_max), N ~ Poisson(lambda)
    long double pmf = std::exp(-static_cast<long double>(lambda));
    long double cdf = pmf;
    for (int k = 1; k <= n_max; ++k) {
        pmf *= lambda / k;
        cdf += pmf;
    }
    const long double tail = 1.0L - cdf;
    return tail > 0.0L ? static_cast<double>(tail) : 0.0;
}

} // namespace

PartitionEstimate estimate_partition(EnvironmentSheet& sheet, const ModelParams& params,
                                     long n_samples, Rng& rng, double proposal_rate) {
    params.validate();
    if (n_samples < 2)
        throw std::invalid_argument("estimate_partition: n_samples must be >= 2");

    PartitionEstimate est;
    est.params = params;
    est.n_samples = n_samples;
    est.env_seed = sheet.master_seed();

    if (params.beta == 0.0) {
        est.log_Z = 0.0;
        est.std_error = 0.0;
        est.ess = static_cast<double>(n_samples);
        return est;
    }

    const double free_rate = 2.0 * params.d;
    const double rate = proposal_rate > 0.0 ? proposal_rate : free_rate;
    const double log_rate_ratio = std::log(free_rate / rate);

    std::vector<double> logw(static_cast<std::size_t>(n_samples));
    for (long i = 0; i < n_samples; ++i) {
        const JumpPath path = sample_path(rng, params.d, params.t, rate);
        double lw = params.beta * hamiltonian(sheet, path);
        if (rate != free_rate)
            lw += (rate - free_rate) * params.t +
                  static_cast<double>(path.jump_count()) * log_rate_ratio;
        logw[static_cast<std::size_t>(i)] = lw;
    }
    const LogMeanExp s = log_mean_exp(logw);
    est.log_Z = s.log_mean;
    est.std_error = s.se;
    est.ess = s.ess;
    est.degenerate = s.degenerate;
    return est;
}

PartitionEstimate estimate_partition_series(EnvironmentSheet& sheet, const ModelParams& params,
                                            int n_max, int quad_samples, Rng& rng,
                                            double rel_tol) {
    params.validate();
    if (n_max < 0 || quad_samples < 2)
        throw std::invalid_argument("estimate_partition_series: need n_max >= 0, quad_samples >= 2");
    if (std::pow(2.0 * params.d, n_max) > 1e6)
        throw std::length_error("estimate_partition_series: (2d)^n_max exceeds 10^6");

    const double t = params.t;
    const double beta = params.beta;
    const double log_poisson_zero = -2.0 * params.d * t;
    const double env_weight = std::exp(log_poisson_zero);

    long double total = 0.0L;
    long double var_total = 0.0L;
    std::vector<double> s(static_cast<std::size_t>(n_max) + 1);

    for (int n = 0; n <= n_max; ++n) {
        const auto paths = enumerate_discrete_paths(params.d, n);
        const double vol = simplex_volume(n, t);
        // shared quadrature nodes across the discrete paths of this n
        double sum_q = 0.0, sum_q_sq = 0.0;
        for (int q = 0; q < quad_samples; ++q) {
            for (int j = 0; j < n; ++j)
                s[static_cast<std::size_t>(j)] = t * rng.u01();
            std::sort(s.begin(), s.begin() + n);
            double integrand = 0.0;
            for (const auto& x : paths) {
                double b = 0.0;
                double prev = 0.0;
                for (int j = 0; j <= n; ++j) {
                    const double next = (j < n) ? s[static_cast<std::size_t>(j)] : t;
                    b += sheet.increment(x[static_cast<std::size_t>(j)], prev, next);
                    prev = next;
                }
                integrand += std::exp(beta * b);
            }
            sum_q += integrand;
            sum_q_sq += integrand * integrand;
        }
        const double mean_q = sum_q / quad_samples;
        const double var_q =
            (sum_q_sq - quad_samples * mean_q * mean_q) / (quad_samples - 1);
        const double scale = env_weight * vol;
        total += static_cast<long double>(scale * mean_q);
        var_total += static_cast<long double>(scale * scale * var_q / quad_samples);
    }

    PartitionEstimate est;
    est.params = params;
    est.n_samples = quad_samples;
    est.env_seed = sheet.master_seed();
    const double z = static_cast<double>(total);
    est.log_Z = std::log(z);
    est.std_error = std::sqrt(static_cast<double>(var_total)) / z;
    est.ess = static_cast<double>(quad_samples);
    est.truncation_bound =
        poisson_tail_above(2.0 * params.d * t, n_max) * std::exp(beta * beta * t / 2.0);
    est.truncation_flagged = est.truncation_bound > rel_tol * z;
    return est;
}

FreeEnergyPoint free_energy_point(const ModelParams& params, int n_env, long n_paths,
                                  std::uint64_t seed, double proposal_rate, int workers) {
    params.validate();
    if (n_env < 2)
        throw std::invalid_argument("free_energy_point: n_env must be >= 2");

    FreeEnergyPoint out;
    out.per_env.resize(static_cast<std::size_t>(n_env));
    out.flagged.resize(static_cast<std::size_t>(n_env));
    std::vector<double> ess(static_cast<std::size_t>(n_env));

    const Rng root = Rng::from_seed(seed);
    parallel_for(n_env, workers, [&](long e) {
        EnvironmentSheet sheet(params.d, root.derive(2 * static_cast<std::uint64_t>(e)).key());
        Rng path_rng = root.derive(2 * static_cast<std::uint64_t>(e) + 1);
        const PartitionEstimate est =
            estimate_partition(sheet, params, n_paths, path_rng, proposal_rate);
        out.per_env[static_cast<std::size_t>(e)] = est.log_Z / params.t;
        out.flagged[static_cast<std::size_t>(e)] = est.degenerate;
        ess[static_cast<std::size_t>(e)] = est.ess;
    });

    double sum = 0.0;
    for (double p : out.per_env)
        sum += p;
    out.p_hat = sum / n_env;
    double var = 0.0;
    for (double p : out.per_env)
        var += (p - out.p_hat) * (p - out.p_hat);
    var /= (n_env - 1);
    out.se = std::sqrt(var / n_env);
    out.min_ess = *std::min_element(ess.begin(), ess.end());
    return out;
}

double martingale_log(double log_Z, const ModelParams& params) {
    return log_Z - params.beta * params.beta * params.t / 2.0;
}

GibbsAverage gibbs_average(EnvironmentSheet& sheet, const ModelParams& params,
                           GibbsFunctional tag, long n_samples, Rng& rng) {
    params.validate();
    if (n_samples < 10)
        throw std::invalid_argument("gibbs_average: n_samples must be >= 10");

    const std::size_t n = static_cast<std::size_t>(n_samples);
    auto weighted_ensemble = [&](std::vector<JumpPath>& paths, std::vector<double>& w) {
        std::vector<double> logw(n);
        paths.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            paths.push_back(sample_path(rng, params.d, params.t));
            logw[i] = params.beta * hamiltonian(sheet, paths.back());
        }
        const double m = *std::max_element(logw.begin(), logw.end());
        double sum = 0.0, sum_sq = 0.0;
        w.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = std::exp(logw[i] - m);
            sum += w[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
            w[i] /= sum;
            sum_sq += w[i] * w[i];
        }
        return 1.0 / sum_sq;
    };

    GibbsAverage out;
    out.tag = tag;

    if (tag == GibbsFunctional::replica_overlap) {
        std::vector<JumpPath> p1, p2;
        std::vector<double> w1, w2;
        const double ess1 = weighted_ensemble(p1, w1);
        const double ess2 = weighted_ensemble(p2, w2);
        // per-replica-1 conditional value, then weighted mean over replica 1
        std::vector<double> g(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double gi = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                gi += w2[j] * intersection_time(p1[i], p2[j]);
            g[i] = gi / params.t;
        }
        double value = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            value += w1[i] * g[i];
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            var += w1[i] * w1[i] * (g[i] - value) * (g[i] - value);
        out.value = value;
        out.std_error = std::sqrt(var);
        out.effective_sample_size = std::min(ess1, ess2);
    } else {
        std::vector<JumpPath> paths;
        std::vector<double> w;
        const double ess = weighted_ensemble(paths, w);
        std::vector<double> f(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (tag == GibbsFunctional::jump_count) {
                f[i] = static_cast<double>(paths[i].jump_count());
            } else {
                const Site& x = paths[i].positions.back();
                double sq = 0.0;
                for (int c : x)
                    sq += static_cast<double>(c) * c;
                f[i] = std::sqrt(sq);
            }
        }
        double value = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            value += w[i] * f[i];
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            var += w[i] * w[i] * (f[i] - value) * (f[i] - value);
        out.value = value;
        out.std_error = std::sqrt(var);
        out.effective_sample_size = ess;
    }
    out.low_confidence = out.effective_sample_size < 10.0;
    return out;
}

} // namespace polymer

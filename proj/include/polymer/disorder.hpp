#pragma once

#include <cstdint>
#include <vector>

#include "polymer/gibbs.hpp"

namespace polymer {

// gamma(beta) = log(4d / (4d - beta^2)); requires beta^2 < 4d
double gamma_of_beta(int d, double beta);

struct RatioEstimate {
    double ratio = 1.0;
    double se = 0.0;
};

// E[Z_t^2] / (E[Z_t])^2 via the annealed identity: Monte Carlo mean of
// exp(beta^2 * time-at-zero) over difference walks (rate 4d); no
// environment sampling needed.
RatioEstimate second_moment_ratio(const ModelParams& params, long n_samples,
                                  std::uint64_t seed);

struct ReturnProbability {
    double q_hat = 0.0;
    double se = 0.0;
    double q_half = 0.0;              // estimate at half the step cap
    double se_half = 0.0;
    long cap = 0;
    bool nonconvergent = false;       // set for d <= 2 (recurrent walk)
};

// P(discrete simple walk returns to 0 within n_steps_cap steps)
ReturnProbability return_probability(int d, long n_steps_cap, long n_samples,
                                     std::uint64_t seed);

struct LocalTimeStats {
    double gamma = 0.0;
    double q_hat = 0.0;
    double q_se = 0.0;
    double mgf_value = 0.0;
    bool diverged = false;            // q * e^gamma >= 1
};

// E[e^{gamma L}] for L geometric counting the starting visit:
// (1-q) e^gamma / (1 - q e^gamma)
LocalTimeStats local_time_mgf(double gamma, double q_hat, double q_se = 0.0);

struct MgfSimEstimate {
    double value = 0.0;
    double se = 0.0;
};

// Direct simulation oracle: E[e^{gamma L}] with L the number of visits to
// the origin within the step cap (counting the start).
MgfSimEstimate direct_local_time_mgf(int d, double gamma, long n_steps_cap,
                                     long n_samples, std::uint64_t seed);

enum class Verdict { decaying, stable, inconclusive };

struct DisorderReport {
    ModelParams params;               // t field holds the largest horizon
    std::vector<double> t_grid;
    std::vector<std::vector<double>> log_M;   // [env][t-index]
    std::vector<std::vector<bool>> excluded;  // ESS-degenerate cells
    std::vector<double> median_log_M;
    double slope = 0.0;               // OLS slope of the median curve
    double bootstrap_below = 0.0;     // fraction of bootstrap slopes < -theta
    double bootstrap_within = 0.0;    // fraction with |slope| < theta
    Verdict verdict = Verdict::inconclusive;
    std::vector<double> mean_M;       // per t, linear-scale martingale mean
    std::vector<double> mean_M_se;
    long excluded_count = 0;
};

// Per-environment log M_t along nested horizons: one sheet per
// environment, one path ensemble sampled at the largest horizon and
// restricted to each smaller t. Verdict thresholds (theta per unit time,
// 95% bootstrap confidence) are configurable artifacts.
DisorderReport martingale_trajectories(int d, double beta, const std::vector<double>& t_grid,
                                       int n_env, long n_paths, std::uint64_t seed,
                                       double theta = 0.02, int workers = 1,
                                       int n_bootstrap = 1000);

} // namespace polymer

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "polymer/gibbs.hpp"

using namespace polymer;

namespace {

JumpPath constant_path(int d, double t) {
    JumpPath p;
    p.horizon = t;
    p.start.assign(static_cast<std::size_t>(d), 0);
    p.positions.push_back(p.start);
    return p;
}

JumpPath one_jump_path(double t, double s) {
    JumpPath p;
    p.horizon = t;
    p.start = {0};
    p.jump_times = {s};
    p.positions = {{0}, {1}};
    return p;
}

} // namespace

TEST_CASE("hamiltonian of the no-jump path is W(t, 0)") {
    EnvironmentSheet sheet(1, 808);
    const JumpPath p = constant_path(1, 2.0);
    const double h = hamiltonian(sheet, p);
    CHECK(h == sheet.value_at({0}, 2.0));
    CHECK(hamiltonian_up_to(sheet, p, 1.0) == sheet.value_at({0}, 1.0));
    CHECK_THROWS_AS(hamiltonian_up_to(sheet, p, 3.0), std::domain_error);
}

TEST_CASE("field_distance_sq: identical paths and the saturating pair") {
    const JumpPath p = one_jump_path(1.0, 0.4);
    CHECK(field_distance_sq(p, p) == 0.0);
    // jump shifted by delta = 0.1: two disjoint site-intervals of length delta
    const JumpPath q = one_jump_path(1.0, 0.5);
    CHECK(field_distance_sq(p, q) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("covariance of Hamiltonians equals the intersection time") {
    const JumpPath p = one_jump_path(1.0, 0.4);
    const JumpPath q = one_jump_path(1.0, 0.7);
    const double target = intersection_time(p, q);
    const int n = 4000;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        EnvironmentSheet sheet(1, 40000 + static_cast<std::uint64_t>(i));
        const double a = hamiltonian(sheet, p);
        const double b = hamiltonian(sheet, q);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    const double se = std::sqrt((target * target + (sxx / n) * (syy / n)) / n);
    CHECK(std::abs(sxy / n - target) < 4.0 * se);
}

TEST_CASE("estimate_partition at beta = 0 is exact") {
    EnvironmentSheet sheet(1, 12);
    Rng rng = Rng::from_seed(13);
    const PartitionEstimate est = estimate_partition(sheet, {1, 0.0, 1.0}, 100, rng);
    CHECK(est.log_Z == 0.0);
    CHECK(est.std_error == 0.0);
    CHECK_FALSE(est.degenerate);
    CHECK_THROWS_AS(estimate_partition(sheet, {1, 0.0, 1.0}, 1, rng),
                    std::invalid_argument);
}

TEST_CASE("annealed identity: sheet-averaged Z matches exp(beta^2 t / 2)") {
    const ModelParams params{1, 0.5, 1.0};
    const int n_env = 1000;
    const long n_paths = 200;
    double sum = 0.0, sum_sq = 0.0;
    const Rng root = Rng::from_seed(909);
    for (int e = 0; e < n_env; ++e) {
        EnvironmentSheet sheet(params.d, root.derive(2 * static_cast<std::uint64_t>(e)).key());
        Rng rng = root.derive(2 * static_cast<std::uint64_t>(e) + 1);
        const double z = std::exp(estimate_partition(sheet, params, n_paths, rng).log_Z);
        sum += z;
        sum_sq += z * z;
    }
    const double mean = sum / n_env;
    const double se =
        std::sqrt((sum_sq / n_env - mean * mean) / (n_env - 1));
    const double target = std::exp(params.beta * params.beta * params.t / 2.0);
    CHECK(std::abs(mean - target) < 3.0 * se);
}

TEST_CASE("proposal-rate tilt leaves the estimate unbiased") {
    const ModelParams params{1, 0.5, 1.0};
    const int n_env = 400;
    double sum_diff = 0.0, sum_diff_sq = 0.0;
    const Rng root = Rng::from_seed(7171);
    for (int e = 0; e < n_env; ++e) {
        EnvironmentSheet sheet(1, root.derive(3 * static_cast<std::uint64_t>(e)).key());
        Rng r1 = root.derive(3 * static_cast<std::uint64_t>(e) + 1);
        Rng r2 = root.derive(3 * static_cast<std::uint64_t>(e) + 2);
        const double z_free =
            std::exp(estimate_partition(sheet, params, 300, r1).log_Z);
        const double z_tilt =
            std::exp(estimate_partition(sheet, params, 300, r2, 3.5).log_Z);
        const double diff = z_free - z_tilt;
        sum_diff += diff;
        sum_diff_sq += diff * diff;
    }
    const double mean = sum_diff / n_env;
    const double se = std::sqrt(
        (sum_diff_sq / n_env - mean * mean) / (n_env - 1));
    CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("series estimator: beta = 0 telescopes to one minus the Poisson tail") {
    EnvironmentSheet sheet(1, 55);
    Rng rng = Rng::from_seed(56);
    const PartitionEstimate est =
        estimate_partition_series(sheet, {1, 0.0, 0.5}, 10, 16, rng);
    // sum_n e^{-2dt} (2dt)^n / n! = 1 - P(N > n_max)
    double pmf = std::exp(-1.0), cdf = pmf;
    for (int k = 1; k <= 10; ++k) {
        pmf *= 1.0 / k;
        cdf += pmf;
    }
    CHECK(std::exp(est.log_Z) == doctest::Approx(cdf).epsilon(1e-10));
    CHECK(est.std_error == doctest::Approx(0.0));
}

TEST_CASE("series n_max = 0 term matches the direct formula on a frozen sheet") {
    EnvironmentSheet sheet(1, 303);
    const double t = 0.5, beta = 1.2;
    const double w = sheet.value_at({0}, t);
    const std::string frozen = sheet.snapshot();
    EnvironmentSheet replay = EnvironmentSheet::restore(frozen);
    Rng rng = Rng::from_seed(304);
    const PartitionEstimate est =
        estimate_partition_series(replay, {1, beta, t}, 0, 8, rng);
    CHECK(est.log_Z == doctest::Approx(-2.0 * t + beta * w).epsilon(1e-12));
    CHECK(est.truncation_bound > 0.0);
    CHECK(est.truncation_flagged);
    CHECK_THROWS_AS(estimate_partition_series(replay, {3, beta, t}, 12, 8, rng),
                    std::length_error);
}

TEST_CASE("direct and series estimators agree on a shared sheet") {
    const ModelParams params{1, 1.0, 0.5};
    const int n_env = 30;
    double sum = 0.0, sum_sq = 0.0;
    const Rng root = Rng::from_seed(616);
    for (int e = 0; e < n_env; ++e) {
        EnvironmentSheet sheet(1, root.derive(3 * static_cast<std::uint64_t>(e)).key());
        Rng r1 = root.derive(3 * static_cast<std::uint64_t>(e) + 1);
        Rng r2 = root.derive(3 * static_cast<std::uint64_t>(e) + 2);
        const double z_mc = std::exp(estimate_partition(sheet, params, 1500, r1).log_Z);
        const double z_series =
            std::exp(estimate_partition_series(sheet, params, 10, 24, r2).log_Z);
        const double diff = z_mc - z_series;
        sum += diff;
        sum_sq += diff * diff;
    }
    const double mean = sum / n_env;
    const double se = std::sqrt((sum_sq / n_env - mean * mean) / (n_env - 1));
    CHECK(std::abs(mean) < 3.0 * se);
}

TEST_CASE("free_energy_point: beta = 0 gives p_hat 0, and Jensen holds") {
    const FreeEnergyPoint zero = free_energy_point({2, 0.0, 3.0}, 8, 100, 5);
    CHECK(zero.p_hat == 0.0);
    CHECK(zero.se == 0.0);

    const ModelParams params{1, 1.0, 2.0};
    const FreeEnergyPoint fe = free_energy_point(params, 16, 1500, 99);
    CHECK(fe.p_hat <= params.beta * params.beta / 2.0 + 3.0 * fe.se);
    CHECK(fe.min_ess > 0.0);
    CHECK(fe.per_env.size() == 16);
}

TEST_CASE("free_energy_point is identical across worker counts") {
    const ModelParams params{1, 0.8, 2.0};
    const FreeEnergyPoint a = free_energy_point(params, 8, 400, 42, -1.0, 1);
    const FreeEnergyPoint b = free_energy_point(params, 8, 400, 42, -1.0, 4);
    CHECK(a.p_hat == b.p_hat);
    CHECK(a.se == b.se);
    CHECK(a.per_env == b.per_env);
}

TEST_CASE("martingale_log subtracts beta^2 t / 2") {
    CHECK(martingale_log(0.0, {1, 0.0, 5.0}) == 0.0);
    CHECK(martingale_log(1.0, {1, 2.0, 3.0}) == doctest::Approx(1.0 - 6.0));
}

TEST_CASE("gibbs_average: free-walk jump count and overlap range") {
    EnvironmentSheet sheet(1, 2000);
    Rng rng = Rng::from_seed(2001);
    const ModelParams free{1, 0.0, 2.0};
    const GibbsAverage jumps =
        gibbs_average(sheet, free, GibbsFunctional::jump_count, 20000, rng);
    // free walk: Poisson(2dt) mean 4, SE sqrt(4/n)
    CHECK(std::abs(jumps.value - 4.0) < 3.0 * std::sqrt(4.0 / 20000.0));
    CHECK_FALSE(jumps.low_confidence);

    EnvironmentSheet sheet2(1, 2002);
    const GibbsAverage overlap =
        gibbs_average(sheet2, {1, 0.7, 1.5}, GibbsFunctional::replica_overlap, 400, rng);
    CHECK(overlap.value >= 0.0);
    CHECK(overlap.value <= 1.0);

    const GibbsAverage disp =
        gibbs_average(sheet2, {1, 0.0, 1.5}, GibbsFunctional::endpoint_displacement,
                      400, rng);
    CHECK(disp.value >= 0.0);
    CHECK_THROWS_AS(gibbs_average(sheet2, free, GibbsFunctional::jump_count, 5, rng),
                    std::invalid_argument);
}

TEST_CASE("ModelParams validation") {
    CHECK_THROWS_AS((ModelParams{0, 1.0, 1.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((ModelParams{1, -0.5, 1.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((ModelParams{1, 1.0, 0.0}).validate(), std::invalid_argument);
}

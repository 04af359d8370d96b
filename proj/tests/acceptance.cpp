// Acceptance gate: one pass/fail line per criterion. Run with a criterion
// name (A1..A11) or with no argument to run all of them.
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "polymer/disorder.hpp"
#include "polymer/experiments.hpp"
#include "polymer/fieldopt.hpp"
#include "polymer/gibbs.hpp"

using namespace polymer;
namespace fs = std::filesystem;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (!detail.empty())
                detail += "; ";
            detail += what;
        }
    }
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

JumpPath make_path(double t, std::vector<double> times, std::vector<Site> positions) {
    JumpPath p;
    p.horizon = t;
    p.start = positions.front();
    p.jump_times = std::move(times);
    p.positions = std::move(positions);
    p.validate();
    return p;
}

// A1: empirical covariance of W over a fixed 6-point plan across 2 sites
// matches (s ^ t) delta(x - y) entrywise within 4 SE over 10^4 sheets.
Check a1() {
    Check c;
    const int n = 10000;
    const std::vector<std::pair<Site, double>> plan = {
        {{0}, 0.5}, {{0}, 1.0}, {{0}, 2.0}, {{1}, 0.25}, {{1}, 1.0}, {{1}, 1.75}};
    const std::size_t m = plan.size();
    std::vector<std::vector<double>> sum(m, std::vector<double>(m, 0.0));
    std::vector<double> vals(m);
    for (int i = 0; i < n; ++i) {
        EnvironmentSheet sheet(1, 100000 + static_cast<std::uint64_t>(i));
        for (std::size_t a = 0; a < m; ++a)
            vals[a] = sheet.value_at(plan[a].first, plan[a].second);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a; b < m; ++b)
                sum[a][b] += vals[a] * vals[b];
    }
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a; b < m; ++b) {
            const bool same = plan[a].first == plan[b].first;
            const double target =
                same ? std::min(plan[a].second, plan[b].second) : 0.0;
            const double va = plan[a].second, vb = plan[b].second;
            const double se = std::sqrt((target * target + va * vb) / n);
            const double got = sum[a][b] / n;
            c.require(std::abs(got - target) < 4.0 * se,
                      "cov(" + std::to_string(a) + "," + std::to_string(b) + ") = " +
                          num(got) + " vs " + num(target) + " (4 SE = " +
                          num(4.0 * se) + ")");
        }
    }
    return c;
}

// A2: sheet-averaged Z over 10^3 sheets equals exp(beta^2 t / 2) within
// 3 SE for three (d, beta, t) triples.
Check a2() {
    Check c;
    const std::vector<ModelParams> cases = {{1, 0.5, 1.0}, {2, 0.5, 2.0}, {3, 1.0, 1.0}};
    std::uint64_t tag = 0;
    for (const ModelParams& params : cases) {
        const int n_env = 1000;
        const long n_paths = 200;
        double sum = 0.0, sum_sq = 0.0;
        const Rng root = Rng::from_seed(2222 + tag);
        for (int e = 0; e < n_env; ++e) {
            EnvironmentSheet sheet(params.d,
                                   root.derive(2 * static_cast<std::uint64_t>(e)).key());
            Rng rng = root.derive(2 * static_cast<std::uint64_t>(e) + 1);
            const double z = std::exp(estimate_partition(sheet, params, n_paths, rng).log_Z);
            sum += z;
            sum_sq += z * z;
        }
        const double mean = sum / n_env;
        const double se = std::sqrt((sum_sq / n_env - mean * mean) / (n_env - 1));
        const double target = std::exp(params.beta * params.beta * params.t / 2.0);
        c.require(std::abs(mean - target) < 3.0 * se,
                  "d=" + std::to_string(params.d) + ": mean Z = " + num(mean) +
                      " vs " + num(target) + " (3 SE = " + num(3.0 * se) + ")");
        ++tag;
    }
    return c;
}

// A3: direct Monte Carlo and the truncated series agree within combined
// 3 SE on 100 shared sheets at d=1, t=0.5, beta=1, n_max=12.
Check a3() {
    Check c;
    const ModelParams params{1, 1.0, 0.5};
    const int n_env = 100;
    double sum = 0.0, sum_sq = 0.0;
    const Rng root = Rng::from_seed(333);
    for (int e = 0; e < n_env; ++e) {
        EnvironmentSheet sheet(1, root.derive(3 * static_cast<std::uint64_t>(e)).key());
        Rng r1 = root.derive(3 * static_cast<std::uint64_t>(e) + 1);
        Rng r2 = root.derive(3 * static_cast<std::uint64_t>(e) + 2);
        const double z_mc = std::exp(estimate_partition(sheet, params, 2000, r1).log_Z);
        const PartitionEstimate series =
            estimate_partition_series(sheet, params, 12, 32, r2);
        const double diff = z_mc - std::exp(series.log_Z);
        sum += diff;
        sum_sq += diff * diff;
        if (e == 0)
            c.require(!series.truncation_flagged, "series truncation flagged");
    }
    const double mean = sum / n_env;
    const double se = std::sqrt((sum_sq / n_env - mean * mean) / (n_env - 1));
    c.require(std::abs(mean) < 3.0 * se,
              "mean difference " + num(mean) + " (3 SE = " + num(3.0 * se) + ")");
    return c;
}

// A4: empirical Cov(H(p1), H(p2)) over 10^4 sheets equals the
// intersection time for 5 fixed path pairs, including the pair that
// saturates the field-distance bound at 2 * 0.1.
Check a4() {
    Check c;
    const std::vector<std::pair<JumpPath, JumpPath>> pairs = {
        {make_path(1.0, {}, {{0}}), make_path(1.0, {}, {{0}})},
        {make_path(1.0, {}, {{0}}), make_path(1.0, {0.5}, {{0}, {1}})},
        {make_path(1.0, {0.4}, {{0}, {1}}), make_path(1.0, {0.5}, {{0}, {1}})},
        {make_path(1.0, {0.3, 0.6}, {{0}, {1}, {0}}), make_path(1.0, {}, {{0}})},
        {make_path(1.0, {0.2}, {{0}, {-1}}), make_path(1.0, {0.2}, {{0}, {1}})}};

    const double sat = field_distance_sq(pairs[2].first, pairs[2].second);
    c.require(std::abs(sat - 0.2) < 1e-12,
              "saturating pair distance^2 = " + num(sat) + " vs 0.2");

    const int n = 10000;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const double target = intersection_time(pairs[k].first, pairs[k].second);
        double sxy = 0.0;
        for (int i = 0; i < n; ++i) {
            EnvironmentSheet sheet(1, 44000 + 100000 * k + static_cast<std::uint64_t>(i));
            sxy += hamiltonian(sheet, pairs[k].first) * hamiltonian(sheet, pairs[k].second);
        }
        // Var(H) = horizon = 1 for each path
        const double se = std::sqrt((target * target + 1.0) / n);
        const double got = sxy / n;
        c.require(std::abs(got - target) < 3.0 * se,
                  "pair " + std::to_string(k) + ": cov " + num(got) + " vs " +
                      num(target) + " (3 SE = " + num(3.0 * se) + ")");
    }
    return c;
}

// A5: DP equals brute force (value and argmax under the shared
// tie-break) on 200 random instances with K <= 8, d <= 2, max_jumps <= 3.
Check a5() {
    Check c;
    Rng rng = Rng::from_seed(55555);
    for (int i = 0; i < 200 && c.ok; ++i) {
        const int d = 1 + rng.uniform_int(2);
        const int K = 2 + rng.uniform_int(d == 1 ? 7 : 4);
        ConstraintSpec cs;
        cs.max_jumps = rng.uniform_int(4);
        cs.min_separation_steps = rng.uniform_int(3);
        cs.endpoint_buffer_steps = rng.uniform_int(3);
        GridEnvironment genv({1.0, K}, d, 3, 500000 + static_cast<std::uint64_t>(i));
        const SupResult dp = dp_sup_field(genv, cs);
        const SupResult bf = brute_force_sup(genv, cs);
        c.require(dp.value == bf.value && dp.jumps_used == bf.jumps_used &&
                      dp.argmax_path.jump_steps == bf.argmax_path.jump_steps &&
                      dp.argmax_path.positions == bf.argmax_path.positions,
                  "instance " + std::to_string(i) + ": DP " + num(dp.value) + " (" +
                      std::to_string(dp.jumps_used) + " jumps) vs BF " + num(bf.value) +
                      " (" + std::to_string(bf.jumps_used) + " jumps)");
        c.require(evaluate_grid_path(genv, dp.argmax_path) == dp.value,
                  "instance " + std::to_string(i) + ": re-evaluation mismatch");
    }
    return c;
}

// A6: sqrt(r) scaling of F, the separation-constrained F^rho closing on
// F as rho drops, and Upsilon vanishing as the tube narrows.
Check a6() {
    Check c;
    const std::vector<double> t_list{8.0, 16.0, 32.0};
    const int n_env = 32;
    const std::uint64_t seed = 66;

    const FTable f1 = estimate_F(1.0, t_list, 8, n_env, 1, seed);
    const FTable f4 = estimate_F(4.0, t_list, 8, n_env, 1, seed);
    const double ratio = f4.F / f1.F;
    c.require(ratio > 1.8 && ratio < 2.2,
              "F(4)/F(1) = " + num(ratio) + " outside [1.8, 2.2]");

    double prev = -1.0;
    FTable last;
    for (double varrho : {0.4, 0.2, 0.1, 0.05}) {
        const FTable frho = estimate_F_rho(1.0, varrho, t_list, 8, n_env, 1, seed);
        c.require(frho.F >= prev,
                  "F^rho not nondecreasing as rho drops at rho = " + num(varrho));
        c.require(frho.F <= f1.F + 1e-12,
                  "F^rho above the unconstrained F at rho = " + num(varrho));
        prev = frho.F;
        last = frho;
    }
    const double gap_tol = 2.0 * std::sqrt(last.se * last.se + f1.se * f1.se);
    c.require(f1.F - last.F < gap_tol,
              "F - F^0.05 = " + num(f1.F - last.F) + " (2 SE = " + num(gap_tol) + ")");

    std::map<double, double> upsilon;
    double prev_u = 0.0;
    for (double rho : {0.1, 0.2, 0.4, 0.8}) {
        const auto rows = estimate_upsilon(1.0, rho, {16.0}, n_env, 8, 1, seed);
        upsilon[rho] = rows.back().upsilon;
        c.require(rows.back().upsilon >= prev_u,
                  "Upsilon not monotone in rho at rho = " + num(rho));
        prev_u = rows.back().upsilon;
    }
    c.require(upsilon[0.1] < upsilon[0.8] / 2.0,
              "Upsilon(0.1) = " + num(upsilon[0.1]) + " not below Upsilon(0.8)/2 = " +
                  num(upsilon[0.8] / 2.0));
    return c;
}

// A7: Jensen bound p_hat <= beta^2/2 + 3 SE and p_hat(t) nondecreasing
// within 3 SE at d=1, beta=1, t in {2, 4, 8}.
Check a7() {
    Check c;
    const double beta = 1.0;
    double prev = -1e30, prev_se = 0.0;
    std::uint64_t tag = 0;
    for (double t : {2.0, 4.0, 8.0}) {
        const FreeEnergyPoint fe = free_energy_point({1, beta, t}, 48, 4000, 777 + tag);
        c.require(fe.p_hat <= beta * beta / 2.0 + 3.0 * fe.se,
                  "t=" + num(t) + ": p_hat = " + num(fe.p_hat) + " above beta^2/2 + 3 SE");
        const double combined = 3.0 * std::sqrt(fe.se * fe.se + prev_se * prev_se);
        c.require(fe.p_hat >= prev - combined,
                  "t=" + num(t) + ": p_hat = " + num(fe.p_hat) +
                      " dropped below the previous horizon by more than 3 SE");
        prev = fe.p_hat;
        prev_se = fe.se;
        ++tag;
    }
    return c;
}

// A8: desk-scale low-temperature trend. C0_hat from the F(1) pipeline;
// p_hat(beta) log(beta) / beta^2 within a factor of 3 of C0_hat at
// beta in {4, 8}, and p_hat / (beta^2/2) decreasing in beta.
Check a8() {
    Check c;
    const std::vector<double> t_list{8.0, 16.0, 32.0};
    const FTable f1 = estimate_F(1.0, t_list, 8, 32, 1, 88);
    const C0Estimate c0 = estimate_C0(f1.F, f1.se);
    c.require(c0.value > 0.0, "C0_hat nonpositive");

    const double t = 4.0;
    std::vector<double> share;
    std::uint64_t tag = 0;
    for (double beta : {4.0, 8.0}) {
        const long budget = default_jump_budget(beta, c0.value, 1.0);
        const double proposal = std::max(2.0, static_cast<double>(budget));
        const FreeEnergyPoint fe =
            free_energy_point({1, beta, t}, 16, 20000, 888 + tag, proposal);
        const double ratio = fe.p_hat * std::log(beta) / (beta * beta);
        c.require(ratio > c0.value / 3.0 && ratio < 3.0 * c0.value,
                  "beta=" + num(beta) + ": ratio " + num(ratio) +
                      " outside factor 3 of C0_hat = " + num(c0.value));
        share.push_back(fe.p_hat / (beta * beta / 2.0));
        ++tag;
    }
    c.require(share[1] < share[0],
              "p_hat/(beta^2/2) not decreasing: " + num(share[0]) + " -> " +
                  num(share[1]));
    return c;
}

// A9: disorder verdicts: decaying at (d=1, beta=1), stable at
// (d=3, beta=0.3) on the grid {4, 8, 16, 32}, with mean M within 3 SE
// of 1 in the stable case.
Check a9() {
    Check c;
    const std::vector<double> grid{4.0, 8.0, 16.0, 32.0};
    const DisorderReport strong = martingale_trajectories(1, 1.0, grid, 32, 3000, 99);
    c.require(strong.verdict == Verdict::decaying,
              "d=1, beta=1: verdict not decaying (slope " + num(strong.slope) +
                  ", below " + num(strong.bootstrap_below) + ")");

    const DisorderReport weak = martingale_trajectories(3, 0.3, grid, 32, 2000, 98);
    c.require(weak.verdict == Verdict::stable,
              "d=3, beta=0.3: verdict not stable (slope " + num(weak.slope) +
                  ", within " + num(weak.bootstrap_within) + ")");
    for (std::size_t g = 0; g < grid.size(); ++g)
        c.require(std::abs(weak.mean_M[g] - 1.0) < 3.0 * weak.mean_M_se[g],
                  "t=" + num(grid[g]) + ": mean M = " + num(weak.mean_M[g]) +
                      " (3 SE = " + num(3.0 * weak.mean_M_se[g]) + ")");
    return c;
}

// A10: the geometric local-time route at d=3, beta=1: gamma matches
// ln(12/11), the formula matches direct simulation within 3 SE, and the
// second-moment ratio plateaus below the bound.
Check a10() {
    Check c;
    const double gamma = gamma_of_beta(3, 1.0);
    c.require(std::abs(gamma - 0.08701) < 5e-5,
              "gamma = " + num(gamma) + " vs 0.08701");

    const long cap = 10000, n = 100000;
    const ReturnProbability q = return_probability(3, cap, n, 1010);
    c.require(std::abs(q.q_hat - q.q_half) <
                  3.0 * std::sqrt(q.se * q.se + q.se_half * q.se_half) + 0.01,
              "q_hat cap sensitivity: " + num(q.q_hat) + " vs " + num(q.q_half));

    const LocalTimeStats formula = local_time_mgf(gamma, q.q_hat, q.se);
    c.require(!formula.diverged, "local-time MGF diverged at beta = 1");
    const MgfSimEstimate direct = direct_local_time_mgf(3, gamma, cap, n, 1011);
    const double eg = std::exp(gamma);
    const double dq = eg * (eg - 1.0) / ((1.0 - q.q_hat * eg) * (1.0 - q.q_hat * eg));
    const double combined = std::sqrt(direct.se * direct.se + dq * dq * q.se * q.se);
    c.require(std::abs(formula.mgf_value - direct.value) < 3.0 * combined + 0.01,
              "mgf " + num(formula.mgf_value) + " vs direct " + num(direct.value) +
                  " (3 SE = " + num(3.0 * combined) + ")");

    std::uint64_t tag = 0;
    for (double t : {2.0, 4.0, 8.0, 16.0}) {
        const RatioEstimate r = second_moment_ratio({3, 1.0, t}, 100000, 1020 + tag);
        c.require(r.ratio < formula.mgf_value + 3.0 * r.se + 0.02,
                  "t=" + num(t) + ": ratio " + num(r.ratio) + " above bound " +
                      num(formula.mgf_value));
        ++tag;
    }
    return c;
}

// A11: byte-identical reruns and worker-count independence through the
// experiment harness.
Check a11() {
    Check c;
    const fs::path base = fs::temp_directory_path() / "polymerlab_acceptance";
    fs::remove_all(base);

    ExperimentConfig cfg;
    cfg.experiment = "free-energy";
    cfg.d = 1;
    cfg.beta = {0.5, 1.0};
    cfg.t = {1.0, 2.0};
    cfg.n_env = 8;
    cfg.n_paths = 500;
    cfg.seed = 1111;

    auto read = [&](const fs::path& dir) {
        std::ifstream in(dir / "free_energy.csv", std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };

    cfg.output_dir = (base / "run1").string();
    const RunManifest m1 = run(cfg);
    cfg.output_dir = (base / "run2").string();
    const RunManifest m2 = run(cfg);
    c.require(m1.file_digests == m2.file_digests, "rerun digests differ");
    c.require(read(base / "run1") == read(base / "run2"), "rerun CSV bytes differ");

    cfg.worker_count = 4;
    cfg.output_dir = (base / "run4").string();
    run(cfg);
    c.require(read(base / "run1") == read(base / "run4"),
              "worker_count 1 vs 4 CSV bytes differ");
    return c;
}

} // namespace

int main(int argc, char** argv) {
    const std::map<std::string, std::function<Check()>> criteria = {
        {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4},  {"A5", a5},  {"A6", a6},
        {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}, {"A11", a11}};

    std::vector<std::string> selected;
    if (argc > 1) {
        for (int i = 1; i < argc; ++i) {
            if (!criteria.count(argv[i])) {
                std::fprintf(stderr, "unknown criterion %s\n", argv[i]);
                return 2;
            }
            selected.push_back(argv[i]);
        }
    } else {
        for (int i = 1; i <= 11; ++i)
            selected.push_back("A" + std::to_string(i));
    }

    bool all_ok = true;
    for (const std::string& name : selected) {
        const Check result = criteria.at(name)();
        if (result.ok) {
            std::printf("%s PASS\n", name.c_str());
        } else {
            std::printf("%s FAIL: %s\n", name.c_str(), result.detail.c_str());
            all_ok = false;
        }
        std::fflush(stdout);
    }
    return all_ok ? 0 : 1;
}

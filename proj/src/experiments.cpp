#include "polymer/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <type_traits>

#include <json.hpp>

#include "polymer/disorder.hpp"
#include "polymer/fieldopt.hpp"
#include "polymer/gibbs.hpp"
#include "polymer/parallel.hpp"

namespace polymer {

namespace fs = std::filesystem;
using nlohmann::json;

std::string content_digest(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class OutputSet {
public:
    explicit OutputSet(const std::string& dir) : dir_(dir) {
        fs::create_directories(dir_);
    }

    void write(const std::string& name, const std::string& bytes) {
        std::ofstream out(fs::path(dir_) / name, std::ios::binary);
        if (!out)
            throw std::runtime_error("run: cannot write " + name + " in " + dir_);
        out << bytes;
        digests_[name] = content_digest(bytes);
    }

    const std::map<std::string, std::string>& digests() const { return digests_; }

private:
    std::string dir_;
    std::map<std::string, std::string> digests_;
};

class StageTimer {
public:
    explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}
    template <class F>
    auto stage(const std::string& name, F&& fn) {
        const auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            sink_[name] = elapsed_ms(start);
        } else {
            auto out = fn();
            sink_[name] = elapsed_ms(start);
            return out;
        }
    }

private:
    static double elapsed_ms(std::chrono::steady_clock::time_point start) {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start)
            .count();
    }
    std::map<std::string, double>& sink_;
};

std::uint64_t sub_seed(const ExperimentConfig& c, std::uint64_t tag) {
    return derive_stream(mix64(c.seed), tag);
}

std::string free_energy_csv(const ExperimentConfig& c,
                            const std::vector<std::tuple<double, double, FreeEnergyPoint>>& rows) {
    std::ostringstream out;
    out << "d,beta,t,n_env,n_paths,seed,p_hat,se,ess_min\n";
    for (const auto& [beta, t, fe] : rows)
        out << c.d << ',' << fmt(beta) << ',' << fmt(t) << ',' << c.n_env << ','
            << c.n_paths << ',' << c.seed << ',' << fmt(fe.p_hat) << ','
            << fmt(fe.se) << ',' << fmt(fe.min_ess) << "\n";
    return out.str();
}

std::vector<std::tuple<double, double, FreeEnergyPoint>>
run_free_energy_grid(const ExperimentConfig& c) {
    std::vector<std::tuple<double, double, FreeEnergyPoint>> rows;
    std::uint64_t combo = 0;
    for (double beta : c.beta) {
        for (double t : c.t) {
            const ModelParams params{c.d, beta, t};
            rows.emplace_back(beta, t,
                              free_energy_point(params, c.n_env, c.n_paths,
                                                sub_seed(c, 100 + combo),
                                                c.proposal_rate, c.worker_count));
            ++combo;
        }
    }
    return rows;
}

std::string field_sup_csv(const std::vector<FTable>& tables, int d, int n_env) {
    std::ostringstream out;
    out << "r,rho,t,K,d,n_env,F_hat,se\n";
    for (const FTable& table : tables)
        for (const FRow& row : table.rows)
            out << fmt(table.r) << ',' << fmt(table.varrho) << ',' << fmt(row.t) << ','
                << row.K << ',' << d << ',' << n_env << ',' << fmt(row.F_hat) << ','
                << fmt(row.se) << "\n";
    return out.str();
}

void run_partition_like(const ExperimentConfig& c, OutputSet& files, StageTimer& timer) {
    auto rows = timer.stage("free_energy", [&] { return run_free_energy_grid(c); });
    files.write(c.experiment == "partition" ? "partition.csv" : "free_energy.csv",
                free_energy_csv(c, rows));
}

void run_field_sup(const ExperimentConfig& c, OutputSet& files, StageTimer& timer) {
    auto tables = timer.stage("field_sup", [&] {
        std::vector<FTable> tables;
        for (double r : c.r)
            for (double varrho : c.varrho)
                tables.push_back(estimate_F_rho(r, varrho, c.t, c.k_per_unit_time,
                                                c.n_env, c.d, sub_seed(c, 200),
                                                c.worker_count));
        return tables;
    });
    files.write("field_sup.csv", field_sup_csv(tables, c.d, c.n_env));

    // argmax path dump for the first table's largest horizon
    std::ostringstream paths;
    const double t = c.t.back();
    const int K = static_cast<int>(
        std::lround(c.k_per_unit_time * t * std::max(1.0, c.r.front())));
    const int budget = static_cast<int>(std::floor(c.r.front() * t + 1e-9));
    GridEnvironment genv({t, K}, c.d, budget,
                         derive_stream(derive_stream(mix64(sub_seed(c, 200)),
                                                     c.t.size() - 1),
                                       0));
    ConstraintSpec cs;
    cs.max_jumps = budget;
    const SupResult sup = dp_sup_field(genv, cs);
    paths << "# argmax path, r=" << fmt(c.r.front()) << " t=" << fmt(t) << " value="
          << fmt(sup.value) << "\n";
    for (std::size_t j = 0; j < sup.argmax_path.positions.size(); ++j) {
        paths << (j == 0 ? 0 : sup.argmax_path.jump_steps[j - 1]);
        for (int coord : sup.argmax_path.positions[j])
            paths << ' ' << coord;
        paths << "\n";
    }
    files.write("argmax_path.txt", paths.str());
}

void run_scaling(const ExperimentConfig& c, OutputSet& files, StageTimer& timer) {
    auto tables = timer.stage("scaling", [&] {
        std::vector<FTable> tables;
        for (double r : c.r)
            tables.push_back(estimate_F(r, c.t, c.k_per_unit_time, c.n_env, c.d,
                                        sub_seed(c, 200), c.worker_count));
        return tables;
    });
    files.write("field_sup.csv", field_sup_csv(tables, c.d, c.n_env));

    std::ostringstream out;
    out << "r,F_hat,se,sqrt_r,ratio_to_base\n";
    const double base = tables.front().F;
    for (const FTable& table : tables)
        out << fmt(table.r) << ',' << fmt(table.F) << ',' << fmt(table.se) << ','
            << fmt(std::sqrt(table.r)) << ',' << fmt(table.F / base) << "\n";
    files.write("scaling.csv", out.str());
}

void run_upsilon(const ExperimentConfig& c, OutputSet& files, StageTimer& timer) {
    auto all = timer.stage("upsilon", [&] {
        std::vector<std::pair<double, std::vector<UpsilonRow>>> all;
        for (double rho : c.rho)
            all.emplace_back(rho, estimate_upsilon(c.r.front(), rho, c.t, c.n_env,
                                                   c.n_bases, c.d, sub_seed(c, 300),
                                                   c.worker_count));
        return all;
    });
    std::ostringstream out;
    out << "r,rho,t,Upsilon_hat,se\n";
    for (const auto& [rho, rows] : all)
        for (const UpsilonRow& row : rows)
            out << fmt(c.r.front()) << ',' << fmt(rho) << ',' << fmt(row.t) << ','
                << fmt(row.upsilon) << ',' << fmt(row.se) << "\n";
    files.write("upsilon.csv", out.str());
}

const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::decaying:
        return "decaying";
    case Verdict::stable:
        return "stable";
    default:
        return "inconclusive";
    }
}

void run_disorder(const ExperimentConfig& c, OutputSet& files, StageTimer& timer) {
    std::ostringstream traj, ratios;
    traj << "d,beta,t,env_id,log_M\n";
    ratios << "d,beta,t,ratio,se\n";
    json summary = json::array();

    timer.stage("disorder", [&] {
        std::uint64_t tag = 0;
        for (double beta : c.beta) {
            const DisorderReport report = martingale_trajectories(
                c.d, beta, c.t, c.n_env, c.n_paths, sub_seed(c, 400 + tag), c.theta,
                c.worker_count);
            for (std::size_t e = 0; e < report.log_M.size(); ++e)
                for (std::size_t g = 0; g < report.t_grid.size(); ++g)
                    traj << c.d << ',' << fmt(beta) << ',' << fmt(report.t_grid[g])
                         << ',' << e << ',' << fmt(report.log_M[e][g]) << "\n";
            for (double t : c.t) {
                const RatioEstimate ratio = second_moment_ratio(
                    {c.d, beta, t}, c.n_samples, sub_seed(c, 500 + tag));
                ratios << c.d << ',' << fmt(beta) << ',' << fmt(t) << ','
                       << fmt(ratio.ratio) << ',' << fmt(ratio.se) << "\n";
            }
            json entry;
            entry["beta"] = beta;
            entry["verdict"] = verdict_name(report.verdict);
            entry["slope"] = report.slope;
            entry["bootstrap_below"] = report.bootstrap_below;
            entry["bootstrap_within"] = report.bootstrap_within;
            entry["excluded_cells"] = report.excluded_count;
            summary.push_back(entry);
            ++tag;
        }
    });

    files.write("trajectories.csv", traj.str());
    files.write("second_moment.csv", ratios.str());
    files.write("summary.json", summary.dump(2) + "\n");
}

void run_overlap(const ExperimentConfig& c, OutputSet& files, StageTimer& timer) {
    std::ostringstream out;
    out << "d,beta,t,n_samples,overlap,se,ess\n";
    timer.stage("overlap", [&] {
        std::uint64_t tag = 0;
        for (double beta : c.beta) {
            for (double t : c.t) {
                EnvironmentSheet sheet(c.d, sub_seed(c, 600 + 2 * tag));
                Rng rng = Rng::from_seed(sub_seed(c, 600 + 2 * tag + 1));
                const GibbsAverage avg =
                    gibbs_average(sheet, {c.d, beta, t},
                                  GibbsFunctional::replica_overlap, c.n_samples, rng);
                out << c.d << ',' << fmt(beta) << ',' << fmt(t) << ',' << c.n_samples
                    << ',' << fmt(avg.value) << ',' << fmt(avg.std_error) << ','
                    << fmt(avg.effective_sample_size) << "\n";
                ++tag;
            }
        }
    });
    files.write("overlap.csv", out.str());
}

void run_c0_pipeline(const ExperimentConfig& c, OutputSet& files, StageTimer& timer) {
    const FTable f1 = timer.stage("estimate_F1", [&] {
        return estimate_F(1.0, c.t, c.k_per_unit_time, c.n_env, c.d, sub_seed(c, 200),
                          c.worker_count);
    });
    files.write("field_sup.csv", field_sup_csv({f1}, c.d, c.n_env));

    const C0Estimate c0 = estimate_C0(f1.F, f1.se);
    std::ostringstream c0csv;
    c0csv << "F1_hat,F1_se,C0_hat,C0_se\n"
          << fmt(f1.F) << ',' << fmt(f1.se) << ',' << fmt(c0.value) << ','
          << fmt(c0.se) << "\n";
    files.write("c0.csv", c0csv.str());

    // free energy at the smallest configured horizon; a proposal rate
    // tilted toward the typical polymer jump rate keeps the estimator
    // alive at large beta
    const double t_fe = c.t.front();
    std::vector<std::tuple<double, double, FreeEnergyPoint>> rows;
    timer.stage("free_energy", [&] {
        std::uint64_t combo = 0;
        for (double beta : c.beta) {
            double proposal = c.proposal_rate;
            if (proposal <= 0.0 && beta > 1.0) {
                const double lb = std::log(beta);
                proposal = std::max(2.0 * c.d,
                                    c0.value / 2.0 * beta * beta / (lb * lb));
            }
            const ModelParams params{c.d, beta, t_fe};
            rows.emplace_back(beta, t_fe,
                              free_energy_point(params, c.n_env, c.n_paths,
                                                sub_seed(c, 700 + combo), proposal,
                                                c.worker_count));
            ++combo;
        }
    });
    files.write("free_energy.csv", free_energy_csv(c, rows));

    std::ostringstream cmp;
    cmp << "d,beta,t,p_hat,se,ratio,c0_hat\n";
    for (const auto& [beta, t, fe] : rows) {
        const double ratio =
            beta > 1.0 ? fe.p_hat * std::log(beta) / (beta * beta) : 0.0;
        cmp << c.d << ',' << fmt(beta) << ',' << fmt(t) << ',' << fmt(fe.p_hat) << ','
            << fmt(fe.se) << ',' << fmt(ratio) << ',' << fmt(c0.value) << "\n";
    }
    files.write("comparison.csv", cmp.str());
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = c.experiment;
    j["d"] = c.d;
    j["beta"] = c.beta;
    j["t"] = c.t;
    j["k_per_unit_time"] = c.k_per_unit_time;
    j["n_env"] = c.n_env;
    j["n_paths"] = c.n_paths;
    j["n_samples"] = c.n_samples;
    j["quad_samples"] = c.quad_samples;
    j["n_max"] = c.n_max;
    j["r"] = c.r;
    j["rho"] = c.rho;
    j["varrho"] = c.varrho;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["worker_count"] = c.worker_count;
    j["n_bases"] = c.n_bases;
    j["theta"] = c.theta;
    j["proposal_rate"] = c.proposal_rate;
    return j;
}

} // namespace

RunManifest run(const ExperimentConfig& config) {
    const auto diagnostics = validate(config);
    for (const Diagnostic& d : diagnostics)
        if (d.fatal)
            throw std::invalid_argument("run: invalid config: " + d.message);

    const auto start = std::chrono::steady_clock::now();
    RunManifest manifest;
    manifest.artifact_version = kArtifactVersion;
    manifest.config = config;

    OutputSet files(config.output_dir);
    StageTimer timer(manifest.stage_ms);

    if (config.experiment == "partition" || config.experiment == "free-energy")
        run_partition_like(config, files, timer);
    else if (config.experiment == "field-sup")
        run_field_sup(config, files, timer);
    else if (config.experiment == "scaling")
        run_scaling(config, files, timer);
    else if (config.experiment == "upsilon")
        run_upsilon(config, files, timer);
    else if (config.experiment == "disorder")
        run_disorder(config, files, timer);
    else if (config.experiment == "overlap")
        run_overlap(config, files, timer);
    else if (config.experiment == "c0-pipeline")
        run_c0_pipeline(config, files, timer);
    else
        throw std::invalid_argument("run: unknown experiment " + config.experiment);

    manifest.wall_clock_ms = std::chrono::duration<double, std::milli>(
                                 std::chrono::steady_clock::now() - start)
                                 .count();
    manifest.file_digests = files.digests();

    json j;
    j["artifact_version"] = manifest.artifact_version;
    j["config"] = config_to_json(config);
    j["wall_clock_ms"] = manifest.wall_clock_ms;
    j["stage_ms"] = manifest.stage_ms;
    json file_list = json::array();
    for (const auto& [name, digest] : manifest.file_digests) {
        json f;
        f["name"] = name;
        f["digest"] = digest;
        file_list.push_back(f);
    }
    j["files"] = file_list;
    std::ofstream out(fs::path(config.output_dir) / "manifest.json");
    out << j.dump(2) << "\n";
    return manifest;
}

} // namespace polymer

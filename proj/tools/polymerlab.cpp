#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polymer/experiments.hpp"

namespace {

void apply_env_overrides(polymer::ExperimentConfig& config) {
    if (const char* dir = std::getenv("POLYMERLAB_OUTPUT_DIR"))
        config.output_dir = dir;
    if (const char* workers = std::getenv("POLYMERLAB_WORKERS"))
        config.apply_override("worker_count", workers);
}

void apply_flag_overrides(polymer::ExperimentConfig& config,
                          const std::vector<std::string>& sets,
                          const std::string& output_dir, long seed, int workers) {
    for (const std::string& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        config.apply_override(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!output_dir.empty())
        config.output_dir = output_dir;
    if (seed >= 0)
        config.seed = static_cast<std::uint64_t>(seed);
    if (workers > 0)
        config.worker_count = workers;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"polymerlab: lattice polymer experiment runner"};
    app.require_subcommand(1);

    std::string config_path, output_dir;
    std::vector<std::string> sets;
    long seed = -1;
    int workers = 0;

    CLI::App* run_cmd = app.add_subcommand("run", "run an experiment from a config file");
    run_cmd->add_option("config", config_path, "flat key = value config file")->required();
    run_cmd->add_option("--set", sets, "override a config key (key=value), repeatable");
    run_cmd->add_option("--output-dir", output_dir, "override the output directory");
    run_cmd->add_option("--seed", seed, "override the master seed");
    run_cmd->add_option("--workers", workers, "override the worker count");

    CLI::App* validate_cmd =
        app.add_subcommand("validate", "check a config without running it");
    validate_cmd->add_option("config", config_path, "flat key = value config file")
        ->required();
    validate_cmd->add_option("--set", sets, "override a config key (key=value), repeatable");

    CLI::App* version_cmd = app.add_subcommand("version", "print the artifact version");

    CLI11_PARSE(app, argc, argv);

    try {
        if (version_cmd->parsed()) {
            std::printf("polymerlab %s\n", polymer::kArtifactVersion);
            return 0;
        }

        polymer::ExperimentConfig config =
            polymer::ExperimentConfig::parse_file(config_path);
        apply_env_overrides(config);
        apply_flag_overrides(config, sets, output_dir, seed, workers);

        if (validate_cmd->parsed()) {
            const auto diagnostics = polymer::validate(config);
            bool fatal = false;
            for (const auto& d : diagnostics) {
                std::printf("%s: %s\n", d.fatal ? "error" : "warning", d.message.c_str());
                fatal = fatal || d.fatal;
            }
            if (!fatal)
                std::printf("ok: %s\n", config.experiment.c_str());
            return fatal ? 1 : 0;
        }

        const polymer::RunManifest manifest = polymer::run(config);
        std::printf("experiment %s finished in %.1f ms\n",
                    config.experiment.c_str(), manifest.wall_clock_ms);
        for (const auto& [name, digest] : manifest.file_digests)
            std::printf("  %s  %s\n", digest.c_str(), name.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

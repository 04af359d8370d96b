#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace polymer {

// Flat key = value experiment configuration; list values are
// comma-separated. Unknown keys are rejected at parse time.
struct ExperimentConfig {
    std::string experiment;           // partition | free-energy | field-sup |
                                      // scaling | upsilon | disorder | overlap |
                                      // c0-pipeline
    int d = 1;
    std::vector<double> beta{0.5};
    std::vector<double> t{1.0};
    int k_per_unit_time = 8;
    int n_env = 16;
    long n_paths = 1000;
    long n_samples = 10000;
    int quad_samples = 64;
    int n_max = 12;
    std::vector<double> r{1.0};
    std::vector<double> rho{0.2};
    std::vector<double> varrho{0.1};
    std::uint64_t seed = 1;
    std::string output_dir = ".";
    int worker_count = 1;
    int n_bases = 8;
    double theta = 0.02;
    double proposal_rate = -1.0;      // <= 0: free rate 2d

    static ExperimentConfig parse_file(const std::string& path);
    static ExperimentConfig parse_text(const std::string& text);
    void apply_override(const std::string& key, const std::string& value);
};

struct Diagnostic {
    bool fatal = false;
    std::string message;
};

// Static checks: structural errors, DP state forecasts, series truncation
// forecasts, disorder-formula domain warnings.
std::vector<Diagnostic> validate(const ExperimentConfig& config);

} // namespace polymer

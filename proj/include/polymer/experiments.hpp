#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "polymer/config.hpp"

namespace polymer {

struct RunManifest {
    std::string artifact_version;
    ExperimentConfig config;
    double wall_clock_ms = 0.0;
    std::map<std::string, double> stage_ms;
    std::map<std::string, std::string> file_digests; // filename -> fnv1a-64 hex
};

inline constexpr const char* kArtifactVersion = "0.1.0";

// FNV-1a 64 over raw bytes, lowercase hex
std::string content_digest(const std::string& bytes);

// Dispatches the configured experiment, writes its CSV outputs plus
// manifest.json into config.output_dir, and returns the manifest. Throws
// on invalid configs (fatal diagnostics) and on module errors.
RunManifest run(const ExperimentConfig& config);

} // namespace polymer

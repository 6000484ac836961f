// Declarative scenario execution with reproducibility manifests.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qfilter/minitoml.hpp"

namespace qfilter {

inline constexpr const char* kToolVersion = "qfilter 0.1.0";

struct ScenarioConfig {
    std::string kind;          // qubit_homodyne | free_particle | classical_ou |
                               // toyfock_oracle | custom
    minitoml::Table raw;
    std::string source_text;   // canonical bytes for the config digest
    std::uint64_t seed = 1;
    int n_trajectories = 1;
    double t_end = 1.0;
    double dt = 1e-3;
    std::vector<std::string> selectors;
    bool emit_svg = false;
};

ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);

// throws ConfigError with a diagnostic when the config is invalid
void validate_scenario(const ScenarioConfig& cfg);

struct OutputFile {
    std::string name;
    std::string digest;  // fnv1a-64 of the file bytes, hex
};

struct RunManifest {
    std::string config_digest;
    std::uint64_t seed = 0;
    std::string tool_version;
    std::string started_at;
    std::string finished_at;
    std::vector<OutputFile> outputs;

    std::string to_json() const;
};

// Executes the scenario, writes outputs + manifest.json under out_dir.
RunManifest run_scenario(const ScenarioConfig& cfg, const std::string& out_dir);

// Re-runs the scenario at each dt and reports a kind-specific discretisation
// metric with the fitted order; returns a JSON report.
std::string convergence_report(const ScenarioConfig& cfg, const std::vector<double>& dt_list);

// Runs the scenario once per value of the (dotted, numeric) parameter.
std::string sweep_report(const ScenarioConfig& cfg, const std::string& param,
                         const std::vector<double>& values, const std::string& out_dir);

std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

int worker_count();  // QFILTER_WORKERS, default hardware concurrency

}  // namespace qfilter

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xpomcp/synthesis.hpp"

namespace xpomcp {

// Built-in rule templates used by the bundled studies.
std::string tiger_template_text();
std::string velocity_template_text();

// Model-config JSON used by the velreg-w90 study (a variant of the default
// velocity-regulation economics under which the top speed is not dominated).
std::string velocity_study_model_json();

struct StudyConfig {
    std::string name = "tiger-w-sweep";
    std::string out_dir = "results";
    int runs = 200;    // runs per trace
    int traces = 10;   // traces per W (tiger study)
    std::uint64_t seed = 0;
    int particle_count = 1 << 13;
    int simulations_per_step = 1 << 13;
    int sample_count = 5000;  // Hellinger sampling w
    double tau = 0.1;         // fixed threshold (velreg study)
    BackendConfig backend;
    bool verbose = false;
};

std::vector<std::string> known_studies();

// Runs a named end-to-end study (simulate -> label -> synthesize -> detect ->
// evaluate), writing CSVs, reports and MANIFEST.json under out_dir. Per-trace
// checkpoints make interrupted runs resumable; reruns with the same config
// produce byte-identical CSVs.
void run_study(const StudyConfig& config);

}  // namespace xpomcp

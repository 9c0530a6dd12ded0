#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "usaav/dynamics.hpp"
#include "usaav/kernels.hpp"
#include "usaav/metastability.hpp"

namespace usaav {

using nlohmann::json;

// Classification thresholds for the final-state report; kept in config, not
// code.
struct ClassifyThresholds {
    double dirac_gx = 1e-3;
    double circle_residual = 1e-2;
    double min_circle_radius = 0.05;
    double great_circle_offset = 5e-2;
    double latitude_axis_align = 0.99;
    double curve_d_cond = 1e-3;
    double curve_chain_gap = 0.6;
    double cluster_target = 0.05;
};

struct ExperimentConfig {
    std::string scenario = "single";
    std::vector<std::string> models;
    std::vector<int> n_list;
    int seeds = 100;
    double beta = 1.0;
    int d = 3;
    std::uint64_t master_seed = 1;
    SimConfig sim;
    std::string output_dir = "out";

    // kernel parameters
    std::string kernel_family = "baseline";
    double omega = 2.0 * M_PI;
    int plane_a = 0;
    int plane_b = 1;
    BiasSpec bias;
    double phase_base_turns = 1.0;
    double phase_amplitude = 0.8;
    double phase_cycles = 2.0;
    int toeplitz_m = 1;
    std::map<int, double> toeplitz_coeffs;  // optional explicit coefficients

    // exp1 / single
    int m_per_aux = 4;
    int k_prompts = 3;

    // exp2
    ClassifyThresholds thresholds;

    // metastab
    int cluster_count = 3;
    int cluster_size = 16;
    double sigma0 = M_PI / 3.0;
    double r0 = 0.05;
    double bias_lambda = 0.5;
    std::vector<double> beta_list = {2.0, 3.0, 4.0};
    double trap_radius = 0.0;        // 0: min(sigma0/8, r0/4)
    double merger_threshold = 0.0;   // 0: sigma0/2

    // dobrushin
    int n_max = 512;
    double t_horizon = 5.0;

    json to_json() const;
    static ExperimentConfig from_json(const json& j);
    static ExperimentConfig defaults(const std::string& scenario);

    KernelSpec make_kernel(const std::string& family, double beta_value) const;
    void validate() const;
};

struct Classification {
    std::string kind;  // dirac | circle | curve | clusters | unclassified
    json diagnostics;
};

// Geometric classification of a final particle cloud: Dirac point, circle on
// a fitted plane (great or latitude), closed curve, or labeled clusters.
Classification classify_final_state(const ParticleSystem& sys, const ClassifyThresholds& t,
                                    const std::vector<UnitVector>& cluster_targets = {});

// Exp1 initial condition: the same gauge-frame cloud for every model of a
// given (n, seed); returns the content-frame system for the model.
ParticleSystem exp1_initial_system(const ExperimentConfig& cfg, const std::string& model, int n,
                                   int seed_index);

// Prompt pushforward targets on the equator, pairwise 2*pi/k apart.
std::vector<UnitVector> exp2_prompt_targets(int k_prompts);

struct RunSummary {
    int cells_run = 0;
    int cells_skipped = 0;
    std::filesystem::path manifest_path;
};

RunSummary run_exp1(const ExperimentConfig& cfg);
RunSummary run_exp2(const ExperimentConfig& cfg);
RunSummary run_dobrushin(const ExperimentConfig& cfg);
RunSummary run_metastab(const ExperimentConfig& cfg);
RunSummary run_single(const ExperimentConfig& cfg);
RunSummary run_scenario(const ExperimentConfig& cfg);

std::string code_version();

}  // namespace usaav

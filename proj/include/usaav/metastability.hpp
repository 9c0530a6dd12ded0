#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "usaav/dynamics.hpp"
#include "usaav/kernels.hpp"
#include "usaav/particle_system.hpp"
#include "usaav/rng.hpp"

namespace usaav {

// Clustered initialization: K geodesic caps of radius r0 whose centers are
// pairwise at least 2*sigma0 apart.
struct ClusterSpec {
    int K = 2;
    std::vector<UnitVector> centers;
    double r0 = 0.05;
    std::vector<int> sizes;
    double sigma0 = M_PI / 3.0;
    double position_halfwidth = 0.01;  // positional spread within a cluster

    void validate() const;
    std::vector<std::vector<int>> partition() const;  // contiguous index blocks
};

// Particles sampled uniformly in the cap around their cluster center, with
// position labels packed around (2p+1)/(2K) per cluster.
ParticleSystem clustered_init(const ClusterSpec& spec, std::uint64_t rng_seed);

struct CoarseCouplings {
    Mat W;              // K x K coarse-grained positional matrix
    Vec w;              // cluster weights n_p / n
    double B_par = 0.0;
    double B_cross = 0.0;
    double Lambda = 0.0;        // max_p sum_q w_q W_pq
    double lambda_cross = 0.0;  // min_{p != q} (w_q W_pq + w_p W_qp)
};

CoarseCouplings coarse_couplings(const Mat& bias, const std::vector<std::vector<int>>& partition);

struct ReducedFlowResult {
    TrajectoryRecord record;
    std::vector<Vec> center_snapshots;  // K x d rows per snapshot
};

// Coarse-grained K-point flow du_p = P^perp[sum_q w_q W_pq e^{beta<u_p,u_q>} u_q],
// integrated with the same Heun scheme; records Theta_pq and the reduced
// energy (1/(2 beta)) sum w_p w_q W_pq e^{beta<u_p,u_q>}.
ReducedFlowResult reduced_flow(const std::vector<UnitVector>& centers, const CoarseCouplings& c,
                               double beta, const SimConfig& cfg);

// First snapshot time with min_{p != q} Theta_pq below the threshold.
std::optional<double> detect_merger(const TrajectoryRecord& rec, double angle_threshold);

struct ClusteredRun {
    TrajectoryRecord record;
    std::vector<Vec> center_snapshots;
    ParticleSystem final_states;
};

// Full clustered simulation recording per-step cluster diameters, center
// angles, and center positions.
ClusteredRun run_clustered(const ParticleSystem& sys, const Kernel& k, const SimConfig& cfg,
                           const std::vector<std::vector<int>>& partition);

struct MetastabilityEntry {
    double beta = 0.0;
    double t_f = 0.0;                       // first time max_p Delta_p <= 2r
    double t_m = 0.0;                       // end of certified trapping interval
    std::optional<double> t_merge;          // first time min Theta < merger threshold
    bool trapping_certificate = false;      // Delta_p <= 2r and Theta >= sigma0 on [T_f, T_m]
    double max_center_deviation = 0.0;      // full vs reduced centers on [T_f, T_m]
    double fitted_deviation_constant = 0.0; // dev / (r + e^{-beta(1-cos sigma0)})
    double reduced_energy_final = 0.0;
    double delta_gap = 0.0;                 // min_{p != q} (1 - cos Theta_pq(T_f))
};

struct MetastabilityOptions {
    double trap_radius = 0.0;        // 0: min(sigma0/8, r0/4)
    double contraction_factor = 2.0; // T_f threshold is 2 * trap_radius
    double merger_threshold = 0.0;   // 0: sigma0/2
};

struct MetastabilityReport {
    std::vector<MetastabilityEntry> entries;
    std::vector<TrajectoryRecord> trajectories;  // one per beta
    double trap_radius = 0.0;
    double merger_threshold = 0.0;
    // log t_merge ~ slope * beta + intercept over betas with a merger
    double merger_slope = 0.0;
    double merger_intercept = 0.0;
    double one_minus_cos_sigma0 = 0.0;
    double mean_delta_gap = 0.0;
};

MetastabilityReport metastability_report(const ClusterSpec& spec, const KernelSpec& kernel,
                                         const std::vector<double>& beta_list, const SimConfig& cfg,
                                         std::uint64_t rng_seed,
                                         const MetastabilityOptions& opt = {});

}  // namespace usaav

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "usaav/kernels.hpp"
#include "usaav/particle_system.hpp"

namespace usaav {

// Per-snapshot scalar diagnostics; optional columns are filled only when the
// corresponding metric is registered for the run.
struct MetricRow {
    double g_x = 0.0;
    std::optional<double> g_q;
    std::optional<double> d_cond;
    std::optional<double> delta_e;
    std::optional<double> delta_max;  // max cluster diameter
    std::optional<double> theta_min;  // min pairwise center angle
};

// Which diagnostics to record at snapshots, plus the context they need.
struct MetricSet {
    bool g_x = false;
    bool g_q = false;
    bool d_cond = false;
    bool delta_e = false;
    bool cluster = false;
    double ceiling = 0.0;                     // for delta_e
    std::vector<std::vector<int>> partition;  // for cluster diameters/angles
};

// G_x = 1 - (1/(n(n-1))) sum_{i != j} <x_i, x_j>. Requires n >= 2.
double collapse_gap(const ParticleSystem& sys);

// Collapse gap of the gauge-frame states q_i.
double collapse_gap_gauge(const ParticleSystem& sys,
                          const std::function<Vec(std::span<const double>, const AuxLabel&)>& gauge_map);
double gauge_gap(const ParticleSystem& sys, const Kernel& k);

// Max over equal-label groups of the max pairwise geodesic angle inside the
// group; singleton groups contribute 0.
double conditional_diameter(const ParticleSystem& sys);

// (E_max - e_now)/E_max with E_max = sup_b e^beta/(2 beta).
double relative_energy_gap(double e_now, double beta, double sup_b);
double relative_gap_to_ceiling(double e_now, double ceiling);

struct ClusterStats {
    Vec diameters;                    // Delta_p
    std::vector<UnitVector> centers;  // u_p
    Mat angles;                       // Theta_pq
};

ClusterStats cluster_stats(const ParticleSystem& sys, const std::vector<std::vector<int>>& partition);

// Exact W1 between equal-weight empirical measures, by optimal assignment on
// the n x n cost matrix d_X((x,xi),(y,zeta)) = ||x-y|| + d_A(xi,zeta).
double empirical_w1(const ParticleSystem& a, const ParticleSystem& b, bool periodic_positions = false);

// Exact minimum-cost assignment of a dense square matrix (Jonker-Volgenant
// style shortest augmenting paths).
double assignment_cost(const Mat& cost);

MetricRow compute_metric_row(const ParticleSystem& sys, const Kernel& k, const MetricSet& set,
                             double energy_now);

}  // namespace usaav

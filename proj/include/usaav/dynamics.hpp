#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "usaav/kernels.hpp"
#include "usaav/metrics.hpp"
#include "usaav/particle_system.hpp"

namespace usaav {

// Raised when a state goes non-finite; simulate aborts, never clamps.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimConfig {
    double dt = 1e-2;
    double t_final = 20.0;
    double snapshot_every = 0.5;
    double stop_window = 1.0;    // early-stop window length
    double stop_rel_tol = 1e-8;  // 0 disables the plateau stop
    std::uint64_t seed = 0;
    bool record_states = false;

    void validate() const;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> energy;
    std::vector<double> production;
    std::vector<MetricRow> metrics;
    std::optional<ParticleSystem> final_states;
    bool stopped_early = false;
};

// OpenMP force evaluation: v_i = P_{x_i}^perp[(1/n) sum_j grad_x h(z_i, z_j)],
// including the j = i self term. The inner accumulation runs in index order
// per particle, so results do not depend on the worker count. Frozen
// particles get zero velocity.
void velocity_field(const ParticleSystem& sys, const BoundKernel& k, Vec& out);
std::vector<Vec> velocity_field(const ParticleSystem& sys, const Kernel& k);

// Serial reference implementation, kept for testing the parallel kernel.
void velocity_field_reference(const ParticleSystem& sys, const BoundKernel& k, Vec& out);

// Heun step with renormalization after the provisional stage and the final
// combine. Labels unchanged.
ParticleSystem step_rk2(const ParticleSystem& sys, const Kernel& k, double dt);

// (1/(2n^2)) sum_{i,j} h(z_i, z_j), diagonal included. Compensated two-level
// summation in fixed index order.
double energy(const ParticleSystem& sys, const Kernel& k);
double energy(const ParticleSystem& sys, const BoundKernel& k);

// (1/n) sum_i ||v_i||^2, the discrete energy-production rate.
double energy_production(const ParticleSystem& sys, const Kernel& k);
double energy_production(const ParticleSystem& sys, const BoundKernel& k);

// Integrates to t_final, or stops early once the relative energy increment
// stays below stop_rel_tol over a full stop_window. Deterministic given
// (sys, k, cfg).
TrajectoryRecord simulate(const ParticleSystem& sys, const Kernel& k, const SimConfig& cfg,
                          const MetricSet& metrics = {});

// Shared Heun stepper over flat unit-row state arrays; `velocity` writes the
// projected field for the given states into its output argument. `skip`
// (optional, length n) marks rows that must not move.
using VelocityFn = std::function<void(const Vec& states, Vec& out)>;
void heun_step_states(Vec& states, int n, int d, double dt, const VelocityFn& velocity);

}  // namespace usaav

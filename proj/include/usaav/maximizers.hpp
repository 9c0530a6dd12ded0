#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "usaav/dynamics.hpp"
#include "usaav/kernels.hpp"
#include "usaav/particle_system.hpp"

namespace usaav {

// A measurable path s in (0,1] -> S^{d-1}; graph laws of such paths are the
// closed-form energy maximizers.
struct OrbitPath {
    enum class Kind { RoPEOrbit, PhaseFieldOrbit, ToeplitzCircle, Constant };
    Kind kind;
    std::function<UnitVector(double)> sample;
    std::string description;
};

// Path s -> R_{-omega s} u.
OrbitPath rope_orbit(const UnitVector& u, double omega, const PlaneSpec& plane = {});

// Path s -> R_{psi(s)} u.
OrbitPath phase_field_orbit(const UnitVector& u, const PhaseField& psi, const PlaneSpec& plane = {});

// psi(s) = quantile_nu(s): the uniform position law pushed through
// R_{psi(s)} u realizes nu on the rotation orbit exactly. The quantile must
// be non-decreasing; validated by dense sampling.
PhaseField target_phase_field(const std::function<double(double)>& quantile);

// Householder gauges Psi_G(z) with Psi_G(z) u = G(z) per prompt target.
std::vector<std::shared_ptr<const OrthogonalGauge>> prompt_gauge_family(
    const std::vector<UnitVector>& targets, const UnitVector& u);

struct ToeplitzMaxPath {
    int m_star;
    OrbitPath path;
};

// Maximizing frequency (ties toward smallest |m|, then positive sign) and its
// great-circle path in the (e1, e2) plane.
ToeplitzMaxPath toeplitz_max_path(const std::map<int, double>& coeffs, int dim);

// sup_b e^beta / (2 beta)
double energy_ceiling(double beta, double sup_b = 1.0);

// Sample an orbit path into a particle system on the uniform grid s_i = i/L
// with m_per_position repeats at each grid value.
ParticleSystem sample_orbit(const OrbitPath& path, int dim, int positions, int m_per_position = 1);

// Particle system x_i = Psi(z_i) u with prompt labels carrying the gauges.
ParticleSystem prompt_maximizer_system(
    const std::vector<std::shared_ptr<const OrthogonalGauge>>& gauges,
    const std::vector<double>& phases, const UnitVector& u);

// Finitely supported joint law: auxiliary atoms with weights, a sphere grid
// per atom, and conditional weights over each grid.
struct DiscreteJointLaw {
    std::vector<AuxLabel> aux_points;
    Vec aux_weights;
    std::vector<std::vector<UnitVector>> grids;
    std::vector<Vec> conditional_weights;

    void validate() const;
};

double law_energy(const DiscreteJointLaw& law, const Kernel& k);

// Replaces each conditional by a point mass at an argmax of its interaction
// potential (ties to the lowest grid index), sweeping coordinates until no
// assignment changes. The single sweep is the paper's improvement step;
// iterating to a coordinate-wise maximum is an extension.
DiscreteJointLaw diracize(const DiscreteJointLaw& law, const Kernel& k);

// max_i ||P_{x_i}^perp F_i||, the first-order optimality residual.
double projected_gradient_residual(const ParticleSystem& sys, const Kernel& k);

}  // namespace usaav

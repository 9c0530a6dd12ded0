#include "usaav/maximizers.hpp"

#include <cmath>
#include <stdexcept>

namespace usaav {

OrbitPath rope_orbit(const UnitVector& u, double omega, const PlaneSpec& plane) {
    OrbitPath p;
    p.kind = OrbitPath::Kind::RoPEOrbit;
    p.description = "rope orbit";
    p.sample = [u, omega, plane](double s) {
        return apply_rotation(plane.rotation(-omega * s), u);
    };
    return p;
}

OrbitPath phase_field_orbit(const UnitVector& u, const PhaseField& psi, const PlaneSpec& plane) {
    if (psi.empty()) throw std::invalid_argument("phase_field_orbit: psi unset");
    OrbitPath p;
    p.kind = OrbitPath::Kind::PhaseFieldOrbit;
    p.description = "phase-field orbit";
    p.sample = [u, psi, plane](double s) { return apply_rotation(plane.rotation(psi(s)), u); };
    return p;
}

PhaseField target_phase_field(const std::function<double(double)>& quantile) {
    if (!quantile) throw std::invalid_argument("target_phase_field: empty quantile");
    double prev = quantile(0.0);
    for (int k = 1; k <= 4096; ++k) {
        double cur = quantile(static_cast<double>(k) / 4096.0);
        if (cur < prev - 1e-12)
            throw std::invalid_argument("target_phase_field: quantile must be non-decreasing");
        prev = cur;
    }
    return PhaseField::from_function(quantile);
}

std::vector<std::shared_ptr<const OrthogonalGauge>> prompt_gauge_family(
    const std::vector<UnitVector>& targets, const UnitVector& u) {
    std::vector<std::shared_ptr<const OrthogonalGauge>> gauges;
    gauges.reserve(targets.size());
    for (const UnitVector& g : targets)
        gauges.push_back(std::make_shared<const OrthogonalGauge>(householder_gauge(u, g)));
    return gauges;
}

ToeplitzMaxPath toeplitz_max_path(const std::map<int, double>& coeffs, int dim) {
    if (coeffs.empty()) throw std::invalid_argument("toeplitz_max_path: empty coefficients");
    if (dim < 2) throw std::invalid_argument("toeplitz_max_path: d >= 2 required");
    // argmax c_hat(m); ties toward smallest |m|, then the positive sign.
    int m_star = coeffs.begin()->first;
    double best = coeffs.begin()->second;
    for (const auto& [m, chat] : coeffs) {
        bool better = chat > best + 0.0;
        if (!better && chat == best) {
            if (std::abs(m) < std::abs(m_star) || (std::abs(m) == std::abs(m_star) && m > m_star))
                better = true;
        }
        if (better) {
            m_star = m;
            best = chat;
        }
    }
    ToeplitzMaxPath out{m_star, {}};
    out.path.kind = m_star == 0 ? OrbitPath::Kind::Constant : OrbitPath::Kind::ToeplitzCircle;
    out.path.description = "toeplitz frequency path m=" + std::to_string(m_star);
    int m = m_star;
    out.path.sample = [m, dim](double s) {
        Vec x(dim, 0.0);
        x[0] = std::cos(2.0 * M_PI * m * s);
        x[1] = std::sin(2.0 * M_PI * m * s);
        return UnitVector(std::move(x));
    };
    return out;
}

double energy_ceiling(double beta, double sup_b) {
    if (!(beta > 0.0)) throw std::invalid_argument("energy_ceiling: beta must be positive");
    return sup_b * std::exp(beta) / (2.0 * beta);
}

ParticleSystem sample_orbit(const OrbitPath& path, int dim, int positions, int m_per_position) {
    if (positions < 1 || m_per_position < 1)
        throw std::invalid_argument("sample_orbit: positive counts required");
    int n = positions * m_per_position;
    Vec states(static_cast<std::size_t>(n) * dim);
    std::vector<AuxLabel> labels;
    labels.reserve(n);
    int row = 0;
    for (int l = 1; l <= positions; ++l) {
        double s = static_cast<double>(l) / static_cast<double>(positions);
        UnitVector x = path.sample(s);
        if (x.dim() != dim) throw std::invalid_argument("sample_orbit: path dimension mismatch");
        for (int rep = 0; rep < m_per_position; ++rep, ++row) {
            std::copy(x.coords().begin(), x.coords().end(),
                      states.begin() + static_cast<std::size_t>(row) * dim);
            labels.push_back(position_label(s));
        }
    }
    return ParticleSystem(dim, std::move(states), std::move(labels));
}

ParticleSystem prompt_maximizer_system(
    const std::vector<std::shared_ptr<const OrthogonalGauge>>& gauges,
    const std::vector<double>& phases, const UnitVector& u) {
    if (gauges.empty()) throw std::invalid_argument("prompt_maximizer_system: no gauges");
    if (!phases.empty() && phases.size() != gauges.size())
        throw std::invalid_argument("prompt_maximizer_system: phases/gauges size mismatch");
    int n = static_cast<int>(gauges.size());
    int d = u.dim();
    Vec states(static_cast<std::size_t>(n) * d);
    std::vector<AuxLabel> labels;
    labels.reserve(n);
    for (int i = 0; i < n; ++i) {
        Vec x = gauges[i]->apply(u.span());
        std::copy(x.begin(), x.end(), states.begin() + static_cast<std::size_t>(i) * d);
        labels.push_back(prompt_label(i, phases.empty() ? 0.0 : phases[i], gauges[i]));
    }
    return ParticleSystem(d, std::move(states), std::move(labels));
}

void DiscreteJointLaw::validate() const {
    std::size_t k = aux_points.size();
    if (k == 0) throw std::invalid_argument("DiscreteJointLaw: no auxiliary points");
    if (aux_weights.size() != k || grids.size() != k || conditional_weights.size() != k)
        throw std::invalid_argument("DiscreteJointLaw: inconsistent sizes");
    double wsum = 0.0;
    for (double w : aux_weights) {
        if (w < 0.0) throw std::invalid_argument("DiscreteJointLaw: negative auxiliary weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-12)
        throw std::invalid_argument("DiscreteJointLaw: auxiliary weights must sum to 1");
    for (std::size_t a = 0; a < k; ++a) {
        if (grids[a].empty()) throw std::invalid_argument("DiscreteJointLaw: empty grid");
        if (conditional_weights[a].size() != grids[a].size())
            throw std::invalid_argument("DiscreteJointLaw: conditional/grid size mismatch");
        double csum = 0.0;
        for (double w : conditional_weights[a]) {
            if (w < 0.0) throw std::invalid_argument("DiscreteJointLaw: negative conditional weight");
            csum += w;
        }
        if (std::abs(csum - 1.0) > 1e-12)
            throw std::invalid_argument("DiscreteJointLaw: conditional weights must sum to 1");
    }
}

double law_energy(const DiscreteJointLaw& law, const Kernel& k) {
    law.validate();
    std::size_t na = law.aux_points.size();
    KahanSum e;
    for (std::size_t a = 0; a < na; ++a)
        for (std::size_t b = 0; b < na; ++b)
            for (std::size_t x = 0; x < law.grids[a].size(); ++x) {
                double wx = law.aux_weights[a] * law.conditional_weights[a][x];
                if (wx == 0.0) continue;
                for (std::size_t y = 0; y < law.grids[b].size(); ++y) {
                    double w = wx * law.aux_weights[b] * law.conditional_weights[b][y];
                    if (w == 0.0) continue;
                    e.add(w * k.eval(law.grids[a][x].span(), law.aux_points[a],
                                     law.grids[b][y].span(), law.aux_points[b]));
                }
            }
    return 0.5 * e.value();
}

DiscreteJointLaw diracize(const DiscreteJointLaw& law, const Kernel& k) {
    law.validate();
    DiscreteJointLaw out = law;
    std::size_t na = out.aux_points.size();
    for (int sweep = 0; sweep < 1000; ++sweep) {
        bool changed = false;
        for (std::size_t a = 0; a < na; ++a) {
            // Phi_a(x) against the other conditionals. The same-atom term is
            // excluded: it is the finite analogue of the nonatomic diagonal
            // (which is rho x rho null), and keeping it would bias the argmax
            // toward the atom's own current location, breaking coordinate-wise
            // maximality of the sweep fixed point.
            std::size_t best = 0;
            double best_val = -HUGE_VAL;
            for (std::size_t x = 0; x < out.grids[a].size(); ++x) {
                KahanSum phi;
                for (std::size_t b = 0; b < na; ++b) {
                    if (b == a) continue;
                    for (std::size_t y = 0; y < out.grids[b].size(); ++y) {
                        double w = out.aux_weights[b] * out.conditional_weights[b][y];
                        if (w == 0.0) continue;
                        phi.add(w * k.eval(out.grids[a][x].span(), out.aux_points[a],
                                           out.grids[b][y].span(), out.aux_points[b]));
                    }
                }
                if (phi.value() > best_val) {
                    best_val = phi.value();
                    best = x;
                }
            }
            Vec dirac(out.grids[a].size(), 0.0);
            dirac[best] = 1.0;
            if (dirac != out.conditional_weights[a]) {
                out.conditional_weights[a] = std::move(dirac);
                changed = true;
            }
        }
        if (!changed) break;
    }
    return out;
}

double projected_gradient_residual(const ParticleSystem& sys, const Kernel& k) {
    std::vector<Vec> v = velocity_field(sys, k);
    double worst = 0.0;
    for (const Vec& vi : v) worst = std::max(worst, norm2(vi));
    return worst;
}

}  // namespace usaav

#include "usaav/particle_system.hpp"

#include <cmath>
#include <stdexcept>

namespace usaav {

ParticleSystem::ParticleSystem(int dim, Vec states, std::vector<AuxLabel> labels)
    : dim_(dim), states_(std::move(states)), labels_(std::move(labels)), frozen_(labels_.size(), 0) {
    if (dim_ < 2) throw std::invalid_argument("ParticleSystem: d >= 2 required");
    if (labels_.empty()) throw std::invalid_argument("ParticleSystem: n >= 1 required");
    if (states_.size() != labels_.size() * static_cast<std::size_t>(dim_))
        throw std::invalid_argument("ParticleSystem: states/labels size mismatch");
    renormalize();
}

UnitVector ParticleSystem::state_vector(int i) const {
    auto s = state(i);
    return UnitVector(Vec(s.begin(), s.end()));
}

bool ParticleSystem::any_frozen() const {
    for (auto f : frozen_)
        if (f) return true;
    return false;
}

void ParticleSystem::renormalize() {
    for (int i = 0; i < size(); ++i)
        normalize(std::span<double>(states_.data() + static_cast<std::size_t>(i) * dim_, dim_));
}

double ParticleSystem::max_norm_deviation() const {
    double m = 0.0;
    for (int i = 0; i < size(); ++i) m = std::max(m, std::abs(norm2(state(i)) - 1.0));
    return m;
}

}  // namespace usaav

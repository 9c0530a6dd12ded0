#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "usaav/labels.hpp"
#include "usaav/sphere.hpp"

namespace usaav {

// n paired (state, label) particles on S^{d-1}; the empirical law mu^(n).
// States are renormalized on construction; labels are immutable. A particle
// may be marked frozen (fixed prompt tokens inserted at inference time),
// in which case its velocity is pinned to zero.
class ParticleSystem {
public:
    ParticleSystem(int dim, Vec states, std::vector<AuxLabel> labels);

    int size() const { return static_cast<int>(labels_.size()); }
    int dim() const { return dim_; }

    std::span<const double> state(int i) const {
        return {states_.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
    }
    UnitVector state_vector(int i) const;
    const Vec& states() const { return states_; }
    Vec& mutable_states() { return states_; }

    const std::vector<AuxLabel>& labels() const { return labels_; }
    const AuxLabel& label(int i) const { return labels_[i]; }

    void freeze(int i) { frozen_[i] = 1; }
    bool frozen(int i) const { return frozen_[i] != 0; }
    bool any_frozen() const;

    void renormalize();
    double max_norm_deviation() const;

private:
    int dim_;
    Vec states_;  // n x d row-major
    std::vector<AuxLabel> labels_;
    std::vector<std::uint8_t> frozen_;
};

}  // namespace usaav

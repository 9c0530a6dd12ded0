#pragma once

#include <cmath>
#include <memory>
#include <variant>

#include "usaav/sphere.hpp"

namespace usaav {

// Frozen auxiliary variable attached to a particle. Labels never evolve.
struct PositionLabel {
    double s;  // in (0, 1]
};

struct PromptLabel {
    int index;
    double phase;
    std::shared_ptr<const OrthogonalGauge> gauge;
};

using AuxLabel = std::variant<std::monostate, PositionLabel, PromptLabel>;

inline AuxLabel no_label() { return std::monostate{}; }

inline AuxLabel position_label(double s) {
    if (!(s > 0.0) || s > 1.0) throw std::invalid_argument("position label: s must lie in (0,1]");
    return PositionLabel{s};
}

inline AuxLabel prompt_label(int index, double phase, std::shared_ptr<const OrthogonalGauge> gauge) {
    if (!gauge) throw std::invalid_argument("prompt label: missing gauge");
    return PromptLabel{index, phase, std::move(gauge)};
}

inline bool is_position(const AuxLabel& l) { return std::holds_alternative<PositionLabel>(l); }
inline bool is_prompt(const AuxLabel& l) { return std::holds_alternative<PromptLabel>(l); }

inline double position_of(const AuxLabel& l) {
    if (const auto* p = std::get_if<PositionLabel>(&l)) return p->s;
    throw std::invalid_argument("label is not a position");
}

inline const PromptLabel& prompt_of(const AuxLabel& l) {
    if (const auto* p = std::get_if<PromptLabel>(&l)) return *p;
    throw std::invalid_argument("label is not a prompt");
}

inline double torus_distance(double s, double t) {
    double d = std::abs(s - t);
    return std::min(d, 1.0 - d);
}

// d_A for the product metric d_X = ||x-y|| + d_A. Positions use torus
// distance under periodic kernels and |s-t| otherwise; prompts are discrete.
inline double aux_distance(const AuxLabel& a, const AuxLabel& b, bool periodic) {
    if (a.index() != b.index()) return 1.0;
    if (is_position(a)) {
        double s = position_of(a), t = position_of(b);
        return periodic ? torus_distance(s, t) : std::abs(s - t);
    }
    if (is_prompt(a)) return prompt_of(a).index == prompt_of(b).index ? 0.0 : 1.0;
    return 0.0;
}

}  // namespace usaav

#pragma once

#include <cstdint>
#include <initializer_list>

#include "usaav/linalg.hpp"
#include "usaav/sphere.hpp"

namespace usaav {

// Counter-based deterministic generator. A stream is identified by a key
// assembled from 64-bit words (master seed, scenario id, model id, n, seed
// index, particle index, ...); draws are a pure function of (key, counter),
// so any cell of an experiment is reproducible in isolation.
class Rng {
public:
    Rng() = default;
    explicit Rng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t x);
    static std::uint64_t combine(std::uint64_t key, std::uint64_t word);

    static Rng keyed(std::initializer_list<std::uint64_t> words);
    Rng derive(std::uint64_t word) const { return Rng(combine(key_, word)); }

    std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * (++counter_)); }

    double uniform();       // [0, 1)
    double uniform_open();  // (0, 1]
    double gaussian();

    Vec gaussian_vec(int d);
    UnitVector uniform_sphere(int d);
    // Area-uniform sample from the geodesic cap of radius `radius` about
    // `center` (rejection from the tangent disk + exponential map).
    UnitVector uniform_cap(const UnitVector& center, double radius);

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace usaav

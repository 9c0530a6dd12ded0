#include "usaav/rng.hpp"

#include <cmath>

namespace usaav {

std::uint64_t Rng::mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t Rng::combine(std::uint64_t key, std::uint64_t word) {
    return mix(key ^ (mix(word) + 0x9e3779b97f4a7c15ULL + (key << 6) + (key >> 2)));
}

Rng Rng::keyed(std::initializer_list<std::uint64_t> words) {
    std::uint64_t k = 0x8f1bbcdcbfa53e0bULL;
    for (std::uint64_t w : words) k = combine(k, w);
    return Rng(k);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double Rng::gaussian() {
    // Box-Muller, one value per call; no cached state so draws stay a pure
    // function of the counter.
    double u1 = uniform_open();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Vec Rng::gaussian_vec(int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = gaussian();
    return v;
}

UnitVector Rng::uniform_sphere(int d) { return UnitVector(gaussian_vec(d)); }

UnitVector Rng::uniform_cap(const UnitVector& center, double radius) {
    int d = center.dim();
    // Tangent frame at the center: project basis vectors, keep d-1 of them.
    std::vector<Vec> frame;
    frame.reserve(d - 1);
    for (int axis = 0; axis < d && static_cast<int>(frame.size()) < d - 1; ++axis) {
        Vec e(d, 0.0);
        e[axis] = 1.0;
        project_tangent_inplace(center.span(), e);
        for (const Vec& f : frame) axpy(-dot(f, e), f, e);
        double n = norm2(e);
        if (n < 1e-8) continue;
        scale(e, 1.0 / n);
        frame.push_back(std::move(e));
    }
    int m = static_cast<int>(frame.size());  // d-1
    for (;;) {
        // Uniform point in the radius-`radius` tangent ball.
        Vec g(m);
        for (int i = 0; i < m; ++i) g[i] = gaussian();
        double n = norm2(g);
        if (n == 0.0) continue;
        double r = radius * std::pow(uniform_open(), 1.0 / m);
        double theta = r;
        // Accept with probability (sin t / t)^{d-2}: corrects the tangent-disk
        // density to the cap's area measure.
        double ratio = theta == 0.0 ? 1.0 : std::sin(theta) / theta;
        if (uniform() > std::pow(ratio, d - 2)) continue;
        Vec x(d);
        double c = std::cos(theta), s = std::sin(theta);
        for (int i = 0; i < d; ++i) {
            double t = 0.0;
            for (int j = 0; j < m; ++j) t += frame[j][i] * (g[j] / n);
            x[i] = c * center[i] + s * t;
        }
        return UnitVector(std::move(x));
    }
}

}  // namespace usaav

// Benchmark: OpenMP force kernel vs the serial reference, plus the pairwise
// energy sum, across kernel families and system sizes.

#include <chrono>
#include <cstdio>

#include <omp.h>

#include "usaav/dynamics.hpp"
#include "usaav/rng.hpp"

using namespace usaav;

namespace {

ParticleSystem random_positional_system(int n, int d, std::uint64_t seed) {
    Vec states(static_cast<std::size_t>(n) * d);
    std::vector<AuxLabel> labels;
    for (int i = 0; i < n; ++i) {
        Rng rng = Rng::keyed({seed, static_cast<std::uint64_t>(i)});
        UnitVector x = rng.uniform_sphere(d);
        std::copy(x.coords().begin(), x.coords().end(),
                  states.begin() + static_cast<std::size_t>(i) * d);
        labels.push_back(position_label(static_cast<double>(i + 1) / n));
    }
    return ParticleSystem(d, std::move(states), std::move(labels));
}

double time_ms(const std::function<void()>& fn, int reps) {
    auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%-14s %6s %12s %12s %8s %12s\n", "kernel", "n", "serial(ms)", "omp(ms)",
                "speedup", "energy(ms)");
    for (const char* family : {"baseline", "rope", "distance-bias", "toeplitz"}) {
        KernelSpec spec;
        if (std::string(family) == "baseline") spec = KernelSpec::baseline(1.0);
        if (std::string(family) == "rope") spec = KernelSpec::rope(1.0, 2.0 * M_PI);
        if (std::string(family) == "distance-bias")
            spec = KernelSpec::distance_bias(1.0, BiasSpec{BiasSpec::Kind::ExpDecay, 0.5, 0, 0.1});
        if (std::string(family) == "toeplitz")
            spec = KernelSpec::toeplitz_linear({{1, 0.5}, {-1, 0.5}});
        Kernel kernel(spec);
        for (int n : {64, 256, 512}) {
            ParticleSystem sys = random_positional_system(n, 3, 42);
            BoundKernel bound(kernel, sys.labels(), sys.dim());
            Vec out_serial, out_omp;
            int reps = n <= 256 ? 50 : 10;
            double ts = time_ms([&] { velocity_field_reference(sys, bound, out_serial); }, reps);
            double tp = time_ms([&] { velocity_field(sys, bound, out_omp); }, reps);
            double te = time_ms([&] { (void)energy(sys, bound); }, reps);
            if (out_serial != out_omp) {
                std::printf("MISMATCH: %s n=%d parallel differs from reference\n", family, n);
                return 1;
            }
            std::printf("%-14s %6d %12.3f %12.3f %8.2f %12.3f\n", family, n, ts, tp, ts / tp, te);
        }
    }
    return 0;
}

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "usaav/labels.hpp"
#include "usaav/sphere.hpp"

namespace usaav {

enum class KernelFamily {
    Baseline,
    DistanceBias,
    RoPE,
    PhaseField,
    ToeplitzLinear,
    PromptGauge,
};

std::string family_name(KernelFamily f);
KernelFamily family_from_name(const std::string& name);

struct BiasSpec {
    enum class Kind { ExpDecay, GaussianTorus };
    Kind kind = Kind::ExpDecay;
    double lambda = 1.0;   // exp-decay rate
    double epsilon = 0.0;  // gaussian-torus floor
    double length = 0.1;   // gaussian-torus length scale

    double operator()(double s, double t) const;
    double sup() const;
    bool periodic() const { return kind == Kind::GaussianTorus; }
};

// Phase field psi on I, either dense samples on a uniform grid over [0,1]
// with linear interpolation, or an exact function (used by quantile-based
// target fields, where interpolation would smear atoms).
class PhaseField {
public:
    PhaseField() = default;
    static PhaseField from_samples(Vec values);
    static PhaseField from_function(std::function<double(double)> fn);
    // psi(s) = 2*pi*base_turns*s + amplitude*sin(2*pi*cycles*s)
    static PhaseField sinusoidal(double base_turns, double amplitude, double cycles);

    double operator()(double s) const;
    bool empty() const { return samples_.empty() && !fn_; }

private:
    Vec samples_;
    std::function<double(double)> fn_;
};

struct PlaneSpec {
    int axis_a = 0;
    int axis_b = 1;
    Vec span_p, span_q;  // optional general plane

    PlanarRotation rotation(double angle) const {
        if (!span_p.empty()) return PlanarRotation(span_p, span_q, angle);
        return PlanarRotation(axis_a, axis_b, angle);
    }
};

// Closed description of one kernel family h((x,xi),(y,zeta)) and its
// parameters. Immutable once built; evaluation is pure.
struct KernelSpec {
    KernelFamily family = KernelFamily::Baseline;
    double beta = 1.0;
    double omega = 2.0 * M_PI;
    PlaneSpec plane;
    BiasSpec bias;
    PhaseField phase;
    std::map<int, double> toeplitz;  // frequency m -> c_hat(m), symmetric

    double toeplitz_c(double delta) const;  // c(delta) = sum c_hat(m) cos(2 pi m delta)
    bool periodic() const;

    static KernelSpec baseline(double beta);
    static KernelSpec rope(double beta, double omega, PlaneSpec plane = {});
    static KernelSpec distance_bias(double beta, BiasSpec bias);
    static KernelSpec phase_field(double beta, PhaseField psi, PlaneSpec plane = {});
    static KernelSpec toeplitz_linear(std::map<int, double> coeffs);
    static KernelSpec prompt_gauge(double beta);
};

// Analytic energy ceiling of the family: sup_b e^beta/(2 beta) for the
// exponential kernels, (1/2) max_m c_hat(m) for the Toeplitz linear kernel.
double kernel_ceiling(const KernelSpec& spec);

// --- direct per-family evaluation -----------------------------------------
// x, y are ambient vectors (unit in normal use; finite-difference probes may
// pass off-sphere points). Gradients are ambient, pre-projection.

double eval_baseline(std::span<const double> x, std::span<const double> y, double beta);
double eval_rope(std::span<const double> x, double s, std::span<const double> y, double t,
                 double beta, double omega, const PlaneSpec& plane);
double eval_distance_bias(std::span<const double> x, double s, std::span<const double> y, double t,
                          double beta, const BiasSpec& bias);
double eval_phase_field(std::span<const double> x, double s, std::span<const double> y, double t,
                        double beta, const PhaseField& psi, const PlaneSpec& plane);
double eval_toeplitz_linear(std::span<const double> x, double s, std::span<const double> y,
                            double t, const KernelSpec& spec);
double eval_prompt_gauge(std::span<const double> x, const PromptLabel& z,
                         std::span<const double> y, const PromptLabel& w, double beta);

// Representative of g mod 2*pi in (-pi, pi].
double wrap_angle(double g);

// --- generic labeled interface --------------------------------------------

class Kernel {
public:
    explicit Kernel(KernelSpec spec);

    const KernelSpec& spec() const { return spec_; }

    double eval(std::span<const double> x, const AuxLabel& a, std::span<const double> y,
                const AuxLabel& b) const;
    // Ambient gradient of eval in x, written to grad (length d).
    void grad_x(std::span<const double> x, const AuxLabel& a, std::span<const double> y,
                const AuxLabel& b, std::span<double> grad) const;

    // Gauge-frame transform q of a content state: R_{omega s} x for RoPE,
    // R_{-psi(s)} x for phase fields, Psi(z)^T x for prompts, identity
    // otherwise.
    Vec gauge_frame(std::span<const double> x, const AuxLabel& label) const;

private:
    KernelSpec spec_;
};

// Kernel bound to a fixed label set: pairwise positional quantities (bias,
// rotation angles, prompt pair products) are tabulated once so the O(n^2)
// force loops avoid per-pair trigonometry. Agrees with Kernel::eval /
// Kernel::grad_x bit-for-bit.
class BoundKernel {
public:
    BoundKernel(const Kernel& kernel, const std::vector<AuxLabel>& labels, int dim);

    int size() const { return n_; }
    int dim() const { return d_; }
    double beta() const { return spec_.beta; }

    double eval_pair(int i, int j, const double* xi, const double* xj) const;
    // grad += ambient gradient at (i, j)
    void grad_pair_accumulate(int i, int j, const double* xi, const double* xj,
                              double* grad) const;

private:
    const KernelSpec& spec_;
    int n_ = 0;
    int d_ = 0;
    Vec pair_scale_;            // bias or toeplitz c per pair (n x n)
    Vec pair_cos_, pair_sin_;   // rotation tables per pair (n x n)
    std::vector<const Mat*> pair_mat_;  // prompt pair products (n x n)
    std::vector<std::unique_ptr<Mat>> mat_store_;
    PlanarRotation rot0_;

    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }
};

}  // namespace usaav

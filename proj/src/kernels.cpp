#include "usaav/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace usaav {

std::string family_name(KernelFamily f) {
    switch (f) {
        case KernelFamily::Baseline: return "baseline";
        case KernelFamily::DistanceBias: return "distance-bias";
        case KernelFamily::RoPE: return "rope";
        case KernelFamily::PhaseField: return "phase-field";
        case KernelFamily::ToeplitzLinear: return "toeplitz";
        case KernelFamily::PromptGauge: return "prompt";
    }
    throw std::logic_error("family_name: bad enum");
}

KernelFamily family_from_name(const std::string& name) {
    if (name == "baseline") return KernelFamily::Baseline;
    if (name == "distance-bias") return KernelFamily::DistanceBias;
    if (name == "rope") return KernelFamily::RoPE;
    if (name == "phase-field") return KernelFamily::PhaseField;
    if (name == "toeplitz") return KernelFamily::ToeplitzLinear;
    if (name == "prompt") return KernelFamily::PromptGauge;
    throw std::invalid_argument("unknown kernel family: " + name);
}

double BiasSpec::operator()(double s, double t) const {
    if (kind == Kind::ExpDecay) return std::exp(-lambda * std::abs(s - t));
    double d = torus_distance(s, t);
    return epsilon + std::exp(-d * d / (2.0 * length * length));
}

double BiasSpec::sup() const { return kind == Kind::ExpDecay ? 1.0 : epsilon + 1.0; }

PhaseField PhaseField::from_samples(Vec values) {
    if (values.size() < 2) throw std::invalid_argument("PhaseField: need at least 2 samples");
    PhaseField p;
    p.samples_ = std::move(values);
    return p;
}

PhaseField PhaseField::from_function(std::function<double(double)> fn) {
    if (!fn) throw std::invalid_argument("PhaseField: empty function");
    PhaseField p;
    p.fn_ = std::move(fn);
    return p;
}

PhaseField PhaseField::sinusoidal(double base_turns, double amplitude, double cycles) {
    return from_function([=](double s) {
        return 2.0 * M_PI * base_turns * s + amplitude * std::sin(2.0 * M_PI * cycles * s);
    });
}

double PhaseField::operator()(double s) const {
    if (fn_) return fn_(s);
    if (samples_.empty()) throw std::logic_error("PhaseField: unset");
    // Linear interpolation on the uniform grid over [0,1].
    double u = s * static_cast<double>(samples_.size() - 1);
    if (u <= 0.0) return samples_.front();
    if (u >= static_cast<double>(samples_.size() - 1)) return samples_.back();
    std::size_t k = static_cast<std::size_t>(u);
    double w = u - static_cast<double>(k);
    return samples_[k] + w * (samples_[k + 1] - samples_[k]);
}

double KernelSpec::toeplitz_c(double delta) const {
    double c = 0.0;
    for (const auto& [m, chat] : toeplitz) c += chat * std::cos(2.0 * M_PI * m * delta);
    return c;
}

bool KernelSpec::periodic() const {
    switch (family) {
        case KernelFamily::RoPE:
        case KernelFamily::PhaseField:
        case KernelFamily::ToeplitzLinear:
            return true;
        case KernelFamily::DistanceBias:
            return bias.periodic();
        default:
            return false;
    }
}

static void check_beta(double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("kernel: beta must be positive");
}

KernelSpec KernelSpec::baseline(double beta) {
    check_beta(beta);
    KernelSpec k;
    k.family = KernelFamily::Baseline;
    k.beta = beta;
    return k;
}

KernelSpec KernelSpec::rope(double beta, double omega, PlaneSpec plane) {
    check_beta(beta);
    KernelSpec k;
    k.family = KernelFamily::RoPE;
    k.beta = beta;
    k.omega = omega;
    k.plane = std::move(plane);
    return k;
}

KernelSpec KernelSpec::distance_bias(double beta, BiasSpec bias) {
    check_beta(beta);
    if (bias.kind == BiasSpec::Kind::ExpDecay && !(bias.lambda > 0.0))
        throw std::invalid_argument("distance-bias: lambda must be positive");
    if (bias.kind == BiasSpec::Kind::GaussianTorus &&
        (bias.epsilon < 0.0 || !(bias.length > 0.0)))
        throw std::invalid_argument("distance-bias: need epsilon >= 0 and length > 0");
    KernelSpec k;
    k.family = KernelFamily::DistanceBias;
    k.beta = beta;
    k.bias = bias;
    return k;
}

KernelSpec KernelSpec::phase_field(double beta, PhaseField psi, PlaneSpec plane) {
    check_beta(beta);
    if (psi.empty()) throw std::invalid_argument("phase-field: psi unset");
    KernelSpec k;
    k.family = KernelFamily::PhaseField;
    k.beta = beta;
    k.phase = std::move(psi);
    k.plane = std::move(plane);
    return k;
}

KernelSpec KernelSpec::toeplitz_linear(std::map<int, double> coeffs) {
    if (coeffs.empty()) throw std::invalid_argument("toeplitz: empty coefficient map");
    KernelSpec k;
    k.family = KernelFamily::ToeplitzLinear;
    k.toeplitz = std::move(coeffs);
    return k;
}

KernelSpec KernelSpec::prompt_gauge(double beta) {
    check_beta(beta);
    KernelSpec k;
    k.family = KernelFamily::PromptGauge;
    return k.beta = beta, k;
}

double kernel_ceiling(const KernelSpec& spec) {
    if (spec.family == KernelFamily::ToeplitzLinear) {
        double m = -HUGE_VAL;
        for (const auto& [freq, chat] : spec.toeplitz) m = std::max(m, chat);
        return 0.5 * m;
    }
    double sup_b = spec.family == KernelFamily::DistanceBias ? spec.bias.sup() : 1.0;
    return sup_b * std::exp(spec.beta) / (2.0 * spec.beta);
}

double wrap_angle(double g) {
    g = std::fmod(g, 2.0 * M_PI);
    if (g <= -M_PI) g += 2.0 * M_PI;
    if (g > M_PI) g -= 2.0 * M_PI;
    return g;
}

// Shared low-level pieces so that the generic path and BoundKernel produce
// bit-identical values.
namespace {

double rope_angle(double s, double t, double omega) { return omega * (t - s); }

double phase_angle(double s, double t, const PhaseField& psi) {
    return wrap_angle(-(psi(t) - psi(s)));
}

// rotated = R y for the given plane and precomputed (cos, sin)
void rotate_into(const PlanarRotation& rot, std::span<const double> y, double c, double s,
                 std::span<double> out) {
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i];
    rot.apply_inplace(out, c, s);
}

void rotate_into(const PlaneSpec& plane, std::span<const double> y, double c, double s,
                 std::span<double> out) {
    rotate_into(plane.rotation(0.0), y, c, s, out);
}

double exp_inner(std::span<const double> x, std::span<const double> y, double beta) {
    return std::exp(beta * dot(x, y));
}

}  // namespace

double eval_baseline(std::span<const double> x, std::span<const double> y, double beta) {
    return exp_inner(x, y, beta) / beta;
}

double eval_rope(std::span<const double> x, double s, std::span<const double> y, double t,
                 double beta, double omega, const PlaneSpec& plane) {
    double a = rope_angle(s, t, omega);
    Vec ry(y.size());
    rotate_into(plane, y, std::cos(a), std::sin(a), ry);
    return exp_inner(x, ry, beta) / beta;
}

double eval_distance_bias(std::span<const double> x, double s, std::span<const double> y, double t,
                          double beta, const BiasSpec& bias) {
    return bias(s, t) * exp_inner(x, y, beta) / beta;
}

double eval_phase_field(std::span<const double> x, double s, std::span<const double> y, double t,
                        double beta, const PhaseField& psi, const PlaneSpec& plane) {
    double g = phase_angle(s, t, psi);
    Vec ry(y.size());
    rotate_into(plane, y, std::cos(g), std::sin(g), ry);
    return exp_inner(x, ry, beta) / beta;
}

double eval_toeplitz_linear(std::span<const double> x, double s, std::span<const double> y,
                            double t, const KernelSpec& spec) {
    return spec.toeplitz_c(t - s) * dot(x, y);
}

double eval_prompt_gauge(std::span<const double> x, const PromptLabel& z,
                         std::span<const double> y, const PromptLabel& w, double beta) {
    Mat q = z.gauge->matrix().multiply_transposed(w.gauge->matrix());
    Vec qy(y.size());
    q.apply(y, qy);
    return exp_inner(x, qy, beta) / beta;
}

Kernel::Kernel(KernelSpec spec) : spec_(std::move(spec)) {
    check_beta(spec_.beta);
    if (spec_.family == KernelFamily::ToeplitzLinear && spec_.toeplitz.empty())
        throw std::invalid_argument("toeplitz kernel: empty coefficient map");
    if (spec_.family == KernelFamily::PhaseField && spec_.phase.empty())
        throw std::invalid_argument("phase-field kernel: psi unset");
}

static void require_position(const AuxLabel& l, const char* fam) {
    if (!is_position(l))
        throw std::invalid_argument(std::string(fam) + " kernel requires position labels");
}

static void require_prompt(const AuxLabel& l) {
    if (!is_prompt(l)) throw std::invalid_argument("prompt kernel requires prompt labels");
}

double Kernel::eval(std::span<const double> x, const AuxLabel& a, std::span<const double> y,
                    const AuxLabel& b) const {
    switch (spec_.family) {
        case KernelFamily::Baseline:
            return eval_baseline(x, y, spec_.beta);
        case KernelFamily::DistanceBias:
            require_position(a, "distance-bias");
            require_position(b, "distance-bias");
            return eval_distance_bias(x, position_of(a), y, position_of(b), spec_.beta, spec_.bias);
        case KernelFamily::RoPE:
            require_position(a, "rope");
            require_position(b, "rope");
            return eval_rope(x, position_of(a), y, position_of(b), spec_.beta, spec_.omega,
                             spec_.plane);
        case KernelFamily::PhaseField:
            require_position(a, "phase-field");
            require_position(b, "phase-field");
            return eval_phase_field(x, position_of(a), y, position_of(b), spec_.beta, spec_.phase,
                                    spec_.plane);
        case KernelFamily::ToeplitzLinear:
            require_position(a, "toeplitz");
            require_position(b, "toeplitz");
            return eval_toeplitz_linear(x, position_of(a), y, position_of(b), spec_);
        case KernelFamily::PromptGauge:
            require_prompt(a);
            require_prompt(b);
            return eval_prompt_gauge(x, prompt_of(a), y, prompt_of(b), spec_.beta);
    }
    throw std::logic_error("Kernel::eval: bad family");
}

void Kernel::grad_x(std::span<const double> x, const AuxLabel& a, std::span<const double> y,
                    const AuxLabel& b, std::span<double> grad) const {
    if (grad.size() != x.size()) throw std::invalid_argument("grad_x: output dimension mismatch");
    const double beta = spec_.beta;
    switch (spec_.family) {
        case KernelFamily::Baseline: {
            double w = exp_inner(x, y, beta);
            for (std::size_t i = 0; i < y.size(); ++i) grad[i] = w * y[i];
            return;
        }
        case KernelFamily::DistanceBias: {
            require_position(a, "distance-bias");
            require_position(b, "distance-bias");
            double w = spec_.bias(position_of(a), position_of(b)) * exp_inner(x, y, beta);
            for (std::size_t i = 0; i < y.size(); ++i) grad[i] = w * y[i];
            return;
        }
        case KernelFamily::RoPE: {
            require_position(a, "rope");
            require_position(b, "rope");
            double ang = rope_angle(position_of(a), position_of(b), spec_.omega);
            rotate_into(spec_.plane, y, std::cos(ang), std::sin(ang), grad);
            double w = exp_inner(x, grad, beta);
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= w;
            return;
        }
        case KernelFamily::PhaseField: {
            require_position(a, "phase-field");
            require_position(b, "phase-field");
            double g = phase_angle(position_of(a), position_of(b), spec_.phase);
            rotate_into(spec_.plane, y, std::cos(g), std::sin(g), grad);
            double w = exp_inner(x, grad, beta);
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= w;
            return;
        }
        case KernelFamily::ToeplitzLinear: {
            require_position(a, "toeplitz");
            require_position(b, "toeplitz");
            double c = spec_.toeplitz_c(position_of(b) - position_of(a));
            for (std::size_t i = 0; i < y.size(); ++i) grad[i] = c * y[i];
            return;
        }
        case KernelFamily::PromptGauge: {
            require_prompt(a);
            require_prompt(b);
            Mat q = prompt_of(a).gauge->matrix().multiply_transposed(prompt_of(b).gauge->matrix());
            q.apply(y, grad);
            double w = exp_inner(x, grad, beta);
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= w;
            return;
        }
    }
    throw std::logic_error("Kernel::grad_x: bad family");
}

Vec Kernel::gauge_frame(std::span<const double> x, const AuxLabel& label) const {
    switch (spec_.family) {
        case KernelFamily::RoPE: {
            require_position(label, "rope");
            Vec q(x.begin(), x.end());
            spec_.plane.rotation(spec_.omega * position_of(label)).apply_inplace(q);
            return q;
        }
        case KernelFamily::PhaseField: {
            require_position(label, "phase-field");
            Vec q(x.begin(), x.end());
            spec_.plane.rotation(-spec_.phase(position_of(label))).apply_inplace(q);
            return q;
        }
        case KernelFamily::PromptGauge: {
            require_prompt(label);
            return prompt_of(label).gauge->apply_transpose(x);
        }
        default:
            return Vec(x.begin(), x.end());
    }
}

BoundKernel::BoundKernel(const Kernel& kernel, const std::vector<AuxLabel>& labels, int dim)
    : spec_(kernel.spec()),
      n_(static_cast<int>(labels.size())),
      d_(dim),
      rot0_(kernel.spec().plane.rotation(0.0)) {
    const std::size_t nn = static_cast<std::size_t>(n_) * n_;
    switch (spec_.family) {
        case KernelFamily::Baseline:
            break;
        case KernelFamily::DistanceBias:
        case KernelFamily::ToeplitzLinear: {
            pair_scale_.resize(nn);
            for (int i = 0; i < n_; ++i) {
                require_position(labels[i], "positional");
                double s = position_of(labels[i]);
                for (int j = 0; j < n_; ++j) {
                    double t = position_of(labels[j]);
                    pair_scale_[idx(i, j)] = spec_.family == KernelFamily::DistanceBias
                                                 ? spec_.bias(s, t)
                                                 : spec_.toeplitz_c(t - s);
                }
            }
            break;
        }
        case KernelFamily::RoPE:
        case KernelFamily::PhaseField: {
            pair_cos_.resize(nn);
            pair_sin_.resize(nn);
            for (int i = 0; i < n_; ++i) {
                require_position(labels[i], "positional");
                double s = position_of(labels[i]);
                for (int j = 0; j < n_; ++j) {
                    double t = position_of(labels[j]);
                    double a = spec_.family == KernelFamily::RoPE
                                   ? rope_angle(s, t, spec_.omega)
                                   : phase_angle(s, t, spec_.phase);
                    pair_cos_[idx(i, j)] = std::cos(a);
                    pair_sin_[idx(i, j)] = std::sin(a);
                }
            }
            break;
        }
        case KernelFamily::PromptGauge: {
            pair_mat_.resize(nn, nullptr);
            std::unordered_map<const OrthogonalGauge*, std::unordered_map<const OrthogonalGauge*, const Mat*>>
                cache;
            for (int i = 0; i < n_; ++i) {
                require_prompt(labels[i]);
                const auto& zi = prompt_of(labels[i]);
                for (int j = 0; j < n_; ++j) {
                    const auto& zj = prompt_of(labels[j]);
                    const Mat*& slot = cache[zi.gauge.get()][zj.gauge.get()];
                    if (!slot) {
                        mat_store_.push_back(std::make_unique<Mat>(
                            zi.gauge->matrix().multiply_transposed(zj.gauge->matrix())));
                        slot = mat_store_.back().get();
                    }
                    pair_mat_[idx(i, j)] = slot;
                }
            }
            break;
        }
    }
}

namespace {
thread_local Vec bound_scratch;
}

double BoundKernel::eval_pair(int i, int j, const double* xi, const double* xj) const {
    std::span<const double> x(xi, d_), y(xj, d_);
    switch (spec_.family) {
        case KernelFamily::Baseline:
            return exp_inner(x, y, spec_.beta) / spec_.beta;
        case KernelFamily::DistanceBias:
            return pair_scale_[idx(i, j)] * exp_inner(x, y, spec_.beta) / spec_.beta;
        case KernelFamily::ToeplitzLinear:
            return pair_scale_[idx(i, j)] * dot(x, y);
        case KernelFamily::RoPE:
        case KernelFamily::PhaseField: {
            bound_scratch.resize(d_);
            rotate_into(rot0_, y, pair_cos_[idx(i, j)], pair_sin_[idx(i, j)], bound_scratch);
            return exp_inner(x, bound_scratch, spec_.beta) / spec_.beta;
        }
        case KernelFamily::PromptGauge: {
            bound_scratch.resize(d_);
            pair_mat_[idx(i, j)]->apply(y, bound_scratch);
            return exp_inner(x, bound_scratch, spec_.beta) / spec_.beta;
        }
    }
    throw std::logic_error("BoundKernel::eval_pair: bad family");
}

void BoundKernel::grad_pair_accumulate(int i, int j, const double* xi, const double* xj,
                                       double* grad) const {
    std::span<const double> x(xi, d_), y(xj, d_);
    switch (spec_.family) {
        case KernelFamily::Baseline: {
            double w = exp_inner(x, y, spec_.beta);
            for (int k = 0; k < d_; ++k) grad[k] += w * y[k];
            return;
        }
        case KernelFamily::DistanceBias: {
            double w = pair_scale_[idx(i, j)] * exp_inner(x, y, spec_.beta);
            for (int k = 0; k < d_; ++k) grad[k] += w * y[k];
            return;
        }
        case KernelFamily::ToeplitzLinear: {
            double c = pair_scale_[idx(i, j)];
            for (int k = 0; k < d_; ++k) grad[k] += c * y[k];
            return;
        }
        case KernelFamily::RoPE:
        case KernelFamily::PhaseField: {
            bound_scratch.resize(d_);
            rotate_into(rot0_, y, pair_cos_[idx(i, j)], pair_sin_[idx(i, j)], bound_scratch);
            double w = exp_inner(x, bound_scratch, spec_.beta);
            for (int k = 0; k < d_; ++k) grad[k] += w * bound_scratch[k];
            return;
        }
        case KernelFamily::PromptGauge: {
            bound_scratch.resize(d_);
            pair_mat_[idx(i, j)]->apply(y, bound_scratch);
            double w = exp_inner(x, bound_scratch, spec_.beta);
            for (int k = 0; k < d_; ++k) grad[k] += w * bound_scratch[k];
            return;
        }
    }
    throw std::logic_error("BoundKernel::grad_pair_accumulate: bad family");
}

}  // namespace usaav

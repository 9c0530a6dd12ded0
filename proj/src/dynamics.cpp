#include "usaav/dynamics.hpp"

#include <cmath>
#include <cstdio>

namespace usaav {

void SimConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be positive");
    if (dt > snapshot_every || snapshot_every > t_final)
        throw std::invalid_argument("SimConfig: need dt <= snapshot_every <= t_final");
    if (stop_window < 0.0 || stop_rel_tol < 0.0)
        throw std::invalid_argument("SimConfig: negative stop parameters");
}

namespace {

void velocity_field_into(const ParticleSystem& sys, const BoundKernel& k, Vec& out, bool parallel) {
    const int n = sys.size();
    const int d = sys.dim();
    out.assign(static_cast<std::size_t>(n) * d, 0.0);
    const double* x = sys.states().data();
    const double inv_n = 1.0 / static_cast<double>(n);
#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < n; ++i) {
        double* vi = out.data() + static_cast<std::size_t>(i) * d;
        if (sys.frozen(i)) continue;
        const double* xi = x + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < n; ++j)
            k.grad_pair_accumulate(i, j, xi, x + static_cast<std::size_t>(j) * d, vi);
        for (int c = 0; c < d; ++c) vi[c] *= inv_n;
        project_tangent_inplace(std::span<const double>(xi, d), std::span<double>(vi, d));
    }
}

}  // namespace

void velocity_field(const ParticleSystem& sys, const BoundKernel& k, Vec& out) {
    velocity_field_into(sys, k, out, true);
}

void velocity_field_reference(const ParticleSystem& sys, const BoundKernel& k, Vec& out) {
    velocity_field_into(sys, k, out, false);
}

std::vector<Vec> velocity_field(const ParticleSystem& sys, const Kernel& k) {
    BoundKernel bound(k, sys.labels(), sys.dim());
    Vec flat;
    velocity_field(sys, bound, flat);
    std::vector<Vec> out(sys.size());
    for (int i = 0; i < sys.size(); ++i)
        out[i] = Vec(flat.begin() + static_cast<std::size_t>(i) * sys.dim(),
                     flat.begin() + static_cast<std::size_t>(i + 1) * sys.dim());
    return out;
}

namespace {

// x_new = normalize(x + delta), skipping rows whose displacement is exactly
// zero so stationary particles stay bit-identical. Non-finite rows are left
// untouched; the caller's post-step scan reports them with step context.
void advance_rows(const Vec& base, const Vec& delta, double factor, int n, int d, Vec& out) {
    for (int i = 0; i < n; ++i) {
        const std::size_t off = static_cast<std::size_t>(i) * d;
        bool moved = false;
        for (int c = 0; c < d; ++c) {
            double step = factor * delta[off + c];
            out[off + c] = base[off + c] + step;
            moved = moved || step != 0.0;
        }
        if (!moved) continue;
        std::span<double> row(out.data() + off, static_cast<std::size_t>(d));
        double nrm = norm2(row);
        if (nrm > 0.0 && std::isfinite(nrm)) scale(row, 1.0 / nrm);
    }
}

}  // namespace

void heun_step_states(Vec& states, int n, int d, double dt, const VelocityFn& velocity) {
    Vec k1, k2, provisional(states.size());
    velocity(states, k1);
    advance_rows(states, k1, dt, n, d, provisional);
    velocity(provisional, k2);
    for (std::size_t i = 0; i < k1.size(); ++i) k1[i] += k2[i];
    advance_rows(states, k1, 0.5 * dt, n, d, provisional);
    states.swap(provisional);
}

namespace {

ParticleSystem step_with_bound(const ParticleSystem& sys, const BoundKernel& k, double dt) {
    ParticleSystem out = sys;
    heun_step_states(out.mutable_states(), sys.size(), sys.dim(), dt, [&](const Vec& s, Vec& v) {
        ParticleSystem tmp = sys;
        tmp.mutable_states() = s;
        velocity_field(tmp, k, v);
    });
    return out;
}

}  // namespace

ParticleSystem step_rk2(const ParticleSystem& sys, const Kernel& k, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_rk2: dt must be positive");
    BoundKernel bound(k, sys.labels(), sys.dim());
    return step_with_bound(sys, bound, dt);
}

double energy(const ParticleSystem& sys, const BoundKernel& k) {
    const int n = sys.size();
    const int d = sys.dim();
    const double* x = sys.states().data();
    Vec partial(n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const double* xi = x + static_cast<std::size_t>(i) * d;
        KahanSum row;
        for (int j = 0; j < n; ++j)
            row.add(k.eval_pair(i, j, xi, x + static_cast<std::size_t>(j) * d));
        partial[i] = row.value();
    }
    KahanSum total;
    for (int i = 0; i < n; ++i) total.add(partial[i]);
    return total.value() / (2.0 * static_cast<double>(n) * n);
}

double energy(const ParticleSystem& sys, const Kernel& k) {
    BoundKernel bound(k, sys.labels(), sys.dim());
    return energy(sys, bound);
}

double energy_production(const ParticleSystem& sys, const BoundKernel& k) {
    Vec v;
    velocity_field(sys, k, v);
    const int n = sys.size();
    const int d = sys.dim();
    KahanSum sum;
    for (int i = 0; i < n; ++i)
        sum.add(dot(std::span<const double>(v.data() + static_cast<std::size_t>(i) * d, d),
                    std::span<const double>(v.data() + static_cast<std::size_t>(i) * d, d)));
    return sum.value() / static_cast<double>(n);
}

double energy_production(const ParticleSystem& sys, const Kernel& k) {
    BoundKernel bound(k, sys.labels(), sys.dim());
    return energy_production(sys, bound);
}

TrajectoryRecord simulate(const ParticleSystem& sys, const Kernel& k, const SimConfig& cfg,
                          const MetricSet& metrics) {
    cfg.validate();
    BoundKernel bound(k, sys.labels(), sys.dim());
    const int n = sys.size();
    const int d = sys.dim();
    const long long steps = std::llround(cfg.t_final / cfg.dt);
    const long long stride = std::max(1LL, std::llround(cfg.snapshot_every / cfg.dt));
    const long long window = std::max(1LL, std::llround(cfg.stop_window / cfg.dt));

    ParticleSystem current = sys;
    TrajectoryRecord rec;

    auto check_finite = [&](long long step, double t) {
        const Vec& s = current.states();
        for (std::size_t i = 0; i < s.size(); ++i)
            if (!std::isfinite(s[i])) {
                char buf[160];
                std::snprintf(buf, sizeof(buf),
                              "simulate: non-finite state at step %lld (t=%.6g), particle %d",
                              step, t, static_cast<int>(i / d));
                throw NumericalError(buf);
            }
    };

    auto snapshot = [&](double t, double e) {
        rec.times.push_back(t);
        rec.energy.push_back(e);
        rec.production.push_back(energy_production(current, bound));
        rec.metrics.push_back(compute_metric_row(current, k, metrics, e));
    };

    double e_prev = energy(current, bound);
    snapshot(0.0, e_prev);

    long long plateau_run = 0;
    for (long long step = 1; step <= steps; ++step) {
        heun_step_states(current.mutable_states(), n, d, cfg.dt, [&](const Vec& s, Vec& v) {
            ParticleSystem tmp = current;
            tmp.mutable_states() = s;
            velocity_field(tmp, bound, v);
        });
        double t = static_cast<double>(step) * cfg.dt;
        check_finite(step, t);
        double e = energy(current, bound);
        double rel = (e - e_prev) / (1.0 + std::abs(e_prev));
        e_prev = e;
        bool plateau = cfg.stop_rel_tol > 0.0 && rel < cfg.stop_rel_tol;
        plateau_run = plateau ? plateau_run + 1 : 0;
        bool stopping = plateau_run >= window;
        if (step % stride == 0 || step == steps || stopping) snapshot(t, e);
        if (stopping) {
            rec.stopped_early = true;
            break;
        }
    }
    if (cfg.record_states) rec.final_states = current;
    return rec;
}

}  // namespace usaav

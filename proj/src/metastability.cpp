#include "usaav/metastability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace usaav {

void ClusterSpec::validate() const {
    if (K < 2) throw std::invalid_argument("ClusterSpec: K >= 2 required");
    if (static_cast<int>(centers.size()) != K || static_cast<int>(sizes.size()) != K)
        throw std::invalid_argument("ClusterSpec: centers/sizes must have K entries");
    if (!(r0 > 0.0) || r0 >= 0.25) throw std::invalid_argument("ClusterSpec: r0 must lie in (0, 1/4)");
    if (!(sigma0 > 0.0) || sigma0 >= M_PI / 2.0)
        throw std::invalid_argument("ClusterSpec: sigma0 must lie in (0, pi/2)");
    for (int s : sizes)
        if (s < 1) throw std::invalid_argument("ClusterSpec: cluster sizes must be positive");
    if (position_halfwidth < 0.0 || position_halfwidth >= 0.5 / K)
        throw std::invalid_argument("ClusterSpec: position_halfwidth must lie in [0, 1/(2K))");
    for (int p = 0; p < K; ++p)
        for (int q = p + 1; q < K; ++q)
            if (geodesic_angle(centers[p], centers[q]) < 2.0 * sigma0 - 1e-9)
                throw std::invalid_argument(
                    "ClusterSpec: infeasible, centers closer than 2*sigma0");
}

std::vector<std::vector<int>> ClusterSpec::partition() const {
    std::vector<std::vector<int>> part(K);
    int idx = 0;
    for (int p = 0; p < K; ++p)
        for (int i = 0; i < sizes[p]; ++i) part[p].push_back(idx++);
    return part;
}

ParticleSystem clustered_init(const ClusterSpec& spec, std::uint64_t rng_seed) {
    spec.validate();
    int n = 0;
    for (int s : spec.sizes) n += s;
    int d = spec.centers.front().dim();
    Vec states(static_cast<std::size_t>(n) * d);
    std::vector<AuxLabel> labels;
    labels.reserve(n);
    int row = 0;
    for (int p = 0; p < spec.K; ++p) {
        // Positions pack tightly around (2p+1)/(2K), so a decaying positional
        // bias couples clusters weakly relative to their interiors.
        double center_s = (2.0 * p + 1.0) / (2.0 * spec.K);
        for (int i = 0; i < spec.sizes[p]; ++i, ++row) {
            Rng rng = Rng::keyed({rng_seed, 0x636c7573ULL, static_cast<std::uint64_t>(row)});
            UnitVector x = rng.uniform_cap(spec.centers[p], spec.r0);
            if (geodesic_angle(x, spec.centers[p]) > spec.r0 + 1e-12)
                throw std::logic_error("clustered_init: cap sample out of radius");
            std::copy(x.coords().begin(), x.coords().end(),
                      states.begin() + static_cast<std::size_t>(row) * d);
            double offset = spec.sizes[p] > 1
                                ? spec.position_halfwidth * (2.0 * i / (spec.sizes[p] - 1.0) - 1.0)
                                : 0.0;
            labels.push_back(position_label(center_s + offset));
        }
    }
    return ParticleSystem(d, std::move(states), std::move(labels));
}

CoarseCouplings coarse_couplings(const Mat& bias, const std::vector<std::vector<int>>& partition) {
    int n = bias.rows;
    if (bias.cols != n) throw std::invalid_argument("coarse_couplings: square bias matrix required");
    int K = static_cast<int>(partition.size());
    for (const auto& c : partition)
        if (c.empty()) throw std::invalid_argument("coarse_couplings: empty cluster");
    CoarseCouplings out;
    out.W = Mat(K, K);
    out.w.assign(K, 0.0);
    for (int p = 0; p < K; ++p) out.w[p] = static_cast<double>(partition[p].size()) / n;
    for (int p = 0; p < K; ++p)
        for (int q = 0; q < K; ++q) {
            KahanSum s;
            for (int i : partition[p])
                for (int j : partition[q]) s.add(bias(i, j));
            out.W(p, q) = s.value() /
                          (static_cast<double>(partition[p].size()) * partition[q].size());
        }
    out.B_par = HUGE_VAL;
    out.B_cross = 0.0;
    for (int p = 0; p < K; ++p) {
        for (int i : partition[p]) {
            double row = 0.0;
            for (int j : partition[p]) row += bias(i, j) / n;
            out.B_par = std::min(out.B_par, row);
            for (int q = 0; q < K; ++q) {
                if (q == p) continue;
                double cross = 0.0;
                for (int j : partition[q]) cross += bias(i, j) / n;
                out.B_cross = std::max(out.B_cross, cross);
            }
        }
    }
    out.Lambda = 0.0;
    out.lambda_cross = HUGE_VAL;
    for (int p = 0; p < K; ++p) {
        double row = 0.0;
        for (int q = 0; q < K; ++q) row += out.w[q] * out.W(p, q);
        out.Lambda = std::max(out.Lambda, row);
        for (int q = 0; q < K; ++q)
            if (q != p)
                out.lambda_cross =
                    std::min(out.lambda_cross, out.w[q] * out.W(p, q) + out.w[p] * out.W(q, p));
    }
    return out;
}

namespace {

void check_rows_finite(const Vec& states, long long step, double t) {
    for (double v : states)
        if (!std::isfinite(v)) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "metastability: non-finite state at step %lld (t=%.6g)",
                          step, t);
            throw NumericalError(buf);
        }
}

}  // namespace

ReducedFlowResult reduced_flow(const std::vector<UnitVector>& centers, const CoarseCouplings& c,
                               double beta, const SimConfig& cfg) {
    cfg.validate();
    int K = static_cast<int>(centers.size());
    if (K < 1) throw std::invalid_argument("reduced_flow: K >= 1 required");
    int d = centers.front().dim();
    Vec u(static_cast<std::size_t>(K) * d);
    for (int p = 0; p < K; ++p)
        std::copy(centers[p].coords().begin(), centers[p].coords().end(),
                  u.begin() + static_cast<std::size_t>(p) * d);

    auto velocity = [&](const Vec& s, Vec& out) {
        out.assign(s.size(), 0.0);
        for (int p = 0; p < K; ++p) {
            const double* up = s.data() + static_cast<std::size_t>(p) * d;
            double* vp = out.data() + static_cast<std::size_t>(p) * d;
            for (int q = 0; q < K; ++q) {
                const double* uq = s.data() + static_cast<std::size_t>(q) * d;
                double ip = dot(std::span<const double>(up, d), std::span<const double>(uq, d));
                double wgt = c.w[q] * c.W(p, q) * std::exp(beta * ip);
                for (int k = 0; k < d; ++k) vp[k] += wgt * uq[k];
            }
            project_tangent_inplace(std::span<const double>(up, d), std::span<double>(vp, d));
        }
    };
    auto reduced_energy = [&](const Vec& s) {
        KahanSum e;
        for (int p = 0; p < K; ++p)
            for (int q = 0; q < K; ++q) {
                double ip = dot(std::span<const double>(s.data() + static_cast<std::size_t>(p) * d, d),
                                std::span<const double>(s.data() + static_cast<std::size_t>(q) * d, d));
                e.add(c.w[p] * c.w[q] * c.W(p, q) * std::exp(beta * ip));
            }
        return e.value() / (2.0 * beta);
    };

    ReducedFlowResult res;
    Vec v;
    const long long steps = std::llround(cfg.t_final / cfg.dt);
    const long long stride = std::max(1LL, std::llround(cfg.snapshot_every / cfg.dt));
    auto snapshot = [&](double t) {
        velocity(u, v);
        double prod = 0.0;
        for (int p = 0; p < K; ++p)
            prod += c.w[p] * dot(std::span<const double>(v.data() + static_cast<std::size_t>(p) * d, d),
                                 std::span<const double>(v.data() + static_cast<std::size_t>(p) * d, d));
        double tmin = M_PI;
        for (int p = 0; p < K; ++p)
            for (int q = p + 1; q < K; ++q)
                tmin = std::min(tmin, geodesic_angle(
                                          std::span<const double>(u.data() + static_cast<std::size_t>(p) * d, d),
                                          std::span<const double>(u.data() + static_cast<std::size_t>(q) * d, d)));
        MetricRow row;
        row.theta_min = K >= 2 ? tmin : 0.0;
        row.delta_max = 0.0;
        res.record.times.push_back(t);
        res.record.energy.push_back(reduced_energy(u));
        res.record.production.push_back(prod);
        res.record.metrics.push_back(row);
        res.center_snapshots.push_back(u);
    };

    snapshot(0.0);
    for (long long step = 1; step <= steps; ++step) {
        heun_step_states(u, K, d, cfg.dt, velocity);
        double t = static_cast<double>(step) * cfg.dt;
        check_rows_finite(u, step, t);
        if (step % stride == 0 || step == steps) snapshot(t);
    }
    return res;
}

std::optional<double> detect_merger(const TrajectoryRecord& rec, double angle_threshold) {
    for (std::size_t i = 0; i < rec.times.size(); ++i) {
        const auto& m = rec.metrics[i];
        if (m.theta_min && *m.theta_min < angle_threshold) return rec.times[i];
    }
    return std::nullopt;
}

ClusteredRun run_clustered(const ParticleSystem& sys, const Kernel& k, const SimConfig& cfg,
                           const std::vector<std::vector<int>>& partition) {
    cfg.validate();
    BoundKernel bound(k, sys.labels(), sys.dim());
    const int n = sys.size();
    const int d = sys.dim();
    const long long steps = std::llround(cfg.t_final / cfg.dt);
    const long long stride = std::max(1LL, std::llround(cfg.snapshot_every / cfg.dt));
    const long long window = std::max(1LL, std::llround(cfg.stop_window / cfg.dt));
    const int K = static_cast<int>(partition.size());

    ParticleSystem current = sys;
    ClusteredRun res{TrajectoryRecord{}, {}, current};

    auto snapshot = [&](double t, double e) {
        ClusterStats cs = cluster_stats(current, partition);
        double dmax = 0.0;
        for (double v : cs.diameters) dmax = std::max(dmax, v);
        double tmin = M_PI;
        for (int p = 0; p < K; ++p)
            for (int q = p + 1; q < K; ++q) tmin = std::min(tmin, cs.angles(p, q));
        MetricRow row;
        row.delta_max = dmax;
        row.theta_min = K >= 2 ? tmin : 0.0;
        res.record.times.push_back(t);
        res.record.energy.push_back(e);
        res.record.production.push_back(energy_production(current, bound));
        res.record.metrics.push_back(row);
        Vec centers(static_cast<std::size_t>(K) * d);
        for (int p = 0; p < K; ++p)
            std::copy(cs.centers[p].coords().begin(), cs.centers[p].coords().end(),
                      centers.begin() + static_cast<std::size_t>(p) * d);
        res.center_snapshots.push_back(std::move(centers));
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
        check_rows_finite(current.states(), step, t);
        double e = energy(current, bound);
        double rel = (e - e_prev) / (1.0 + std::abs(e_prev));
        e_prev = e;
        bool plateau = cfg.stop_rel_tol > 0.0 && rel < cfg.stop_rel_tol;
        plateau_run = plateau ? plateau_run + 1 : 0;
        bool stopping = plateau_run >= window;
        if (step % stride == 0 || step == steps || stopping) snapshot(t, e);
        if (stopping) {
            res.record.stopped_early = true;
            break;
        }
    }
    res.final_states = current;
    return res;
}

namespace {

Mat bias_matrix(const KernelSpec& spec, const std::vector<AuxLabel>& labels) {
    int n = static_cast<int>(labels.size());
    Mat b(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            b(i, j) = spec.bias(position_of(labels[i]), position_of(labels[j]));
    return b;
}

}  // namespace

MetastabilityReport metastability_report(const ClusterSpec& spec, const KernelSpec& kernel,
                                         const std::vector<double>& beta_list, const SimConfig& cfg,
                                         std::uint64_t rng_seed, const MetastabilityOptions& opt) {
    spec.validate();
    if (kernel.family != KernelFamily::DistanceBias)
        throw std::invalid_argument("metastability_report: distance-bias kernel required");

    MetastabilityReport report;
    report.trap_radius = opt.trap_radius > 0.0 ? opt.trap_radius
                                               : std::min(spec.sigma0 / 8.0, spec.r0 / 4.0);
    report.merger_threshold = opt.merger_threshold > 0.0 ? opt.merger_threshold : spec.sigma0 / 2.0;
    report.one_minus_cos_sigma0 = 1.0 - std::cos(spec.sigma0);
    const double r = report.trap_radius;
    const auto partition = spec.partition();

    for (double beta : beta_list) {
        KernelSpec ks = kernel;
        ks.beta = beta;
        Kernel k(ks);
        ParticleSystem sys = clustered_init(spec, rng_seed);
        CoarseCouplings cc = coarse_couplings(bias_matrix(ks, sys.labels()), partition);
        ClusteredRun run = run_clustered(sys, k, cfg, partition);
        const TrajectoryRecord& rec = run.record;

        MetastabilityEntry e;
        e.beta = beta;

        // T_f: first snapshot with max_p Delta_p below 2r.
        std::size_t i_f = rec.times.size();
        for (std::size_t i = 0; i < rec.times.size(); ++i)
            if (*rec.metrics[i].delta_max < 2.0 * r) {
                i_f = i;
                break;
            }
        if (i_f == rec.times.size()) {
            // Never contracted; report the raw trajectory and move on.
            e.t_f = e.t_m = rec.times.back();
            e.trapping_certificate = false;
            report.entries.push_back(e);
            report.trajectories.push_back(rec);
            continue;
        }
        e.t_f = rec.times[i_f];

        // Certified trapping window [T_f, T_m].
        std::size_t i_m = i_f;
        while (i_m + 1 < rec.times.size() && *rec.metrics[i_m + 1].delta_max <= 2.0 * r &&
               *rec.metrics[i_m + 1].theta_min >= spec.sigma0)
            ++i_m;
        e.t_m = rec.times[i_m];
        e.trapping_certificate = true;
        for (std::size_t i = i_f; i <= i_m; ++i)
            if (*rec.metrics[i].delta_max > 2.0 * r || *rec.metrics[i].theta_min < spec.sigma0)
                e.trapping_certificate = false;

        e.t_merge = detect_merger(rec, report.merger_threshold);

        // Angular gap of the reduced configuration at T_f.
        const Vec& cf = run.center_snapshots[i_f];
        int d = sys.dim();
        double gap = HUGE_VAL;
        for (int p = 0; p < spec.K; ++p)
            for (int q = p + 1; q < spec.K; ++q) {
                double ip = dot(std::span<const double>(cf.data() + static_cast<std::size_t>(p) * d, d),
                                std::span<const double>(cf.data() + static_cast<std::size_t>(q) * d, d));
                gap = std::min(gap, 1.0 - ip);
            }
        e.delta_gap = gap;

        // Reduced K-point flow from the measured centers at T_f, compared at
        // matched snapshot times over [T_f, T_m].
        if (i_m > i_f) {
            std::vector<UnitVector> c0;
            for (int p = 0; p < spec.K; ++p)
                c0.push_back(UnitVector(Vec(cf.begin() + static_cast<std::size_t>(p) * d,
                                            cf.begin() + static_cast<std::size_t>(p + 1) * d)));
            SimConfig rcfg = cfg;
            rcfg.t_final = rec.times[i_m] - rec.times[i_f];
            rcfg.stop_rel_tol = 0.0;
            ReducedFlowResult red = reduced_flow(c0, cc, beta, rcfg);
            std::size_t m = std::min(red.center_snapshots.size(), run.center_snapshots.size() - i_f);
            double dev = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const Vec& a = run.center_snapshots[i_f + j];
                const Vec& b = red.center_snapshots[j];
                for (int p = 0; p < spec.K; ++p)
                    dev = std::max(
                        dev, geodesic_angle(
                                 std::span<const double>(a.data() + static_cast<std::size_t>(p) * d, d),
                                 std::span<const double>(b.data() + static_cast<std::size_t>(p) * d, d)));
            }
            e.max_center_deviation = dev;
            e.reduced_energy_final = red.record.energy.back();
        }
        e.fitted_deviation_constant =
            e.max_center_deviation / (r + std::exp(-beta * report.one_minus_cos_sigma0));

        report.entries.push_back(e);
        report.trajectories.push_back(rec);
    }

    // Regression of log merger time against beta.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    double gap_sum = 0.0;
    for (const auto& e : report.entries) {
        if (!e.t_merge || !(*e.t_merge > 0.0)) continue;
        double x = e.beta, y = std::log(*e.t_merge);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        gap_sum += e.delta_gap;
        ++cnt;
    }
    if (cnt >= 2) {
        double denom = cnt * sxx - sx * sx;
        report.merger_slope = (cnt * sxy - sx * sy) / denom;
        report.merger_intercept = (sy - report.merger_slope * sx) / cnt;
        report.mean_delta_gap = gap_sum / cnt;
    }
    return report;
}

}  // namespace usaav

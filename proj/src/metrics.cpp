#include "usaav/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace usaav {

double collapse_gap(const ParticleSystem& sys) {
    int n = sys.size();
    if (n < 2) throw std::invalid_argument("collapse_gap: n >= 2 required");
    KahanSum sum;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            sum.add(dot(sys.state(i), sys.state(j)));
        }
    return 1.0 - sum.value() / (static_cast<double>(n) * (n - 1));
}

double collapse_gap_gauge(const ParticleSystem& sys,
                          const std::function<Vec(std::span<const double>, const AuxLabel&)>& gauge_map) {
    int n = sys.size();
    if (n < 2) throw std::invalid_argument("gauge_gap: n >= 2 required");
    int d = sys.dim();
    Vec q(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i) {
        Vec qi = gauge_map(sys.state(i), sys.label(i));
        std::copy(qi.begin(), qi.end(), q.begin() + static_cast<std::size_t>(i) * d);
    }
    KahanSum sum;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            sum.add(dot(std::span<const double>(q.data() + static_cast<std::size_t>(i) * d, d),
                        std::span<const double>(q.data() + static_cast<std::size_t>(j) * d, d)));
        }
    return 1.0 - sum.value() / (static_cast<double>(n) * (n - 1));
}

double gauge_gap(const ParticleSystem& sys, const Kernel& k) {
    return collapse_gap_gauge(
        sys, [&](std::span<const double> x, const AuxLabel& l) { return k.gauge_frame(x, l); });
}

namespace {

// Group particle indices by identical label values.
std::vector<std::vector<int>> label_groups(const ParticleSystem& sys) {
    std::map<std::pair<int, double>, std::vector<int>> groups;
    for (int i = 0; i < sys.size(); ++i) {
        const AuxLabel& l = sys.label(i);
        std::pair<int, double> key;
        if (is_position(l))
            key = {1, position_of(l)};
        else if (is_prompt(l))
            key = {2, static_cast<double>(prompt_of(l).index)};
        else
            key = {0, 0.0};
        groups[key].push_back(i);
    }
    std::vector<std::vector<int>> out;
    out.reserve(groups.size());
    for (auto& [key, idxs] : groups) out.push_back(std::move(idxs));
    return out;
}

}  // namespace

double conditional_diameter(const ParticleSystem& sys) {
    double worst = 0.0;
    for (const auto& group : label_groups(sys))
        for (std::size_t a = 0; a < group.size(); ++a)
            for (std::size_t b = a + 1; b < group.size(); ++b)
                worst = std::max(worst, geodesic_angle(sys.state(group[a]), sys.state(group[b])));
    return worst;
}

double relative_energy_gap(double e_now, double beta, double sup_b) {
    return relative_gap_to_ceiling(e_now, sup_b * std::exp(beta) / (2.0 * beta));
}

double relative_gap_to_ceiling(double e_now, double ceiling) {
    if (!(ceiling > 0.0)) throw std::invalid_argument("relative_energy_gap: ceiling must be positive");
    return (ceiling - e_now) / ceiling;
}

ClusterStats cluster_stats(const ParticleSystem& sys, const std::vector<std::vector<int>>& partition) {
    int k = static_cast<int>(partition.size());
    std::vector<char> seen(sys.size(), 0);
    for (const auto& cluster : partition) {
        if (cluster.empty()) throw std::invalid_argument("cluster_stats: empty cluster");
        for (int i : cluster) {
            if (i < 0 || i >= sys.size() || seen[i])
                throw std::invalid_argument("cluster_stats: partition must cover indices disjointly");
            seen[i] = 1;
        }
    }
    for (char c : seen)
        if (!c) throw std::invalid_argument("cluster_stats: partition must cover all indices");

    ClusterStats out;
    out.diameters.assign(k, 0.0);
    out.angles = Mat(k, k);
    int d = sys.dim();
    for (int p = 0; p < k; ++p) {
        const auto& cluster = partition[p];
        for (std::size_t a = 0; a < cluster.size(); ++a)
            for (std::size_t b = a + 1; b < cluster.size(); ++b)
                out.diameters[p] =
                    std::max(out.diameters[p], geodesic_angle(sys.state(cluster[a]), sys.state(cluster[b])));
        Vec mean(d, 0.0);
        for (int i : cluster) axpy(1.0, sys.state(i), mean);
        scale(mean, 1.0 / static_cast<double>(cluster.size()));
        if (norm2(mean) <= 1e-12)
            throw std::invalid_argument("cluster_stats: near-zero cluster mean, center undefined");
        out.centers.push_back(UnitVector(std::move(mean)));
    }
    for (int p = 0; p < k; ++p)
        for (int q = 0; q < k; ++q)
            out.angles(p, q) = p == q ? 0.0 : geodesic_angle(out.centers[p], out.centers[q]);
    return out;
}

double assignment_cost(const Mat& cost) {
    // Shortest-augmenting-path assignment with potentials (1-indexed internal
    // arrays). Exact for dense double costs.
    int n = cost.rows;
    if (cost.cols != n) throw std::invalid_argument("assignment_cost: square matrix required");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j) total += cost(p[j] - 1, j - 1);
    return total;
}

double empirical_w1(const ParticleSystem& a, const ParticleSystem& b, bool periodic_positions) {
    if (a.size() != b.size())
        throw std::invalid_argument("empirical_w1: equal particle counts required");
    if (a.dim() != b.dim()) throw std::invalid_argument("empirical_w1: dimension mismatch");
    int n = a.size(), d = a.dim();
    Mat cost(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double dx = 0.0;
            for (int k = 0; k < d; ++k) {
                double diff = a.state(i)[k] - b.state(j)[k];
                dx += diff * diff;
            }
            cost(i, j) = std::sqrt(dx) + aux_distance(a.label(i), b.label(j), periodic_positions);
        }
    return assignment_cost(cost) / static_cast<double>(n);
}

MetricRow compute_metric_row(const ParticleSystem& sys, const Kernel& k, const MetricSet& set,
                             double energy_now) {
    MetricRow row;
    if (set.g_x) row.g_x = collapse_gap(sys);
    if (set.g_q) row.g_q = gauge_gap(sys, k);
    if (set.d_cond) row.d_cond = conditional_diameter(sys);
    if (set.delta_e) row.delta_e = relative_gap_to_ceiling(energy_now, set.ceiling);
    if (set.cluster) {
        ClusterStats cs = cluster_stats(sys, set.partition);
        double dmax = 0.0;
        for (double v : cs.diameters) dmax = std::max(dmax, v);
        double tmin = M_PI;
        int kk = static_cast<int>(cs.centers.size());
        for (int p = 0; p < kk; ++p)
            for (int q = p + 1; q < kk; ++q) tmin = std::min(tmin, cs.angles(p, q));
        row.delta_max = dmax;
        row.theta_min = kk >= 2 ? tmin : 0.0;
    }
    return row;
}

}  // namespace usaav

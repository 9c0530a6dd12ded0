#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "usaav/metastability.hpp"
#include "usaav/metrics.hpp"
#include "usaav/rng.hpp"

using namespace usaav;

namespace {

ClusterSpec three_cluster_spec(double sigma0 = M_PI / 3.0, double r0 = 0.05, int size = 8) {
    ClusterSpec spec;
    spec.K = 3;
    spec.sigma0 = sigma0;
    spec.r0 = r0;
    spec.sizes = {size, size, size};
    // equatorial centers at pairwise angle exactly 2 pi / 3 = 2 sigma0
    for (int k = 0; k < 3; ++k) {
        double phi = 2.0 * M_PI * k / 3.0;
        spec.centers.push_back(UnitVector(Vec{std::cos(phi), std::sin(phi), 0.0}));
    }
    return spec;
}

}  // namespace

TEST_CASE("clustered_init respects the cap radius and separation") {
    ClusterSpec spec = three_cluster_spec();
    ParticleSystem sys = clustered_init(spec, 99);
    CHECK(sys.size() == 24);
    ClusterStats cs = cluster_stats(sys, spec.partition());
    for (double dmy : cs.diameters) CHECK(dmy <= 2.0 * spec.r0 + 1e-12);
    for (int p = 0; p < 3; ++p)
        for (int q = p + 1; q < 3; ++q)
            CHECK(cs.angles(p, q) >= 2.0 * spec.sigma0 - 2.0 * spec.r0 - 1e-12);
    // labels pack around (2p+1)/(2K) within the configured half-width
    CHECK(position_of(sys.label(0)) == doctest::Approx(1.0 / 6 - spec.position_halfwidth));
    CHECK(position_of(sys.label(23)) == doctest::Approx(5.0 / 6 + spec.position_halfwidth));
    for (int p = 0; p < 3; ++p)
        for (int i : spec.partition()[p])
            CHECK(std::abs(position_of(sys.label(i)) - (2.0 * p + 1) / 6) <=
                  spec.position_halfwidth + 1e-12);
}

TEST_CASE("clustered_init with tiny radius puts particles at the centers") {
    ClusterSpec spec = three_cluster_spec(M_PI / 3.0, 1e-9, 2);
    // r0 must stay positive; particles land within r0 of the centers.
    ParticleSystem sys = clustered_init(spec, 7);
    for (int p = 0; p < 3; ++p)
        for (int i = 0; i < 2; ++i)
            CHECK(geodesic_angle(sys.state_vector(2 * p + i), spec.centers[p]) <= 1e-9);
}

TEST_CASE("clustered_init rejects infeasible specs") {
    ClusterSpec spec = three_cluster_spec();
    spec.sigma0 = M_PI / 2.5;  // centers at 2pi/3 are too close for 2 sigma0
    CHECK_THROWS_AS(clustered_init(spec, 1), std::invalid_argument);
    ClusterSpec bad = three_cluster_spec();
    bad.r0 = 0.3;
    CHECK_THROWS_AS(clustered_init(bad, 1), std::invalid_argument);
}

TEST_CASE("coarse couplings: closed forms and brute force") {
    SUBCASE("b == 1") {
        int n = 8;
        Mat b(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) b(i, j) = 1.0;
        std::vector<std::vector<int>> part = {{0, 1, 2}, {3, 4, 5, 6, 7}};
        CoarseCouplings cc = coarse_couplings(b, part);
        CHECK(cc.W(0, 0) == doctest::Approx(1.0));
        CHECK(cc.W(0, 1) == doctest::Approx(1.0));
        CHECK(cc.B_par == doctest::Approx(3.0 / 8));   // min_p n_p / n
        CHECK(cc.B_cross == doctest::Approx(5.0 / 8)); // max_{p != q} n_q / n
        CHECK(cc.w[0] == doctest::Approx(3.0 / 8));
    }
    SUBCASE("block-diagonal bias has zero cross coupling") {
        int n = 6;
        Mat b(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) b(i, j) = (i < 3) == (j < 3) ? 0.7 : 0.0;
        CoarseCouplings cc = coarse_couplings(b, {{0, 1, 2}, {3, 4, 5}});
        CHECK(cc.B_cross == 0.0);
        CHECK(cc.W(0, 1) == 0.0);
        CHECK(cc.W(0, 0) == doctest::Approx(0.7));
    }
    SUBCASE("random bias matches an independent double-sum oracle") {
        Rng rng = Rng::keyed({81});
        int n = 8;
        Mat b(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) b(i, j) = b(j, i) = rng.uniform();
        std::vector<std::vector<int>> part = {{0, 1, 2, 3}, {4, 5, 6, 7}};
        CoarseCouplings cc = coarse_couplings(b, part);
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) {
                double sum = 0.0;
                for (int i : part[p])
                    for (int j : part[q]) sum += b(i, j);
                CHECK(cc.W(p, q) == doctest::Approx(sum / 16.0).epsilon(1e-14));
            }
        double bpar = HUGE_VAL, bcross = 0.0;
        for (int p = 0; p < 2; ++p)
            for (int i : part[p]) {
                double intra = 0.0, cross = 0.0;
                for (int j : part[p]) intra += b(i, j) / n;
                for (int j : part[1 - p]) cross += b(i, j) / n;
                bpar = std::min(bpar, intra);
                bcross = std::max(bcross, cross);
            }
        CHECK(cc.B_par == doctest::Approx(bpar).epsilon(1e-14));
        CHECK(cc.B_cross == doctest::Approx(bcross).epsilon(1e-14));
    }
}

TEST_CASE("reduced flow: equilibria and attraction") {
    SimConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_final = 2.0;
    cfg.snapshot_every = 0.1;
    cfg.stop_rel_tol = 0.0;

    SUBCASE("K = 1 is stationary") {
        CoarseCouplings cc;
        cc.W = Mat(1, 1);
        cc.W(0, 0) = 1.0;
        cc.w = {1.0};
        std::vector<UnitVector> centers{UnitVector::basis(3, 0)};
        ReducedFlowResult res = reduced_flow(centers, cc, 1.0, cfg);
        const Vec& last = res.center_snapshots.back();
        CHECK(last[0] == doctest::Approx(1.0));
    }
    SUBCASE("zero cross coupling freezes both centers") {
        CoarseCouplings cc;
        cc.W = Mat(2, 2);
        cc.W(0, 0) = cc.W(1, 1) = 1.0;
        cc.w = {0.5, 0.5};
        std::vector<UnitVector> centers{UnitVector::basis(3, 0), UnitVector::basis(3, 1)};
        ReducedFlowResult res = reduced_flow(centers, cc, 1.0, cfg);
        CHECK(*res.record.metrics.back().theta_min == doctest::Approx(M_PI / 2).epsilon(1e-12));
    }
    SUBCASE("symmetric pair attracts monotonically with non-decreasing energy") {
        CoarseCouplings cc;
        cc.W = Mat(2, 2);
        cc.W(0, 0) = cc.W(1, 1) = cc.W(0, 1) = cc.W(1, 0) = 1.0;
        cc.w = {0.5, 0.5};
        std::vector<UnitVector> centers{UnitVector(Vec{std::cos(0.6), std::sin(0.6), 0}),
                                        UnitVector(Vec{std::cos(0.6), -std::sin(0.6), 0})};
        ReducedFlowResult res = reduced_flow(centers, cc, 1.0, cfg);
        const auto& m = res.record.metrics;
        for (std::size_t i = 1; i < m.size(); ++i) {
            CHECK(*m[i].theta_min <= *m[i - 1].theta_min + 1e-12);
            CHECK(res.record.energy[i] >=
                  res.record.energy[i - 1] - 1e-9 * (1 + std::abs(res.record.energy[i - 1])));
        }
        CHECK(*m.back().theta_min < *m.front().theta_min);
    }
}

TEST_CASE("detect_merger") {
    TrajectoryRecord rec;
    for (int i = 0; i <= 10; ++i) {
        rec.times.push_back(0.1 * i);
        rec.energy.push_back(0.0);
        rec.production.push_back(0.0);
        MetricRow row;
        row.theta_min = 1.0 - 0.05 * i;
        rec.metrics.push_back(row);
    }
    CHECK(!detect_merger(rec, 0.4).has_value());
    CHECK(*detect_merger(rec, 0.6) == doctest::Approx(0.9));
    CHECK(*detect_merger(rec, M_PI + 0.1) == doctest::Approx(0.0));
}

TEST_CASE("run_clustered records certificates consistent with cluster_stats") {
    ClusterSpec spec = three_cluster_spec(M_PI / 3.0, 0.05, 4);
    ParticleSystem sys = clustered_init(spec, 5);
    KernelSpec ks = KernelSpec::distance_bias(3.0, BiasSpec{BiasSpec::Kind::ExpDecay, 0.5, 0, 0.1});
    Kernel k(ks);
    SimConfig cfg;
    cfg.dt = 5e-3;
    cfg.t_final = 1.0;
    cfg.snapshot_every = 5e-3;
    cfg.stop_rel_tol = 0.0;
    ClusteredRun run = run_clustered(sys, k, cfg, spec.partition());
    REQUIRE(run.record.times.size() == 201);
    // energy ascent along the clustered run
    for (std::size_t i = 1; i < run.record.energy.size(); ++i)
        CHECK(run.record.energy[i] >=
              run.record.energy[i - 1] - 1e-9 * (1 + std::abs(run.record.energy[i - 1])));
    // recorded delta_max at t=0 matches a direct evaluation
    ClusterStats cs = cluster_stats(sys, spec.partition());
    double dmax = 0.0;
    for (double v : cs.diameters) dmax = std::max(dmax, v);
    CHECK(*run.record.metrics.front().delta_max == doctest::Approx(dmax));
}

TEST_CASE("metastability report on a short two-beta sweep") {
    ClusterSpec spec = three_cluster_spec(M_PI / 3.0, 0.05, 4);
    KernelSpec ks = KernelSpec::distance_bias(1.0, BiasSpec{BiasSpec::Kind::ExpDecay, 0.5, 0, 0.1});
    SimConfig cfg;
    cfg.dt = 5e-3;
    cfg.t_final = 30.0;
    cfg.snapshot_every = 5e-3;
    cfg.stop_rel_tol = 0.0;
    MetastabilityReport rep = metastability_report(spec, ks, {2.0, 3.0}, cfg, 11);
    REQUIRE(rep.entries.size() == 2);
    CHECK(rep.trap_radius == doctest::Approx(std::min(spec.sigma0 / 8.0, spec.r0 / 4.0)));
    for (const auto& e : rep.entries) {
        CHECK(e.t_f > 0.0);
        CHECK(e.t_m >= e.t_f);
        CHECK(e.trapping_certificate);
    }
    // contraction is faster at larger beta
    CHECK(rep.entries[1].t_f < rep.entries[0].t_f);
    // wrong kernel family is rejected
    CHECK_THROWS_AS(metastability_report(spec, KernelSpec::baseline(1.0), {2.0}, cfg, 11),
                    std::invalid_argument);
}

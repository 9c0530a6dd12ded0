#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "usaav/dynamics.hpp"
#include "usaav/maximizers.hpp"
#include "usaav/metrics.hpp"
#include "usaav/rng.hpp"

using namespace usaav;

namespace {
const double kE = std::exp(1.0);
}

TEST_CASE("rope orbit geometry") {
    SUBCASE("u in the fixed complement gives a constant path") {
        UnitVector u = UnitVector::basis(3, 2);
        OrbitPath p = rope_orbit(u, 2 * M_PI);
        for (double s : {0.1, 0.5, 0.9}) {
            UnitVector x = p.sample(s);
            CHECK(x[2] == doctest::Approx(1.0));
        }
    }
    SUBCASE("equatorial great circle at omega = 2 pi") {
        UnitVector u = UnitVector::basis(3, 0);
        OrbitPath p = rope_orbit(u, 2 * M_PI);
        for (double s : {0.25, 0.5, 0.75}) {
            UnitVector x = p.sample(s);
            CHECK(x[0] == doctest::Approx(std::cos(2 * M_PI * s)).epsilon(1e-12));
            CHECK(x[1] == doctest::Approx(-std::sin(2 * M_PI * s)).epsilon(1e-12));
            CHECK(std::abs(x[2]) < 1e-15);
        }
    }
    SUBCASE("latitude circle: polar angle is preserved") {
        double theta = 1.1;
        UnitVector u(Vec{std::sin(theta), 0.0, std::cos(theta)});
        OrbitPath p = rope_orbit(u, 2 * M_PI);
        Rng rng = Rng::keyed({71});
        for (int i = 0; i < 20; ++i) {
            UnitVector x = p.sample(rng.uniform_open());
            CHECK(x[2] == doctest::Approx(std::cos(theta)).epsilon(1e-13));
        }
    }
}

TEST_CASE("orbit maximizers saturate the ceiling") {
    Rng rng = Rng::keyed({72});
    for (double beta : {0.5, 1.0, 4.0}) {
        UnitVector u = rng.uniform_sphere(3);

        ParticleSystem rope_sys = sample_orbit(rope_orbit(u, 2 * M_PI), 3, 16, 4);
        Kernel rope(KernelSpec::rope(beta, 2 * M_PI));
        CHECK(std::abs(energy(rope_sys, rope) - energy_ceiling(beta)) < 1e-12);

        PhaseField psi = PhaseField::sinusoidal(1.0, 0.8, 2.0);
        ParticleSystem pf_sys = sample_orbit(phase_field_orbit(u, psi), 3, 64);
        Kernel pf(KernelSpec::phase_field(beta, psi));
        CHECK(std::abs(energy(pf_sys, pf) - energy_ceiling(beta)) < 1e-12);

        std::vector<UnitVector> targets;
        for (int i = 0; i < 32; ++i) targets.push_back(rng.uniform_sphere(3));
        ParticleSystem pr_sys = prompt_maximizer_system(prompt_gauge_family(targets, u), {}, u);
        Kernel prompt(KernelSpec::prompt_gauge(beta));
        CHECK(std::abs(energy(pr_sys, prompt) - energy_ceiling(beta)) < 1e-12);
    }
}

TEST_CASE("energy ceiling values") {
    CHECK(energy_ceiling(1.0) == doctest::Approx(1.359140914).epsilon(1e-9));
    CHECK(energy_ceiling(2.0) == doctest::Approx(std::exp(2.0) / 4.0).epsilon(1e-14));
    CHECK(energy_ceiling(1.0, 2.0) == doctest::Approx(kE).epsilon(1e-14));
    CHECK_THROWS_AS(energy_ceiling(0.0), std::invalid_argument);
}

TEST_CASE("phase field orbit special cases") {
    UnitVector u = UnitVector::basis(3, 0);
    SUBCASE("psi == 0 is the constant path") {
        PhaseField zero = PhaseField::from_function([](double) { return 0.0; });
        OrbitPath p = phase_field_orbit(u, zero);
        UnitVector x = p.sample(0.7);
        CHECK(x[0] == doctest::Approx(1.0));
    }
    SUBCASE("psi(s) = -2 pi s reproduces the rope orbit") {
        PhaseField lin = PhaseField::from_function([](double s) { return -2 * M_PI * s; });
        OrbitPath a = phase_field_orbit(u, lin);
        OrbitPath b = rope_orbit(u, 2 * M_PI);
        for (double s : {0.2, 0.4, 0.8}) {
            UnitVector xa = a.sample(s), xb = b.sample(s);
            for (int i = 0; i < 3; ++i) CHECK(xa[i] == doctest::Approx(xb[i]).epsilon(1e-13));
        }
    }
}

TEST_CASE("target phase field realizes prescribed laws") {
    SUBCASE("uniform law: psi(s) = 2 pi s") {
        PhaseField psi = target_phase_field([](double p) { return 2 * M_PI * p; });
        CHECK(psi(0.25) == doctest::Approx(M_PI / 2));
    }
    SUBCASE("Dirac law: constant quantile") {
        PhaseField psi = target_phase_field([](double) { return 1.2; });
        CHECK(psi(0.1) == 1.2);
        CHECK(psi(0.9) == 1.2);
    }
    SUBCASE("two equal atoms: 500/500 split of 1000 grid samples") {
        PhaseField psi = target_phase_field([](double p) { return p <= 0.5 ? 0.0 : M_PI; });
        UnitVector u = UnitVector::basis(3, 0);
        ParticleSystem sys = sample_orbit(phase_field_orbit(u, psi), 3, 1000);
        int at_zero = 0, at_pi = 0;
        for (int i = 0; i < sys.size(); ++i) {
            if (sys.state(i)[0] > 0.99) ++at_zero;
            if (sys.state(i)[0] < -0.99) ++at_pi;
        }
        CHECK(at_zero == 500);
        CHECK(at_pi == 500);
    }
    SUBCASE("decreasing quantile is rejected") {
        CHECK_THROWS_AS(target_phase_field([](double p) { return -p; }), std::invalid_argument);
    }
}

TEST_CASE("quantile-realized law matches the target in W1") {
    // nu = uniform on the circle arc [0, pi): quantile(p) = pi p.
    PhaseField psi = target_phase_field([](double p) { return M_PI * p; });
    UnitVector u = UnitVector::basis(3, 0);
    int n = 400;
    ParticleSystem sys = sample_orbit(phase_field_orbit(u, psi), 3, n);
    // direct arc samples at midpoints as the reference law
    Vec states(3 * n);
    std::vector<AuxLabel> labels(n, no_label());
    std::vector<AuxLabel> sys_labels(n, no_label());
    Vec sys_states(3 * n);
    for (int i = 0; i < n; ++i) {
        double a = M_PI * (i + 0.5) / n;
        states[3 * i] = std::cos(a);
        states[3 * i + 1] = std::sin(a);
        states[3 * i + 2] = 0.0;
        for (int c = 0; c < 3; ++c) sys_states[3 * i + c] = sys.state(i)[c];
    }
    ParticleSystem ref(3, std::move(states), std::move(labels));
    ParticleSystem plain(3, std::move(sys_states), std::move(sys_labels));
    CHECK(empirical_w1(plain, ref) < 2.0 * M_PI / n * 3);
}

TEST_CASE("prompt gauge family realizes targets and resists perturbation") {
    Rng rng = Rng::keyed({73});
    UnitVector u = rng.uniform_sphere(3);

    SUBCASE("G == u gives the Dirac output law") {
        std::vector<UnitVector> targets(8, u);
        auto gauges = prompt_gauge_family(targets, u);
        ParticleSystem sys = prompt_maximizer_system(gauges, {}, u);
        CHECK(collapse_gap(sys) < 1e-13);
    }
    SUBCASE("simplex targets are hit exactly") {
        std::vector<UnitVector> targets;
        targets.push_back(UnitVector(Vec{1, 0, 0}));
        targets.push_back(UnitVector(Vec{-0.5, std::sqrt(3.0) / 2, 0}));
        targets.push_back(UnitVector(Vec{-0.5, -std::sqrt(3.0) / 2, 0}));
        auto gauges = prompt_gauge_family(targets, u);
        ParticleSystem sys = prompt_maximizer_system(gauges, {}, u);
        for (int i = 0; i < 3; ++i)
            CHECK(geodesic_angle(sys.state_vector(i), targets[i]) < 1e-12);
    }
    SUBCASE("perturbing one particle off its target never increases energy") {
        std::vector<UnitVector> targets;
        for (int i = 0; i < 6; ++i) targets.push_back(rng.uniform_sphere(3));
        auto gauges = prompt_gauge_family(targets, u);
        ParticleSystem sys = prompt_maximizer_system(gauges, {}, u);
        Kernel k(KernelSpec::prompt_gauge(1.0));
        double e0 = energy(sys, k);
        for (int trial = 0; trial < 100; ++trial) {
            ParticleSystem pert = sys;
            int i = static_cast<int>(rng.next_u64() % sys.size());
            Vec noise = rng.gaussian_vec(3);
            project_tangent_inplace(sys.state(i), noise);
            for (int c = 0; c < 3; ++c)
                pert.mutable_states()[3 * i + c] += 1e-2 * noise[c];
            pert.renormalize();
            CHECK(energy(pert, k) <= e0 + 1e-12);
        }
    }
}

TEST_CASE("toeplitz max path") {
    SUBCASE("cosine kernel picks m* = 1 with path energy 1/4") {
        auto [m_star, path] = toeplitz_max_path({{1, 0.5}, {-1, 0.5}}, 3);
        CHECK(m_star == 1);
        ParticleSystem sys = sample_orbit(path, 3, 64);
        Kernel k(KernelSpec::toeplitz_linear({{1, 0.5}, {-1, 0.5}}));
        CHECK(std::abs(energy(sys, k) - 0.25) < 1e-10);
    }
    SUBCASE("dominant zero mode gives the constant path") {
        auto [m_star, path] = toeplitz_max_path({{0, 1.0}, {1, 0.2}, {-1, 0.2}}, 3);
        CHECK(m_star == 0);
        CHECK(path.kind == OrbitPath::Kind::Constant);
        UnitVector a = path.sample(0.2), b = path.sample(0.9);
        for (int i = 0; i < 3; ++i) CHECK(a[i] == b[i]);
    }
    SUBCASE("random coefficients: path beats random competitors") {
        Rng rng = Rng::keyed({74});
        std::map<int, double> coeffs;
        for (int m = 0; m <= 4; ++m) {
            double c = rng.uniform() * 2 - 1;
            coeffs[m] = c;
            if (m > 0) coeffs[-m] = c;
        }
        auto [m_star, path] = toeplitz_max_path(coeffs, 3);
        Kernel k(KernelSpec::toeplitz_linear(coeffs));
        int n = 32;
        double best = energy(sample_orbit(path, 3, n), k);
        for (int trial = 0; trial < 200; ++trial) {
            Vec states(3 * n);
            std::vector<AuxLabel> labels;
            for (int i = 0; i < n; ++i) {
                UnitVector x = rng.uniform_sphere(3);
                std::copy(x.coords().begin(), x.coords().end(), states.begin() + 3 * i);
                labels.push_back(position_label(static_cast<double>(i + 1) / n));
            }
            ParticleSystem competitor(3, std::move(states), std::move(labels));
            CHECK(energy(competitor, k) <= best + 1e-10);
        }
    }
}

namespace {

DiscreteJointLaw random_law(Rng& rng, int n_aux, int n_grid, int d) {
    DiscreteJointLaw law;
    Vec aw(n_aux);
    double total = 0.0;
    for (double& w : aw) {
        w = 0.1 + rng.uniform();
        total += w;
    }
    for (double& w : aw) w /= total;
    // exact renormalization so the sum is 1 within 1e-12
    double s = 0.0;
    for (int i = 0; i < n_aux - 1; ++i) s += aw[i];
    aw[n_aux - 1] = 1.0 - s;
    for (int a = 0; a < n_aux; ++a) {
        law.aux_points.push_back(position_label((a + 1.0) / n_aux));
        std::vector<UnitVector> grid;
        for (int g = 0; g < n_grid; ++g) grid.push_back(rng.uniform_sphere(d));
        law.grids.push_back(grid);
        Vec cw(n_grid);
        double ct = 0.0;
        for (double& w : cw) {
            w = rng.uniform();
            ct += w;
        }
        for (double& w : cw) w /= ct;
        double cs = 0.0;
        for (int i = 0; i < n_grid - 1; ++i) cs += cw[i];
        cw[n_grid - 1] = 1.0 - cs;
        law.conditional_weights.push_back(cw);
    }
    law.aux_weights = aw;
    return law;
}

// Exhaustive search over all Dirac assignments; returns the best energy and
// whether `assignment` is coordinate-wise maximal.
std::pair<double, bool> exhaustive_dirac(const DiscreteJointLaw& law, const Kernel& k,
                                         const std::vector<std::size_t>& assignment) {
    int n_aux = static_cast<int>(law.aux_points.size());
    std::vector<std::size_t> idx(n_aux, 0);
    double best = -HUGE_VAL;
    DiscreteJointLaw probe = law;
    auto set_dirac = [&](int a, std::size_t g) {
        Vec w(law.grids[a].size(), 0.0);
        w[g] = 1.0;
        probe.conditional_weights[a] = std::move(w);
    };
    for (;;) {
        for (int a = 0; a < n_aux; ++a) set_dirac(a, idx[a]);
        best = std::max(best, law_energy(probe, k));
        int a = 0;
        while (a < n_aux && ++idx[a] == law.grids[a].size()) idx[a++] = 0;
        if (a == n_aux) break;
    }
    // coordinate-wise maximality of `assignment`
    for (int a = 0; a < n_aux; ++a) set_dirac(a, assignment[a]);
    double e_fix = law_energy(probe, k);
    bool coordinate_max = true;
    for (int a = 0; a < n_aux && coordinate_max; ++a) {
        for (std::size_t g = 0; g < law.grids[a].size(); ++g) {
            set_dirac(a, g);
            if (law_energy(probe, k) > e_fix + 1e-12) {
                coordinate_max = false;
                break;
            }
        }
        set_dirac(a, assignment[a]);
    }
    return {best, coordinate_max};
}

std::vector<std::size_t> dirac_assignment(const DiscreteJointLaw& law) {
    std::vector<std::size_t> out;
    for (const Vec& w : law.conditional_weights) {
        std::size_t arg = 0;
        for (std::size_t g = 0; g < w.size(); ++g)
            if (w[g] == 1.0) arg = g;
        out.push_back(arg);
    }
    return out;
}

}  // namespace

TEST_CASE("diracize improves energy and reaches a coordinate-wise maximum") {
    Rng rng = Rng::keyed({75});
    Kernel k(KernelSpec::baseline(1.0));
    for (int trial = 0; trial < 20; ++trial) {
        DiscreteJointLaw law = random_law(rng, 3, 6, 3);
        double before = law_energy(law, k);
        DiscreteJointLaw out = diracize(law, k);
        double after = law_energy(out, k);
        CHECK(after >= before - 1e-12);
        auto [best, coord_max] = exhaustive_dirac(law, k, dirac_assignment(out));
        CHECK(coord_max);
        CHECK(after <= best + 1e-12);
    }
}

TEST_CASE("diracize on an already-Dirac law keeps the energy") {
    Rng rng = Rng::keyed({76});
    Kernel k(KernelSpec::baseline(1.0));
    DiscreteJointLaw law = random_law(rng, 2, 5, 3);
    DiscreteJointLaw once = diracize(law, k);
    DiscreteJointLaw twice = diracize(once, k);
    CHECK(law_energy(once, k) == doctest::Approx(law_energy(twice, k)).epsilon(1e-14));
    for (std::size_t a = 0; a < once.conditional_weights.size(); ++a)
        CHECK(once.conditional_weights[a] == twice.conditional_weights[a]);
}

TEST_CASE("diracize strictly improves uniform conditionals on antipodal grids") {
    DiscreteJointLaw law;
    law.aux_points = {position_label(0.5), position_label(1.0)};
    law.aux_weights = {0.5, 0.5};
    UnitVector p(Vec{1.0, 0.0}), m(Vec{-1.0, 0.0});
    law.grids = {{p, m}, {p, m}};
    law.conditional_weights = {{0.5, 0.5}, {0.5, 0.5}};
    Kernel k(KernelSpec::baseline(1.0));
    DiscreteJointLaw out = diracize(law, k);
    CHECK(law_energy(out, k) > law_energy(law, k) + 1e-3);
}

TEST_CASE("diracize rejects malformed laws") {
    DiscreteJointLaw law;
    Kernel k(KernelSpec::baseline(1.0));
    CHECK_THROWS_AS(diracize(law, k), std::invalid_argument);
    law.aux_points = {no_label()};
    law.aux_weights = {1.0};
    law.grids = {{}};
    law.conditional_weights = {{}};
    CHECK_THROWS_AS(diracize(law, k), std::invalid_argument);
}

TEST_CASE("projected gradient residual") {
    Rng rng = Rng::keyed({77});

    SUBCASE("rope orbit samples are first-order stationary") {
        UnitVector u = rng.uniform_sphere(3);
        ParticleSystem sys = sample_orbit(rope_orbit(u, 2 * M_PI), 3, 32);
        Kernel k(KernelSpec::rope(1.0, 2 * M_PI));
        CHECK(projected_gradient_residual(sys, k) < 1e-10);
    }
    SUBCASE("fully collapsed baseline state is stationary") {
        Vec states{0, 0, 1, 0, 0, 1};
        ParticleSystem sys(3, std::move(states), {no_label(), no_label()});
        Kernel k(KernelSpec::baseline(1.0));
        CHECK(projected_gradient_residual(sys, k) < 1e-14);
    }
    SUBCASE("generic random states are not stationary") {
        std::vector<AuxLabel> labels(8, no_label());
        Vec states;
        for (int i = 0; i < 8; ++i) {
            Vec x = rng.uniform_sphere(3).coords();
            states.insert(states.end(), x.begin(), x.end());
        }
        ParticleSystem sys(3, std::move(states), std::move(labels));
        Kernel k(KernelSpec::baseline(1.0));
        CHECK(projected_gradient_residual(sys, k) > 1e-6);
    }
}

TEST_CASE("sample_orbit uses the uniform grid with repeats") {
    UnitVector u = UnitVector::basis(3, 0);
    ParticleSystem sys = sample_orbit(rope_orbit(u, 2 * M_PI), 3, 4, 3);
    CHECK(sys.size() == 12);
    CHECK(position_of(sys.label(0)) == doctest::Approx(0.25));
    CHECK(position_of(sys.label(2)) == doctest::Approx(0.25));
    CHECK(position_of(sys.label(11)) == doctest::Approx(1.0));
    for (int i = 0; i < sys.size(); ++i)
        CHECK(std::abs(norm2(sys.state(i)) - 1.0) < 1e-12);
}

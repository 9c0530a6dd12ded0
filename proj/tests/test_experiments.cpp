#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "usaav/experiments.hpp"
#include "usaav/io.hpp"
#include "usaav/maximizers.hpp"
#include "usaav/metrics.hpp"
#include "usaav/rng.hpp"

using namespace usaav;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("usaav_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("config round trip and defaults") {
    ExperimentConfig cfg = ExperimentConfig::defaults("exp1");
    json j = cfg.to_json();
    ExperimentConfig back = ExperimentConfig::from_json(j);
    CHECK(back.scenario == "exp1");
    CHECK(back.models == cfg.models);
    CHECK(back.n_list == cfg.n_list);
    CHECK(back.sim.dt == cfg.sim.dt);
    CHECK(back.to_json() == j);
    cfg.validate();

    CHECK_THROWS_AS(ExperimentConfig::defaults("nope"), std::invalid_argument);

    ExperimentConfig bad = ExperimentConfig::defaults("exp1");
    bad.n_list = {63};  // not divisible by m_per_aux
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    ExperimentConfig dob = ExperimentConfig::defaults("dobrushin");
    dob.n_list = {64, 48};
    CHECK_THROWS_AS(dob.validate(), std::invalid_argument);
}

TEST_CASE("format_double round trips") {
    for (double v : {1.0 / 3.0, 2.718281828459045, 1e-300, 0.0, -17.25}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("csv write/read round trip") {
    fs::path dir = temp_dir("csv");
    TrajectoryRecord rec;
    MetricSet set;
    set.g_x = set.delta_e = true;
    for (int i = 0; i < 5; ++i) {
        rec.times.push_back(i * 0.5);
        rec.energy.push_back(1.0 + i / 7.0);
        rec.production.push_back(1e-3 / (i + 1));
        MetricRow row;
        row.g_x = 1.0 / (i + 2);
        row.delta_e = 1e-6 * i;
        rec.metrics.push_back(row);
    }
    write_trajectory_csv(dir / "t.csv", rec, TrajectoryColumns::from_metric_set(set));
    TrajectoryTable t = read_csv(dir / "t.csv");
    CHECK(t.header.size() == 5);
    CHECK(t.column("g_x") == 3);
    REQUIRE(t.rows.size() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(t.rows[i][0] == rec.times[i]);
        CHECK(t.rows[i][1] == rec.energy[i]);
        CHECK(t.rows[i][3] == rec.metrics[i].g_x);
    }
    fs::remove_all(dir);
}

TEST_CASE("exp1 initial clouds share the gauge frame across models") {
    ExperimentConfig cfg = ExperimentConfig::defaults("exp1");
    int n = 32;
    cfg.n_list = {n};
    ParticleSystem base = exp1_initial_system(cfg, "baseline", n, 3);
    ParticleSystem rope = exp1_initial_system(cfg, "rope", n, 3);
    ParticleSystem prompt = exp1_initial_system(cfg, "prompt", n, 3);

    Kernel rope_k(cfg.make_kernel("rope", cfg.beta));
    Kernel prompt_k(cfg.make_kernel("prompt", cfg.beta));
    for (int i = 0; i < n; ++i) {
        Vec q_rope = rope_k.gauge_frame(rope.state(i), rope.label(i));
        Vec q_prompt = prompt_k.gauge_frame(prompt.state(i), prompt.label(i));
        for (int c = 0; c < 3; ++c) {
            CHECK(q_rope[c] == doctest::Approx(base.state(i)[c]).epsilon(1e-13));
            CHECK(q_prompt[c] == doctest::Approx(base.state(i)[c]).epsilon(1e-13));
        }
    }
    // different seeds give different clouds
    ParticleSystem other = exp1_initial_system(cfg, "baseline", n, 4);
    bool differs = false;
    for (int i = 0; i < n && !differs; ++i)
        differs = std::abs(other.state(i)[0] - base.state(i)[0]) > 1e-12;
    CHECK(differs);
}

TEST_CASE("classification identifies the canonical shapes") {
    ClassifyThresholds t;
    Rng rng = Rng::keyed({91});

    SUBCASE("dirac") {
        Vec states;
        std::vector<AuxLabel> labels;
        for (int i = 0; i < 40; ++i) {
            UnitVector x = rng.uniform_cap(UnitVector::basis(3, 2), 1e-4);
            states.insert(states.end(), x.coords().begin(), x.coords().end());
            labels.push_back(position_label((i + 1.0) / 40));
        }
        ParticleSystem sys(3, std::move(states), std::move(labels));
        CHECK(classify_final_state(sys, t).kind == "dirac");
    }
    SUBCASE("great circle") {
        UnitVector u = UnitVector::basis(3, 0);
        ParticleSystem sys = sample_orbit(rope_orbit(u, 2 * M_PI), 3, 60);
        Classification c = classify_final_state(sys, t);
        CHECK(c.kind == "circle");
        CHECK(c.diagnostics["subtype"] == "great");
    }
    SUBCASE("latitude circle") {
        double theta = 0.9;
        UnitVector u(Vec{std::sin(theta), 0, std::cos(theta)});
        ParticleSystem sys = sample_orbit(rope_orbit(u, 2 * M_PI), 3, 60);
        Classification c = classify_final_state(sys, t);
        CHECK(c.kind == "circle");
        CHECK(c.diagnostics["subtype"] == "latitude");
    }
    SUBCASE("clusters against targets") {
        std::vector<UnitVector> targets = exp2_prompt_targets(3);
        UnitVector u = UnitVector::basis(3, 2);
        auto gauges = prompt_gauge_family(targets, u);
        Vec states;
        std::vector<AuxLabel> labels;
        for (int i = 0; i < 30; ++i) {
            int k = i % 3;
            UnitVector x = rng.uniform_cap(targets[k], 5e-3);
            states.insert(states.end(), x.coords().begin(), x.coords().end());
            labels.push_back(prompt_label(k, 0.0, gauges[k]));
        }
        ParticleSystem sys(3, std::move(states), std::move(labels));
        Classification c = classify_final_state(sys, t, targets);
        CHECK(c.kind == "clusters");
    }
    SUBCASE("uniform cloud is unclassified") {
        Vec states;
        std::vector<AuxLabel> labels;
        for (int i = 0; i < 60; ++i) {
            UnitVector x = rng.uniform_sphere(3);
            states.insert(states.end(), x.coords().begin(), x.coords().end());
            labels.push_back(position_label((i + 1.0) / 60));
        }
        ParticleSystem sys(3, std::move(states), std::move(labels));
        CHECK(classify_final_state(sys, t).kind == "unclassified");
    }
}

TEST_CASE("single run writes trajectory, final states, and a manifest") {
    fs::path dir = temp_dir("single");
    ExperimentConfig cfg = ExperimentConfig::defaults("single");
    cfg.n_list = {16};
    cfg.sim.t_final = 2.0;
    cfg.output_dir = dir.string();
    RunSummary s = run_single(cfg);
    CHECK(s.cells_run == 1);
    CHECK(fs::exists(dir / "runs/single_baseline_n16_s0/trajectory.csv"));
    CHECK(fs::exists(dir / "runs/single_baseline_n16_s0/final_states.csv"));
    json manifest = json::parse(read_text_file(s.manifest_path));
    CHECK(manifest.contains("config_hash"));
    CHECK(manifest["files"].size() == 2);
    TrajectoryTable t = read_csv(dir / "runs/single_baseline_n16_s0/trajectory.csv");
    CHECK(t.column("g_x") >= 0);
    fs::remove_all(dir);
}

TEST_CASE("exp1 at toy scale: aggregate matches recomputation, resume skips cells") {
    fs::path dir = temp_dir("exp1");
    ExperimentConfig cfg = ExperimentConfig::defaults("exp1");
    cfg.n_list = {16};
    cfg.seeds = 2;
    cfg.sim.t_final = 1.0;
    cfg.sim.snapshot_every = 0.5;
    cfg.output_dir = dir.string();
    RunSummary s1 = run_exp1(cfg);
    CHECK(s1.cells_run == 6);
    CHECK(s1.cells_skipped == 0);

    // aggregate must equal an independent recomputation from per-run CSVs
    std::vector<std::vector<std::string>> agg;
    {
        std::stringstream ss(read_text_file(dir / "aggregate.csv"));
        std::string line;
        while (std::getline(ss, line)) {
            std::vector<std::string> cells;
            std::stringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) cells.push_back(cell);
            agg.push_back(cells);
        }
    }
    REQUIRE(agg.size() > 1);
    CHECK(agg[0][3] == "g_x_mean");
    for (const std::string& model : cfg.models) {
        TrajectoryTable a = read_csv(dir / ("runs/exp1_" + model + "_n16_s0/trajectory.csv"));
        TrajectoryTable b = read_csv(dir / ("runs/exp1_" + model + "_n16_s1/trajectory.csv"));
        int ci = a.column("g_x");
        for (std::size_t r = 0; r < a.rows.size(); ++r) {
            double mean = 0.5 * (a.rows[r][ci] + b.rows[r][ci]);
            bool found = false;
            for (std::size_t row = 1; row < agg.size(); ++row)
                if (agg[row][0] == model && std::stod(agg[row][2]) == a.rows[r][0] &&
                    std::abs(std::stod(agg[row][3]) - mean) < 1e-12)
                    found = true;
            CHECK(found);
        }
    }

    // resume: a second invocation skips all cells
    RunSummary s2 = run_exp1(cfg);
    CHECK(s2.cells_run == 0);
    CHECK(s2.cells_skipped == 6);

    // deleting one cell's files re-runs exactly that cell, reproducing the
    // bytes recorded in the manifest
    json manifest = json::parse(read_text_file(s1.manifest_path));
    std::string rel = "runs/exp1_rope_n16_s1/trajectory.csv";
    std::string before = manifest["files"][rel].get<std::string>();
    fs::remove(dir / rel);
    RunSummary s3 = run_exp1(cfg);
    CHECK(s3.cells_run == 1);
    CHECK(s3.cells_skipped == 5);
    CHECK(file_checksum(dir / rel) == before);
    fs::remove_all(dir);
}

TEST_CASE("dobrushin toy run: w1 at t=0 matches a direct recomputation") {
    fs::path dir = temp_dir("dob");
    ExperimentConfig cfg = ExperimentConfig::defaults("dobrushin");
    cfg.n_list = {8, 16};
    cfg.n_max = 32;
    cfg.seeds = 2;
    cfg.t_horizon = 1.0;
    cfg.sim.t_final = 1.0;
    cfg.output_dir = dir.string();
    RunSummary s = run_dobrushin(cfg);
    CHECK(s.cells_run == 2);

    TrajectoryTable table = read_csv(dir / "dobrushin_table.csv");
    REQUIRE(table.rows.size() == 2);

    // independent recomputation of the t=0 W1 for one cell
    const std::uint64_t scen = fnv1a64("dobrushin", 9);
    int d = cfg.d, n = 8, factor = cfg.n_max / n;
    Vec master_states(static_cast<std::size_t>(cfg.n_max) * d);
    std::vector<AuxLabel> master_labels;
    for (int i = 0; i < cfg.n_max; ++i) {
        Rng rng = Rng::keyed({cfg.master_seed, scen, 0, static_cast<std::uint64_t>(i)});
        UnitVector x = rng.uniform_sphere(d);
        std::copy(x.coords().begin(), x.coords().end(),
                  master_states.begin() + static_cast<std::size_t>(i) * d);
        master_labels.push_back(position_label(rng.uniform_open()));
    }
    ParticleSystem full(d, Vec(master_states), std::vector<AuxLabel>(master_labels));
    Vec sub_states(master_states.begin(), master_states.begin() + n * d);
    std::vector<AuxLabel> sub_labels(master_labels.begin(), master_labels.begin() + n);
    Vec rep_states;
    std::vector<AuxLabel> rep_labels;
    for (int i = 0; i < n; ++i)
        for (int r = 0; r < factor; ++r) {
            rep_states.insert(rep_states.end(), sub_states.begin() + i * d,
                              sub_states.begin() + (i + 1) * d);
            rep_labels.push_back(sub_labels[i]);
        }
    ParticleSystem replicated(d, std::move(rep_states), std::move(rep_labels));
    double w1_expect = empirical_w1(replicated, full, false);

    TrajectoryTable cell = read_csv(dir / "runs/dobrushin_baseline_n8_s0/trajectory.csv");
    CHECK(cell.rows.front()[cell.column("w1")] == doctest::Approx(w1_expect).epsilon(1e-12));
    fs::remove_all(dir);
}

TEST_CASE("validate-config catches bad configs") {
    ExperimentConfig cfg = ExperimentConfig::defaults("exp2");
    cfg.validate();
    cfg.seeds = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "usaav/experiments.hpp"
#include "usaav/io.hpp"
#include "usaav/maximizers.hpp"
#include "usaav/rng.hpp"

using namespace usaav;
using nlohmann::json;

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<int> n;
    std::optional<double> beta;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<double> dt;
    std::optional<double> t_final;
    std::optional<std::string> model;
    std::optional<int> seeds;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON config file");
    cmd->add_option("--n", f.n, "particle count override");
    cmd->add_option("--beta", f.beta, "inverse temperature override");
    cmd->add_option("--seed", f.seed, "master seed override");
    cmd->add_option("--out", f.out, "output directory override");
    cmd->add_option("--dt", f.dt, "time step override");
    cmd->add_option("--t-final", f.t_final, "final time override");
    cmd->add_option("--model", f.model, "model/scenario override");
    cmd->add_option("--seeds", f.seeds, "number of random seeds override");
}

ExperimentConfig load_config(const std::string& scenario, const CommonFlags& f) {
    ExperimentConfig cfg;
    if (!f.config_path.empty()) {
        json j = json::parse(read_text_file(f.config_path));
        if (!j.contains("scenario")) j["scenario"] = scenario;
        cfg = ExperimentConfig::from_json(j);
        if (cfg.scenario != scenario && scenario != "any")
            throw std::invalid_argument("config scenario '" + cfg.scenario +
                                        "' does not match subcommand");
    } else {
        cfg = ExperimentConfig::defaults(scenario == "any" ? "single" : scenario);
    }
    if (f.n) cfg.n_list = {*f.n};
    if (f.beta) cfg.beta = *f.beta;
    if (f.seed) cfg.master_seed = *f.seed;
    if (f.out) cfg.output_dir = *f.out;
    if (f.dt) cfg.sim.dt = *f.dt;
    if (f.t_final) cfg.sim.t_final = *f.t_final;
    if (f.model) cfg.models = {*f.model};
    if (f.seeds) cfg.seeds = *f.seeds;
    return cfg;
}

int run_with_config(const std::string& scenario, const CommonFlags& flags) {
    ExperimentConfig cfg = load_config(scenario, flags);
    RunSummary s = run_scenario(cfg);
    std::cout << cfg.scenario << ": ran " << s.cells_run << " cell(s), skipped "
              << s.cells_skipped << "; manifest at " << s.manifest_path.string() << "\n";
    return 0;
}

int run_maximizer(const std::string& kind, int n, int d, double beta, double omega,
                  const std::string& out_dir) {
    std::filesystem::path dir(out_dir);
    UnitVector u = Rng::keyed({7, fnv1a64(kind.data(), kind.size())}).uniform_sphere(d);
    ParticleSystem sys = [&]() {
        if (kind == "rope") return sample_orbit(rope_orbit(u, omega), d, n);
        if (kind == "phase-field")
            return sample_orbit(phase_field_orbit(u, PhaseField::sinusoidal(1.0, 0.8, 2.0)), d, n);
        if (kind == "toeplitz") {
            std::map<int, double> coeffs{{1, 0.5}, {-1, 0.5}};
            return sample_orbit(toeplitz_max_path(coeffs, d).path, d, n);
        }
        if (kind == "prompt") {
            std::vector<UnitVector> targets;
            Rng rng = Rng::keyed({7, 2});
            for (int i = 0; i < n; ++i) targets.push_back(rng.uniform_sphere(d));
            return prompt_maximizer_system(prompt_gauge_family(targets, u), {}, u);
        }
        throw std::invalid_argument("maximizer kind must be rope|phase-field|toeplitz|prompt");
    }();

    KernelSpec spec = [&]() {
        if (kind == "rope") return KernelSpec::rope(beta, omega);
        if (kind == "phase-field")
            return KernelSpec::phase_field(beta, PhaseField::sinusoidal(1.0, 0.8, 2.0));
        if (kind == "toeplitz")
            return KernelSpec::toeplitz_linear({{1, 0.5}, {-1, 0.5}});
        return KernelSpec::prompt_gauge(beta);
    }();
    Kernel kernel(spec);
    double e = energy(sys, kernel);
    double ceiling = kernel_ceiling(spec);
    double residual = projected_gradient_residual(sys, kernel);

    write_final_states_csv(dir / "maximizer_states.csv", sys);
    json report{{"kind", kind},          {"n", n},
                {"d", d},                {"beta", beta},
                {"energy", e},           {"ceiling", ceiling},
                {"gap", ceiling - e},    {"projected_gradient_residual", residual}};
    write_text_file(dir / "maximizer_report.json", report.dump(2) + "\n");
    std::cout << report.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"USA-AV sphere dynamics simulator and analysis suite"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string max_kind = "rope";
    int max_n = 64, max_d = 3;
    double max_beta = 1.0, max_omega = 2.0 * M_PI;
    std::string max_out = "out/maximizer";
    std::string validate_path;

    CLI::App* sim = app.add_subcommand("simulate", "run a single simulation cell");
    add_common(sim, flags);
    CLI::App* exp1 = app.add_subcommand("exp1", "collapse-gap comparison across models");
    add_common(exp1, flags);
    CLI::App* exp2 = app.add_subcommand("exp2", "final-law classification across six kernels");
    add_common(exp2, flags);
    CLI::App* dob = app.add_subcommand("dobrushin", "nested-sample W1 convergence trend");
    add_common(dob, flags);
    CLI::App* met = app.add_subcommand("metastab", "clustered metastability sweep");
    add_common(met, flags);

    CLI::App* maxc = app.add_subcommand("maximizer", "emit a closed-form maximizer");
    maxc->add_option("--kind", max_kind, "rope|phase-field|toeplitz|prompt");
    maxc->add_option("--n", max_n, "sample count");
    maxc->add_option("--d", max_d, "dimension");
    maxc->add_option("--beta", max_beta, "inverse temperature");
    maxc->add_option("--omega", max_omega, "rotation rate");
    maxc->add_option("--out", max_out, "output directory");

    CLI::App* val = app.add_subcommand("validate-config", "check a config file");
    val->add_option("config", validate_path, "JSON config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed()) return run_with_config("single", flags);
        if (exp1->parsed()) return run_with_config("exp1", flags);
        if (exp2->parsed()) return run_with_config("exp2", flags);
        if (dob->parsed()) return run_with_config("dobrushin", flags);
        if (met->parsed()) return run_with_config("metastab", flags);
        if (maxc->parsed())
            return run_maximizer(max_kind, max_n, max_d, max_beta, max_omega, max_out);
        if (val->parsed()) {
            json j = json::parse(read_text_file(validate_path));
            ExperimentConfig cfg = ExperimentConfig::from_json(j);
            cfg.validate();
            std::cout << "config ok: scenario=" << cfg.scenario << "\n";
            return 0;
        }
    } catch (const NumericalError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

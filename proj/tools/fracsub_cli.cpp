#include "fracsub/errors.hpp"
#include "fracsub/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

int main(int argc, char** argv)
{
    CLI::App app{"Monte Carlo solver for time-fractional Cauchy problems"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out_path;
    std::string format = "csv";
    std::vector<std::string> overrides;
    std::string golden;
    bool regen = false;

    app.add_option("--config", config_path, "YAML config file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--threads", threads, "Worker threads");
    app.add_option("--out", out_path, "Output CSV path (default: stdout)");
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv"}));
    app.add_option("--set", overrides, "Override a config key, e.g. scheme.beta=0.3");

    const std::vector<std::pair<std::string, std::string>> verbs = {
        {"solve", "E[f(X^h at the grid clock)]"},
        {"density", "Monte Carlo density of the endpoint"},
        {"converge", "density error over an h ladder"},
        {"bounds-check", "two-sided bound sandwich of the reference density"},
        {"ctrw-demo", "rescaled CTRW against its subordinated limit"},
        {"residual", "fractional PDE residual of the reference density"},
        {"selftest", "golden-value and invariant suite"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : verbs) subs.push_back(app.add_subcommand(name, help));
    subs.back()->add_option("--golden", golden, "Golden file path");
    subs.back()->add_flag("--regen-golden", regen, "Recompute and rewrite the golden file first");

    CLI11_PARSE(app, argc, argv);

    try {
        fracsub::ExperimentConfig cfg = config_path.empty() ? fracsub::ExperimentConfig{} : fracsub::load_config(config_path);
        for (auto* sub : subs)
            if (sub->parsed()) cfg.kind = fracsub::parse_experiment_kind(sub->get_name());
        for (const auto& o : overrides) fracsub::apply_override(cfg, o);
        if (seed) cfg.scheme.seed = *seed;
        if (threads) cfg.threads = *threads;
        if (!out_path.empty()) cfg.out = out_path;
        if (!golden.empty()) cfg.golden_path = golden;
        cfg.finalize();

        if (cfg.out.empty()) return fracsub::run_experiment(cfg, std::cout, regen);
        std::ofstream out(cfg.out);
        if (!out) throw fracsub::ConfigError("cannot write '" + cfg.out + "'");
        return fracsub::run_experiment(cfg, out, regen);
    } catch (const fracsub::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

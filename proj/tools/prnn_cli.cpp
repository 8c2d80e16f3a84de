// prnn: experiment driver for the diffractively coupled photonic reservoir.
//
//   prnn mg    [--config f] [--out dir] [--downsample k]
//   prnn doe   [--config f] [--out dir] [--seed s]
//   prnn train [--config f] [--out dir] [--seed s] [--downsample k] [--plot]
//   prnn sweep [--config f] [--out dir] [--workers w] [--downsample k]
//
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include "prnn/errors.hpp"
#include "prnn/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> workers;
    std::optional<std::size_t> downsample;
    bool plot = false;
};

prnn::ExperimentConfig resolve(const Overrides& o) {
    prnn::ExperimentConfig cfg = o.config_path.empty() ? prnn::ExperimentConfig{} : prnn::load_config(o.config_path);
    if (o.seed) cfg = cfg.with_seed(*o.seed);
    if (o.out) cfg.output_dir = *o.out;
    if (o.workers) cfg.workers = *o.workers;
    if (o.downsample) cfg.data.downsample = *o.downsample;
    if (o.plot) cfg.plot = true;
    cfg.validate();
    return cfg;
}

void list(const std::vector<std::filesystem::path>& files) {
    for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Photonic recurrent network simulator with Boolean-readout reinforcement learning"};
    app.require_subcommand(1);
    Overrides o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "INI experiment config")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "base seed for every random component");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--workers", o.workers, "concurrent sweep runs");
        sub->add_option("--downsample", o.downsample, "keep every k-th Mackey-Glass sample");
        sub->add_flag("--plot", o.plot, "also emit SVG plots");
    };
    auto* mg = app.add_subcommand("mg", "write the Mackey-Glass drive series");
    auto* doe = app.add_subcommand("doe", "write the coupling matrix and its heterogeneity statistics");
    auto* train = app.add_subcommand("train", "train the Boolean readout and evaluate on held-out data");
    auto* sweep = app.add_subcommand("sweep", "one run per (mu, beta, gamma, seed) grid point");
    for (auto* sub : {mg, doe, train, sweep}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const auto cfg = resolve(o);
        if (mg->parsed()) {
            list(prnn::cmd_mg(cfg));
        } else if (doe->parsed()) {
            list(prnn::cmd_doe(cfg));
        } else if (train->parsed()) {
            prnn::RunSummary s;
            list(prnn::cmd_train(cfg, &s));
            std::cout << "config " << s.config_hash << "  train eps " << s.epsilon_train << "  test eps "
                      << s.epsilon_test << "  iterations " << s.iterations << "  alpha " << s.alpha << "  wall "
                      << s.wall_seconds << " s\n";
        } else if (sweep->parsed()) {
            std::vector<prnn::SweepRow> rows;
            list(prnn::cmd_sweep(cfg, &rows));
            for (const auto& r : rows)
                std::cout << "mu " << r.mu << " beta " << r.beta << " gamma " << r.gamma << " seed " << r.seed
                          << "  train eps " << r.epsilon_train << "  test eps " << r.epsilon_test << '\n';
        }
    } catch (const prnn::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

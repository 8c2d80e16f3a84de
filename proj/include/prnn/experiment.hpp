#pragma once

// End-to-end runs: drive signal -> topology -> network -> greedy learning ->
// held-out evaluation, and the artifact writers behind the CLI subcommands.

#include "prnn/config.hpp"
#include "prnn/learning.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace prnn {

struct RunSummary {
    std::string config_hash;
    std::uint64_t seed = 0;
    double epsilon_train = 0.0;
    double epsilon_test = 0.0;
    std::size_t iterations = 0;
    double alpha = 1.0;
    double wall_seconds = 0.0; ///< reported on stdout only; not part of any artifact
};

struct Checkpoint {
    std::size_t k = 0;
    double epsilon_train = 0.0;
    double epsilon_test = 0.0;
};

struct PredictionRow {
    std::size_t n = 0;
    double u = 0.0;
    double y_target = 0.0;
    double y_out_raw = 0.0;
    double y_out_normalized = 0.0;
    double abs_error = 0.0;
    bool test = false;
};

struct RunResult {
    RunSummary summary;
    LearningRecord record;
    std::vector<Checkpoint> checkpoints;
    std::vector<PredictionRow> predictions; ///< scored training window followed by the test window
};

/// Mackey-Glass series long enough for the configured train/test split,
/// after downsampling.
TimeSeries build_drive_series(const ExperimentConfig& config);

/// Coupling matrix for the configured topology, normalized per config.
CouplingMatrix build_topology(const ExperimentConfig& config);

/// Network parameters (phases, injection weights, gains). Alpha is
/// calibrated on `probe` when the config asks for it.
RnnConfig build_network(const ExperimentConfig& config, std::shared_ptr<const CouplingMatrix> coupling,
                        const TimeSeries& probe);

/// Full train/test run for config.seeds.
RunResult run_experiment(const ExperimentConfig& config);

// Subcommands. Each writes into config.output_dir and returns the files written.
std::vector<std::filesystem::path> cmd_mg(const ExperimentConfig& config);
std::vector<std::filesystem::path> cmd_doe(const ExperimentConfig& config);
std::vector<std::filesystem::path> cmd_train(const ExperimentConfig& config, RunSummary* summary = nullptr);

struct SweepRow {
    double mu = 0.0, beta = 0.0, gamma = 0.0;
    std::uint64_t seed = 0;
    double epsilon_train = 0.0, epsilon_test = 0.0;
};

/// One run per (mu, beta, gamma, seed) grid point; rows come back in grid
/// order whatever the worker count.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config);
std::vector<std::filesystem::path> cmd_sweep(const ExperimentConfig& config, std::vector<SweepRow>* rows = nullptr);

} // namespace prnn

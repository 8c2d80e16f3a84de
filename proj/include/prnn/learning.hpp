#pragma once

// Biased greedy learning of Boolean readout weights and its error pipeline.

#include "prnn/mackey_glass.hpp"
#include "prnn/network.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace prnn {

/// Learning bias W^bias. Every update adds 1/N to all entries and resets the
/// flipped entry to 0. Entries are kept as (initial value, tick count) so an
/// entry reset m updates ago is exactly m / N.
class BiasVector {
public:
    BiasVector() = default;
    explicit BiasVector(std::vector<double> initial);

    std::size_t size() const { return initial_.size(); }
    double operator[](std::size_t i) const;
    /// True once entry i has been reset by an update.
    bool touched(std::size_t i) const { return touched_[i] != 0; }
    /// Updates since entry i was last reset (or since construction).
    std::uint64_t ticks(std::size_t i) const { return ticks_[i]; }
    std::vector<double> values() const;

    void update(std::size_t flipped);

private:
    std::vector<double> initial_;
    std::vector<std::uint64_t> ticks_;
    std::vector<std::uint8_t> touched_;
};

using LearnerEngine = std::mt19937_64;

/// argmax_i r_i b_i with r ~ U[0, 1)^N; ties go to the lowest index.
/// Throws DegenerateBias if every entry is zero.
std::size_t select_index(const BiasVector& bias, LearnerEngine& rng);

/// Copy of `weights` with bit `index` inverted.
BooleanWeights flip(const BooleanWeights& weights, std::size_t index);

/// Functional form of BiasVector::update.
BiasVector update_bias(const BiasVector& bias, std::size_t flipped, std::size_t n_nodes);

/// Drops the first `discard` samples and returns -(y - mean) / std over the rest.
/// Throws DegenerateOutput for a constant window.
TimeSeries postprocess_output(const TimeSeries& y, std::size_t discard);

/// Population standard deviation of target - prediction.
double nmse(const TimeSeries& target, const TimeSeries& prediction);

struct Evaluation {
    double epsilon = std::numeric_limits<double>::infinity();
    bool degenerate = true;
};

/// readout -> postprocess_output -> nmse. `target` is aligned with the
/// trajectory and is scored from index `discard` on. A constant readout
/// yields the +inf sentinel with degenerate set.
Evaluation evaluate_candidate(const Trajectory& trajectory, const BooleanWeights& weights,
                              const TimeSeries& target, std::size_t discard, double delta = 1.0);

/// Running readout sum over the scored window, updated one node at a time.
class ReadoutCache {
public:
    ReadoutCache(const Trajectory& trajectory, const TimeSeries& target, std::size_t discard);

    void reset(const BooleanWeights& weights);
    /// Adds or removes node i's trace according to its new bit.
    void apply_flip(std::size_t i, bool new_value);
    Evaluation evaluate() const;

private:
    std::size_t window_ = 0;
    // Fixed point (see kTraceScale), so the running sum is exact and independent of flip order.
    std::vector<std::int64_t> traces_; // node-major, scored window only, 1 - x
    std::vector<double> target_;
    std::vector<std::int64_t> sum_;
    std::size_t active_ = 0;
};

struct LearnerConfig {
    std::size_t max_iterations = 5000;
    std::uint64_t seed = 1;
    std::size_t discard = 30;
    bool strict_improvement = true;
    double delta = 1.0;

    void validate() const;
};

struct LearningRow {
    std::size_t k = 0;
    std::size_t flipped_index = 0;
    double epsilon_candidate = 0.0;
    double epsilon_accepted = 0.0;
    bool accepted = false;
};

struct LearningRecord {
    double initial_epsilon = std::numeric_limits<double>::infinity();
    BooleanWeights initial_weights;
    std::vector<LearningRow> rows;
    BooleanWeights final_weights;
    BiasVector final_bias;

    double final_epsilon() const { return rows.empty() ? initial_epsilon : rows.back().epsilon_accepted; }
};

/// State after iteration k, for observers (checkpoints, invariant checks).
struct IterationView {
    const LearningRow& row;
    const BooleanWeights& weights;
    const BiasVector& bias;
};
using IterationObserver = std::function<void(const IterationView&)>;

/// Greedy learning on a fixed trajectory. Weights start Bernoulli(0.5) and the
/// bias U[0, 1); the initial configuration is scored once before the loop.
/// Each iteration selects, flips, scores and keeps the flip only if it lowers
/// the error; the bias is updated every iteration.
LearningRecord greedy_train(const Trajectory& trajectory, const TimeSeries& target, const LearnerConfig& config,
                            const IterationObserver& observer = {});

/// Variant for noisy dynamics: `sample(k)` returns a fresh trajectory for
/// iteration k (k = 0 scores the initial weights), so nothing is cached.
LearningRecord greedy_train_resampled(const std::function<Trajectory(std::size_t)>& sample,
                                      const TimeSeries& target, const LearnerConfig& config,
                                      const IterationObserver& observer = {});

struct OracleResult {
    BooleanWeights weights;
    double epsilon = std::numeric_limits<double>::infinity();
};

inline constexpr std::size_t kOracleMaxNodes = 20;

/// Scores all 2^N weight vectors (bit i of the enumeration index is w_i) and
/// returns the minimum, lowest index on ties. Throws InvalidArgument for N > 20.
OracleResult exhaustive_oracle(const Trajectory& trajectory, const TimeSeries& target, std::size_t discard,
                               bool reverse_order = false);

/// True if no single flip of `weights` strictly lowers the error.
bool is_one_flip_optimal(const Trajectory& trajectory, const BooleanWeights& weights, const TimeSeries& target,
                         std::size_t discard);

/// CSV `k,flipped_index,epsilon_candidate,epsilon_accepted,accepted`.
void write_learning_csv(std::ostream& out, const LearningRecord& record,
                        const std::vector<std::string>& metadata = {});

} // namespace prnn

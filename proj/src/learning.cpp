#include "prnn/learning.hpp"

#include "prnn/csv.hpp"
#include "prnn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>

namespace prnn {

BiasVector::BiasVector(std::vector<double> initial)
    : initial_(std::move(initial)), ticks_(initial_.size(), 0), touched_(initial_.size(), 0) {
    for (double v : initial_)
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("bias: entries must be finite and >= 0");
}

double BiasVector::operator[](std::size_t i) const {
    const double step = static_cast<double>(ticks_[i]) / static_cast<double>(initial_.size());
    return touched_[i] ? step : initial_[i] + step;
}

std::vector<double> BiasVector::values() const {
    std::vector<double> v(size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (*this)[i];
    return v;
}

void BiasVector::update(std::size_t flipped) {
    if (flipped >= size()) throw InvalidArgument("bias update: index out of range");
    for (auto& t : ticks_) ++t;
    ticks_[flipped] = 0;
    touched_[flipped] = 1;
}

std::size_t select_index(const BiasVector& bias, LearnerEngine& rng) {
    if (bias.size() == 0) throw DegenerateBias("select_index: empty bias");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::size_t best = 0;
    double best_val = -1.0;
    bool any_positive = false;
    for (std::size_t i = 0; i < bias.size(); ++i) {
        const double b = bias[i];
        any_positive = any_positive || b > 0.0;
        const double v = unif(rng) * b;
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    if (!any_positive) throw DegenerateBias("select_index: all bias entries are zero");
    return best;
}

BooleanWeights flip(const BooleanWeights& weights, std::size_t index) {
    if (index >= weights.size()) throw InvalidArgument("flip: index out of range");
    BooleanWeights out = weights;
    out.set(index, !weights[index]);
    return out;
}

BiasVector update_bias(const BiasVector& bias, std::size_t flipped, std::size_t n_nodes) {
    if (n_nodes != bias.size()) throw InvalidArgument("update_bias: node count differs from bias length");
    BiasVector out = bias;
    out.update(flipped);
    return out;
}

TimeSeries postprocess_output(const TimeSeries& y, std::size_t discard) {
    if (y.size() <= discard) throw InvalidArgument("postprocess_output: series not longer than discard");
    std::span<const double> kept(y.values.data() + discard, y.size() - discard);
    const double m = mean_of(kept);
    const double s = pstd_of(kept);
    if (!(s > 0.0)) throw DegenerateOutput("postprocess_output: constant readout");
    std::vector<double> out(kept.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = -(kept[i] - m) / s;
    return TimeSeries(std::move(out), y.dt_effective);
}

double nmse(const TimeSeries& target, const TimeSeries& prediction) {
    if (target.size() != prediction.size()) throw InvalidArgument("nmse: length mismatch");
    if (target.empty()) throw InvalidArgument("nmse: empty series");
    std::vector<double> diff(target.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = target[i] - prediction[i];
    return pstd_of(diff);
}

namespace {

// Readout-plane values are accumulated as integers scaled by 2^47: every evaluation path
// (incremental cache, full recompute, exhaustive search) then sees the very same sums.
constexpr double kTraceScale = 140737488355328.0;
constexpr std::size_t kMaxFixedNodes = 65536; // N * 2^47 must fit in int64

std::int64_t to_fixed(double v) { return std::llround(v * kTraceScale); }

void check_fixed_capacity(std::size_t n) {
    if (n > kMaxFixedNodes) throw InvalidArgument("readout: too many nodes for exact accumulation");
}

std::vector<std::int64_t> fixed_traces(const Trajectory& trajectory, std::size_t discard, std::size_t window) {
    const std::size_t n = trajectory.n_nodes();
    check_fixed_capacity(n);
    std::vector<std::int64_t> traces(n * window);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < window; ++t)
            traces[i * window + t] = to_fixed(trajectory.readout_plane(discard + t, i));
    return traces;
}

// epsilon = std(target - (-(y - m) / s)); the readout scale cancels, so y is taken in trace units.
Evaluation score_sums(std::span<const std::int64_t> sum, std::span<const double> target) {
    std::vector<double> y(sum.size());
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = static_cast<double>(sum[t]);
    const double m = mean_of(y);
    const double s = pstd_of(y);
    if (!(s > 0.0)) return {};
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = target[t] + (y[t] - m) / s;
    return {pstd_of(y), false};
}

} // namespace

Evaluation evaluate_candidate(const Trajectory& trajectory, const BooleanWeights& weights,
                              const TimeSeries& target, std::size_t discard, double delta) {
    if (target.size() != trajectory.length())
        throw InvalidArgument("evaluate_candidate: target and trajectory lengths differ");
    if (weights.size() != trajectory.n_nodes())
        throw InvalidArgument("evaluate_candidate: weight length differs from node count");
    if (trajectory.length() <= discard) throw InvalidArgument("evaluate_candidate: trajectory not longer than discard");
    if (!(delta > 0.0)) throw InvalidArgument("evaluate_candidate: delta must be > 0");
    check_fixed_capacity(trajectory.n_nodes());
    const std::size_t window = trajectory.length() - discard;
    std::vector<std::int64_t> sum(window, 0);
    bool any = false;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!weights[i]) continue;
        any = true;
        for (std::size_t t = 0; t < window; ++t) sum[t] += to_fixed(trajectory.readout_plane(discard + t, i));
    }
    if (!any) return {};
    return score_sums(sum, std::span<const double>(target.values).subspan(discard));
}

ReadoutCache::ReadoutCache(const Trajectory& trajectory, const TimeSeries& target, std::size_t discard) {
    if (target.size() != trajectory.length())
        throw InvalidArgument("readout cache: target and trajectory lengths differ");
    if (trajectory.length() <= discard) throw InvalidArgument("readout cache: trajectory not longer than discard");
    window_ = trajectory.length() - discard;
    traces_ = fixed_traces(trajectory, discard, window_);
    target_.assign(target.values.begin() + static_cast<std::ptrdiff_t>(discard), target.values.end());
    sum_.assign(window_, 0);
}

void ReadoutCache::reset(const BooleanWeights& weights) {
    std::fill(sum_.begin(), sum_.end(), 0);
    active_ = 0;
    const std::size_t n = traces_.size() / window_;
    if (weights.size() != n) throw InvalidArgument("readout cache: weight length differs from node count");
    for (std::size_t i = 0; i < n; ++i)
        if (weights[i]) apply_flip(i, true);
}

void ReadoutCache::apply_flip(std::size_t i, bool new_value) {
    const std::int64_t* trace = traces_.data() + i * window_;
    if (new_value) {
        for (std::size_t t = 0; t < window_; ++t) sum_[t] += trace[t];
        ++active_;
    } else {
        for (std::size_t t = 0; t < window_; ++t) sum_[t] -= trace[t];
        --active_;
    }
}

Evaluation ReadoutCache::evaluate() const {
    if (active_ == 0) return {};
    return score_sums(sum_, target_);
}

void LearnerConfig::validate() const {
    if (max_iterations < 1) throw InvalidArgument("learner: max_iterations must be >= 1");
    if (!(delta > 0.0)) throw InvalidArgument("learner: delta must be > 0");
}

namespace {

struct LearnerStart {
    BooleanWeights weights;
    BiasVector bias;
};

LearnerStart random_start(std::size_t n, LearnerEngine& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = unif(rng) < 0.5 ? 1 : 0;
    std::vector<double> bias(n);
    for (auto& b : bias) b = unif(rng);
    return {BooleanWeights(std::move(bits)), BiasVector(std::move(bias))};
}

bool improves(const LearnerConfig& config, const Evaluation& candidate, double accepted) {
    if (candidate.degenerate) return false;
    return config.strict_improvement ? candidate.epsilon < accepted : candidate.epsilon <= accepted;
}

} // namespace

LearningRecord greedy_train(const Trajectory& trajectory, const TimeSeries& target, const LearnerConfig& config,
                            const IterationObserver& observer) {
    config.validate();
    const std::size_t n = trajectory.n_nodes();
    LearnerEngine rng(config.seed);
    auto [weights, bias] = random_start(n, rng);

    ReadoutCache cache(trajectory, target, config.discard);
    cache.reset(weights);

    LearningRecord record;
    record.initial_weights = weights;
    record.initial_epsilon = cache.evaluate().epsilon;
    record.rows.reserve(config.max_iterations);
    double accepted = record.initial_epsilon;

    for (std::size_t k = 1; k <= config.max_iterations; ++k) {
        const std::size_t l = select_index(bias, rng);
        const bool new_bit = !weights[l];
        cache.apply_flip(l, new_bit);
        const Evaluation candidate = cache.evaluate();

        LearningRow row{k, l, candidate.epsilon, accepted, false};
        if (improves(config, candidate, accepted)) {
            weights.set(l, new_bit);
            accepted = candidate.epsilon;
            row.epsilon_accepted = accepted;
            row.accepted = true;
        } else {
            cache.apply_flip(l, !new_bit);
        }
        bias.update(l);
        record.rows.push_back(row);
        if (observer) observer({record.rows.back(), weights, bias});
    }
    record.final_weights = std::move(weights);
    record.final_bias = std::move(bias);
    return record;
}

LearningRecord greedy_train_resampled(const std::function<Trajectory(std::size_t)>& sample,
                                      const TimeSeries& target, const LearnerConfig& config,
                                      const IterationObserver& observer) {
    config.validate();
    Trajectory first = sample(0);
    const std::size_t n = first.n_nodes();
    LearnerEngine rng(config.seed);
    auto [weights, bias] = random_start(n, rng);

    LearningRecord record;
    record.initial_weights = weights;
    record.initial_epsilon = evaluate_candidate(first, weights, target, config.discard, config.delta).epsilon;
    double accepted = record.initial_epsilon;

    for (std::size_t k = 1; k <= config.max_iterations; ++k) {
        const std::size_t l = select_index(bias, rng);
        const BooleanWeights candidate_weights = flip(weights, l);
        const Evaluation candidate =
            evaluate_candidate(sample(k), candidate_weights, target, config.discard, config.delta);
        LearningRow row{k, l, candidate.epsilon, accepted, false};
        if (improves(config, candidate, accepted)) {
            weights = candidate_weights;
            accepted = candidate.epsilon;
            row.epsilon_accepted = accepted;
            row.accepted = true;
        }
        bias.update(l);
        record.rows.push_back(row);
        if (observer) observer({record.rows.back(), weights, bias});
    }
    record.final_weights = std::move(weights);
    record.final_bias = std::move(bias);
    return record;
}

OracleResult exhaustive_oracle(const Trajectory& trajectory, const TimeSeries& target, std::size_t discard,
                               bool reverse_order) {
    const std::size_t n = trajectory.n_nodes();
    if (n > kOracleMaxNodes) throw InvalidArgument("exhaustive_oracle: more than 20 nodes");
    if (target.size() != trajectory.length()) throw InvalidArgument("exhaustive_oracle: length mismatch");
    if (trajectory.length() <= discard) throw InvalidArgument("exhaustive_oracle: trajectory not longer than discard");

    const std::size_t window = trajectory.length() - discard;
    const std::vector<std::int64_t> traces = fixed_traces(trajectory, discard, window);
    const std::span<const double> tgt = std::span<const double>(target.values).subspan(discard);

    const std::uint64_t total = std::uint64_t{1} << n;
    std::uint64_t best_idx = 0;
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::int64_t> sum(window);
    for (std::uint64_t step = 0; step < total; ++step) {
        const std::uint64_t idx = reverse_order ? total - 1 - step : step;
        double eps = std::numeric_limits<double>::infinity();
        if (idx != 0) {
            std::fill(sum.begin(), sum.end(), 0);
            for (std::size_t i = 0; i < n; ++i) {
                if (!((idx >> i) & 1u)) continue;
                const std::int64_t* tr = traces.data() + i * window;
                for (std::size_t t = 0; t < window; ++t) sum[t] += tr[t];
            }
            const Evaluation e = score_sums(sum, tgt);
            if (!e.degenerate) eps = e.epsilon;
        }
        if (eps < best || (eps == best && idx < best_idx)) {
            best = eps;
            best_idx = idx;
        }
    }
    std::vector<std::uint8_t> bits(n);
    for (std::size_t i = 0; i < n; ++i) bits[i] = (best_idx >> i) & 1u;
    return {BooleanWeights(std::move(bits)), best};
}

bool is_one_flip_optimal(const Trajectory& trajectory, const BooleanWeights& weights, const TimeSeries& target,
                         std::size_t discard) {
    const double base = evaluate_candidate(trajectory, weights, target, discard).epsilon;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const Evaluation e = evaluate_candidate(trajectory, flip(weights, i), target, discard);
        if (!e.degenerate && e.epsilon < base) return false;
    }
    return true;
}

void write_learning_csv(std::ostream& out, const LearningRecord& record, const std::vector<std::string>& metadata) {
    for (const auto& line : metadata) out << "# " << line << '\n';
    out << "k,flipped_index,epsilon_candidate,epsilon_accepted,accepted\n";
    for (const auto& r : record.rows)
        out << r.k << ',' << r.flipped_index << ',' << csv::num(r.epsilon_candidate) << ','
            << csv::num(r.epsilon_accepted) << ',' << (r.accepted ? 1 : 0) << '\n';
    if (!out) throw IoError("failed writing learning CSV");
}

} // namespace prnn

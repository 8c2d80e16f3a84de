#pragma once

// Mackey-Glass drive signal: generation, conditioning and train/test split.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace prnn {

/// Delay-differential equation dx/dt = a x(t-tau) / (1 + x(t-tau)^p) - b x(t).
/// Defaults are the usual chaotic benchmark set.
struct MGParams {
    double a = 0.2;
    double b = 0.1;
    double p = 10.0;
    double tau = 17.0;
    double dt = 0.1;
    double x0 = 1.2;

    /// Throws InvalidArgument if dt <= 0, tau < 0, p < 1 or tau is not a multiple of dt.
    void validate() const;
    /// Number of integration steps spanned by the delay.
    std::size_t delay_steps() const;
};

inline constexpr std::size_t kDefaultBurnIn = 10000;

/// Sampled scalar signal. dt_effective is the spacing after any downsampling.
struct TimeSeries {
    std::vector<double> values;
    double dt_effective = 1.0;

    TimeSeries() = default;
    TimeSeries(std::vector<double> v, double dt) : values(std::move(v)), dt_effective(dt) {}

    std::size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
    double operator[](std::size_t i) const { return values[i]; }

    /// Non-empty and all samples finite.
    void validate() const;
};

/// Fixed-step RK4. The delayed term at half steps is taken from the cubic
/// Hermite interpolant of the stored solution and its derivative; history
/// before t = 0 is the constant x0. Sample k of the result is x((burn_in + k) dt).
TimeSeries integrate_mg(const MGParams& params, std::size_t n_samples,
                        std::size_t burn_in = kDefaultBurnIn);

/// Keeps samples 0, factor, 2 factor, ...
TimeSeries downsample(const TimeSeries& series, std::size_t factor);

struct Standardized {
    TimeSeries series;
    double mean = 0.0;
    double std = 1.0;
};

/// Population mean and standard deviation.
double mean_of(std::span<const double> xs);
double pstd_of(std::span<const double> xs);

/// Zero mean, unit population std. Throws DegenerateSignal for zero variance.
Standardized standardize(const TimeSeries& series);
/// Applies a previously fitted (mean, std) transform.
TimeSeries apply_standardization(const TimeSeries& series, double mean, double std);

/// One-step-ahead prediction pairs (u(n+1), u(n+2)).
///
/// The training segment holds discard + train_len inputs; only the last
/// train_len outputs are scored. The test segment follows immediately, so a
/// network driven through train then test inputs runs as one continuous sequence.
struct PredictionPairs {
    TimeSeries train_inputs;
    TimeSeries train_targets;
    TimeSeries test_inputs;
    TimeSeries test_targets;
    std::size_t discard = 0;

    /// train_inputs followed by test_inputs.
    TimeSeries all_inputs() const;
    std::size_t train_len() const { return train_inputs.size() - discard; }
};

/// Series length needed by make_prediction_pairs.
constexpr std::size_t required_length(std::size_t train_len, std::size_t discard,
                                      std::size_t test_len) {
    return discard + train_len + test_len + 1;
}

PredictionPairs make_prediction_pairs(const TimeSeries& series, std::size_t train_len,
                                      std::size_t discard, std::size_t test_len);

/// CSV with header `n,value`. Metadata lines are written first, each prefixed with `# `.
void write_series_csv(std::ostream& out, const TimeSeries& series,
                      const std::vector<std::string>& metadata = {});
TimeSeries read_series_csv(std::istream& in);

} // namespace prnn

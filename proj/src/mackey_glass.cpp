#include "prnn/mackey_glass.hpp"

#include "prnn/csv.hpp"
#include "prnn/errors.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace prnn {

namespace csv {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InvalidArgument("not a number: '" + std::string(s) + "'");
    return v;
}

long long parse_int(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InvalidArgument("not an integer: '" + std::string(s) + "'");
    return v;
}

} // namespace csv

void MGParams::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("MG: dt must be > 0");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw InvalidArgument("MG: tau must be >= 0");
    if (!(p >= 1.0)) throw InvalidArgument("MG: p must be >= 1");
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(x0))
        throw InvalidArgument("MG: a, b, x0 must be finite");
    const double steps = tau / dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
        throw InvalidArgument("MG: tau must be an integer multiple of dt");
}

std::size_t MGParams::delay_steps() const {
    return static_cast<std::size_t>(std::llround(tau / dt));
}

void TimeSeries::validate() const {
    if (values.empty()) throw InvalidArgument("time series is empty");
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidArgument("time series has a non-finite sample");
}

namespace {

struct MGRhs {
    double a, b, p;
    double operator()(double x, double delayed) const {
        return a * delayed / (1.0 + std::pow(delayed, p)) - b * x;
    }
};

} // namespace

TimeSeries integrate_mg(const MGParams& params, std::size_t n_samples, std::size_t burn_in) {
    params.validate();
    if (n_samples == 0) throw InvalidArgument("integrate_mg: n_samples must be >= 1");

    const MGRhs rhs{params.a, params.b, params.p};
    const double dt = params.dt;
    const std::size_t delay = params.delay_steps();
    const std::size_t total = burn_in + n_samples;

    // Solution and its derivative on the grid t_k = k dt, k >= 0.
    std::vector<double> x(total);
    std::vector<double> dx(total);
    x[0] = params.x0;

    // x(t_m) for integer m relative to t = 0; history is flat.
    auto at_grid = [&](long long m) { return m <= 0 ? params.x0 : x[static_cast<std::size_t>(m)]; };
    // x(t_m + dt/2) from the cubic Hermite interpolant on [t_m, t_{m+1}].
    auto at_half = [&](long long m) {
        if (m + 1 <= 0) return params.x0;
        const auto i = static_cast<std::size_t>(m);
        return 0.5 * (x[i] + x[i + 1]) + dt * (dx[i] - dx[i + 1]) / 8.0;
    };

    for (std::size_t k = 0; k + 1 < total; ++k) {
        const double xk = x[k];
        const auto lag = static_cast<long long>(k) - static_cast<long long>(delay);
        double k1, k2, k3, k4;
        if (delay == 0) {
            k1 = rhs(xk, xk);
            const double s2 = xk + 0.5 * dt * k1;
            k2 = rhs(s2, s2);
            const double s3 = xk + 0.5 * dt * k2;
            k3 = rhs(s3, s3);
            const double s4 = xk + dt * k3;
            k4 = rhs(s4, s4);
        } else {
            k1 = rhs(xk, at_grid(lag));
            dx[k] = k1;
            // dx[k] must be set before this when the delay is a single step.
            const double dh = at_half(lag);
            const double d1 = at_grid(lag + 1);
            k2 = rhs(xk + 0.5 * dt * k1, dh);
            k3 = rhs(xk + 0.5 * dt * k2, dh);
            k4 = rhs(xk + dt * k3, d1);
        }
        dx[k] = k1;
        x[k + 1] = xk + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!std::isfinite(x[k + 1]))
            throw IntegrationDivergence("integrate_mg: non-finite state at step " + std::to_string(k + 1));
    }

    std::vector<double> out(x.begin() + static_cast<std::ptrdiff_t>(burn_in), x.end());
    return TimeSeries(std::move(out), dt);
}

TimeSeries downsample(const TimeSeries& series, std::size_t factor) {
    if (factor == 0) throw InvalidArgument("downsample: factor must be >= 1");
    std::vector<double> out;
    out.reserve(series.size() / factor + 1);
    for (std::size_t i = 0; i < series.size(); i += factor) out.push_back(series.values[i]);
    return TimeSeries(std::move(out), series.dt_effective * static_cast<double>(factor));
}

double mean_of(std::span<const double> xs) {
    if (xs.empty()) throw InvalidArgument("mean of empty sequence");
    double s = 0.0;
    for (double v : xs) s += v;
    return s / static_cast<double>(xs.size());
}

double pstd_of(std::span<const double> xs) {
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double v : xs) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(xs.size()));
}

Standardized standardize(const TimeSeries& series) {
    series.validate();
    const double m = mean_of(series.values);
    const double s = pstd_of(series.values);
    if (!(s > 0.0)) throw DegenerateSignal("standardize: zero variance");
    return {apply_standardization(series, m, s), m, s};
}

TimeSeries apply_standardization(const TimeSeries& series, double mean, double std) {
    if (!(std > 0.0)) throw DegenerateSignal("standardization with non-positive std");
    std::vector<double> out(series.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (series.values[i] - mean) / std;
    return TimeSeries(std::move(out), series.dt_effective);
}

TimeSeries PredictionPairs::all_inputs() const {
    std::vector<double> v = train_inputs.values;
    v.insert(v.end(), test_inputs.values.begin(), test_inputs.values.end());
    return TimeSeries(std::move(v), train_inputs.dt_effective);
}

PredictionPairs make_prediction_pairs(const TimeSeries& series, std::size_t train_len,
                                      std::size_t discard, std::size_t test_len) {
    if (train_len == 0) throw InvalidArgument("make_prediction_pairs: train_len must be >= 1");
    const std::size_t need = required_length(train_len, discard, test_len);
    if (series.size() < need)
        throw InvalidArgument("make_prediction_pairs: series has " + std::to_string(series.size()) +
                              " samples, need " + std::to_string(need));
    const auto& s = series.values;
    const double dt = series.dt_effective;
    const std::size_t n_train = discard + train_len;

    PredictionPairs pairs;
    pairs.discard = discard;
    pairs.train_inputs = TimeSeries({s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n_train)}, dt);
    pairs.train_targets = TimeSeries({s.begin() + 1, s.begin() + static_cast<std::ptrdiff_t>(n_train + 1)}, dt);
    pairs.test_inputs = TimeSeries({s.begin() + static_cast<std::ptrdiff_t>(n_train),
                                    s.begin() + static_cast<std::ptrdiff_t>(n_train + test_len)}, dt);
    pairs.test_targets = TimeSeries({s.begin() + static_cast<std::ptrdiff_t>(n_train + 1),
                                     s.begin() + static_cast<std::ptrdiff_t>(n_train + test_len + 1)}, dt);
    return pairs;
}

void write_series_csv(std::ostream& out, const TimeSeries& series,
                      const std::vector<std::string>& metadata) {
    for (const auto& line : metadata) out << "# " << line << '\n';
    out << "n,value\n";
    for (std::size_t i = 0; i < series.size(); ++i) out << i << ',' << csv::num(series.values[i]) << '\n';
    if (!out) throw IoError("failed writing series CSV");
}

TimeSeries read_series_csv(std::istream& in) {
    TimeSeries ts;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string key = "dt_effective=";
            auto pos = line.find(key);
            if (pos != std::string::npos) ts.dt_effective = csv::parse_double(std::string_view(line).substr(pos + key.size()));
            continue;
        }
        if (!header) {
            if (line.rfind("n,value", 0) != 0) throw InvalidArgument("series CSV: missing `n,value` header");
            header = true;
            continue;
        }
        auto cols = csv::split(line);
        if (cols.size() != 2) throw InvalidArgument("series CSV: expected 2 columns");
        ts.values.push_back(csv::parse_double(cols[1]));
    }
    ts.validate();
    return ts;
}

} // namespace prnn

#include "prnn/network.hpp"

#include "prnn/csv.hpp"
#include "prnn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace prnn {

void RnnConfig::validate() const {
    const std::size_t n = theta.size();
    if (n == 0) throw InvalidArgument("rnn: theta is empty");
    if (w_inj.size() != n) throw InvalidArgument("rnn: w_inj length differs from theta length");
    if (!coupling) throw InvalidArgument("rnn: coupling matrix missing");
    if (coupling->n_nodes() != n) throw InvalidArgument("rnn: coupling matrix size differs from node count");
    if (!(beta >= 0.0) || !(gamma >= 0.0) || !(alpha >= 0.0))
        throw InvalidArgument("rnn: beta, gamma and alpha must be >= 0");
    if (!(noise_std >= 0.0)) throw InvalidArgument("rnn: noise_std must be >= 0");
    for (double w : w_inj)
        if (!(w >= 0.0)) throw InvalidArgument("rnn: injection weights must be nonnegative");
}

RnnState RnnState::zeros(std::size_t n) {
    RnnState s;
    s.s.assign(n, 0.0);
    s.e.assign(n, 0.0);
    s.node_intensity.assign(n, 0.0);
    return s;
}

BooleanWeights::BooleanWeights(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto& b : bits_)
        if (b > 1) throw InvalidArgument("boolean weights: entries must be 0 or 1");
}

std::size_t BooleanWeights::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::string BooleanWeights::to_string() const {
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i]) s[i] = '1';
    return s;
}

BooleanWeights BooleanWeights::from_string(std::string_view s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
    std::vector<std::uint8_t> bits(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '0' && s[i] != '1') throw InvalidArgument("boolean weights: expected only '0'/'1'");
        bits[i] = s[i] == '1';
    }
    return BooleanWeights(std::move(bits));
}

Trajectory Trajectory::slice(std::size_t first, std::size_t count) const {
    if (first + count > length_) throw InvalidArgument("trajectory slice out of range");
    Trajectory out(n_nodes_, count);
    for (std::size_t i = 0; i < n_nodes_; ++i)
        std::copy_n(x_.begin() + static_cast<std::ptrdiff_t>(i * length_ + first), count,
                    out.x_.begin() + static_cast<std::ptrdiff_t>(i * count));
    return out;
}

std::vector<double> init_phases(std::size_t n_nodes, double mu, double theta0, double delta_theta,
                                std::uint64_t seed) {
    if (!(mu >= 0.0 && mu <= 1.0)) throw InvalidArgument("init_phases: mu must be in [0, 1]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> theta(n_nodes);
    for (auto& t : theta) t = unif(rng) < mu ? theta0 + delta_theta : theta0;
    return theta;
}

std::vector<double> init_injection(std::size_t n_nodes, InjectionMask mask, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> w(n_nodes, 1.0);
    switch (mask) {
    case InjectionMask::Uniform:
        for (auto& v : w) v = unif(rng);
        break;
    case InjectionMask::Binary:
        for (auto& v : w) v = unif(rng) < 0.5 ? 0.0 : 1.0;
        break;
    case InjectionMask::Ones:
        break;
    }
    return w;
}

namespace {

// Camera stage on a pre-clip intensity.
double detect(const RnnConfig& config, double c2, NoiseEngine* noise) {
    double s = std::clamp(config.alpha * c2, 0.0, 1.0);
    if (config.quantize_8bit) s = std::round(s * 255.0) / 255.0;
    if (config.noise_std > 0.0 && noise) {
        std::normal_distribution<double> gauss(0.0, config.noise_std);
        s = std::clamp(s + gauss(*noise), 0.0, 1.0);
    }
    return s;
}

// Writes fields and returns coupled fields c = W e.
void modulate(const RnnConfig& config, const RnnState& state, double u_next, RnnState& next) {
    const std::size_t n = config.n_nodes();
    next.e.resize(n);
    next.node_intensity.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double phi = config.beta * state.s[i] + config.gamma * config.w_inj[i] * u_next + config.theta[i];
        const double e = std::cos(phi);
        next.e[i] = e;
        next.node_intensity[i] = e * e;
    }
}

} // namespace

RnnState step(const RnnConfig& config, const RnnState& state, double u_next, NoiseEngine* noise) {
    RnnState next;
    modulate(config, state, u_next, next);
    std::vector<double> c;
    config.coupling->multiply(next.e, c);
    next.s.resize(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) next.s[i] = detect(config, c[i] * c[i], noise);
    return next;
}

Trajectory run(const RnnConfig& config, const TimeSeries& input, const RnnState& initial, RnnState& final_state) {
    config.validate();
    if (input.empty()) throw InvalidArgument("run: input is empty");
    const std::size_t n = config.n_nodes();
    if (initial.s.size() != n) throw InvalidArgument("run: initial state has wrong length");

    NoiseEngine noise(config.noise_seed);
    Trajectory traj(n, input.size());
    RnnState state = initial;
    for (std::size_t t = 0; t < input.size(); ++t) {
        state = step(config, state, input[t], &noise);
        for (std::size_t i = 0; i < n; ++i) traj.set(t, i, state.node_intensity[i]);
    }
    final_state = std::move(state);
    return traj;
}

Trajectory run(const RnnConfig& config, const TimeSeries& input, const RnnState& initial) {
    RnnState final_state;
    return run(config, input, initial, final_state);
}

TimeSeries readout(const Trajectory& trajectory, const BooleanWeights& weights, double delta) {
    if (weights.size() != trajectory.n_nodes())
        throw InvalidArgument("readout: weight length differs from node count");
    std::vector<double> y(trajectory.length(), 0.0);
    for (std::size_t i = 0; i < trajectory.n_nodes(); ++i) {
        if (!weights[i]) continue;
        const auto x = trajectory.node(i);
        for (std::size_t t = 0; t < y.size(); ++t) y[t] += 1.0 - x[t];
    }
    for (auto& v : y) v *= delta;
    return TimeSeries(std::move(y), 1.0);
}

std::vector<double> coupled_intensities(const RnnConfig& config, const TimeSeries& input) {
    config.validate();
    const std::size_t n = config.n_nodes();
    NoiseEngine noise(config.noise_seed);
    std::vector<double> out;
    out.reserve(n * input.size());
    RnnState state = RnnState::zeros(n), next;
    std::vector<double> c;
    for (std::size_t t = 0; t < input.size(); ++t) {
        modulate(config, state, input[t], next);
        config.coupling->multiply(next.e, c);
        next.s.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double c2 = c[i] * c[i];
            out.push_back(c2);
            next.s[i] = detect(config, c2, &noise);
        }
        std::swap(state, next);
    }
    return out;
}

double clipped_fraction(const RnnConfig& config, const TimeSeries& input) {
    const auto c2 = coupled_intensities(config, input);
    const auto clipped = std::count_if(c2.begin(), c2.end(), [&](double v) { return config.alpha * v > 1.0; });
    return static_cast<double>(clipped) / static_cast<double>(c2.size());
}

namespace {

double nearest_rank_percentile(std::vector<double> values, double q) {
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    const std::size_t idx = std::clamp<std::size_t>(rank, 1, values.size()) - 1;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(idx), values.end());
    return values[idx];
}

} // namespace

double calibrate_alpha(const RnnConfig& config, const TimeSeries& probe_input) {
    constexpr double kPercentile = 0.999;
    constexpr double kMaxClipped = 0.001;
    constexpr double kTolerance = 1e-3;

    RnnConfig cfg = config;
    struct Probe {
        double pct;     // percentile of c^2
        double clipped; // fraction with alpha c^2 > 1
    };
    auto probe = [&](double alpha) {
        cfg.alpha = alpha;
        const auto c2 = coupled_intensities(cfg, probe_input);
        const auto n_clipped = std::count_if(c2.begin(), c2.end(), [&](double v) { return alpha * v > 1.0; });
        return Probe{nearest_rank_percentile(c2, kPercentile),
                     static_cast<double>(n_clipped) / static_cast<double>(c2.size())};
    };
    auto acceptable = [&](double alpha, const Probe& p) {
        return p.clipped <= kMaxClipped && alpha * p.pct <= 1.0 + kTolerance;
    };

    const Probe unit = probe(1.0);
    if (!(unit.pct > 0.0)) throw DegenerateCalibration("calibrate_alpha: coupled intensities are all zero");

    // Fixed point alpha = 1 / pct(alpha); exact when the feedback does not move the percentile.
    double alpha = 1.0 / unit.pct;
    for (int round = 0; round < 5; ++round) {
        const Probe p = probe(alpha);
        if (!(p.pct > 0.0)) break;
        if (acceptable(alpha, p) && std::abs(alpha * p.pct - 1.0) < kTolerance) return alpha;
        alpha = 1.0 / p.pct;
    }

    // The feedback can make alpha * pct jump across 1 (the map bifurcates), so
    // fall back to bisecting for the largest acceptable gain.
    double lo = 1.0, hi = 1.0;
    if (acceptable(lo, unit)) {
        for (int i = 0; i < 60 && acceptable(hi, probe(hi)); ++i) hi *= 2.0;
    } else {
        for (int i = 0; i < 60 && !acceptable(lo, probe(lo)); ++i) lo *= 0.5;
    }
    if (!acceptable(lo, probe(lo)) || acceptable(hi, probe(hi)))
        throw DegenerateCalibration("calibrate_alpha: could not bracket the camera gain");
    for (int i = 0; i < 40 && hi - lo > 1e-9 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (acceptable(mid, probe(mid)) ? lo : hi) = mid;
    }
    return lo;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
    out << 'n';
    for (std::size_t i = 0; i < trajectory.n_nodes(); ++i) out << ",node_" << i;
    out << '\n';
    for (std::size_t t = 0; t < trajectory.length(); ++t) {
        out << t;
        for (std::size_t i = 0; i < trajectory.n_nodes(); ++i) out << ',' << csv::num(trajectory.node_intensity(t, i));
        out << '\n';
    }
    if (!out) throw IoError("failed writing trajectory CSV");
}

} // namespace prnn

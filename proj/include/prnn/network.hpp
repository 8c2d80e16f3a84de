#pragma once

// Coupled Ikeda-map network with a Boolean mirror readout.
//
// One iteration follows the light path: the SLM imprints a field
// e_i = cos(phi_i) with phi_i = beta s_i + gamma w_inj_i u + theta_i, the DOE sums
// fields c_i = sum_j W_ij e_j, and the camera detects s_i' = clip(alpha c_i^2, 0, 1).
// Gray scale, illumination and the gray-to-radian factor are normalized to 1.

#include "prnn/coupling_matrix.hpp"
#include "prnn/mackey_glass.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

namespace prnn {

struct RnnConfig {
    double beta = 0.8;
    double gamma = 0.4;
    double alpha = 1.0;
    std::vector<double> theta;
    std::vector<double> w_inj;
    std::shared_ptr<const CouplingMatrix> coupling;
    bool quantize_8bit = false;
    double noise_std = 0.0;
    std::uint64_t noise_seed = 0;

    std::size_t n_nodes() const { return theta.size(); }
    /// Throws InvalidArgument when lengths disagree or a gain is negative.
    void validate() const;
};

struct RnnState {
    std::vector<double> s;              ///< camera-plane intensities in [0, 1]
    std::vector<double> e;              ///< SLM field amplitudes in [-1, 1]
    std::vector<double> node_intensity; ///< e^2

    static RnnState zeros(std::size_t n);
};

/// Readout weights W^DMD.
class BooleanWeights {
public:
    BooleanWeights() = default;
    explicit BooleanWeights(std::size_t n, bool value = false) : bits_(n, value ? 1 : 0) {}
    explicit BooleanWeights(std::vector<std::uint8_t> bits);

    std::size_t size() const { return bits_.size(); }
    bool operator[](std::size_t i) const { return bits_[i] != 0; }
    void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
    std::size_t count() const;
    const std::vector<std::uint8_t>& bits() const { return bits_; }

    /// N characters of '0'/'1'.
    std::string to_string() const;
    static BooleanWeights from_string(std::string_view s);

    friend bool operator==(const BooleanWeights&, const BooleanWeights&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

/// Node intensities for every step, stored node-major so a single node's
/// history is contiguous.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(std::size_t n_nodes, std::size_t length)
        : n_nodes_(n_nodes), length_(length), x_(n_nodes * length) {}

    std::size_t n_nodes() const { return n_nodes_; }
    std::size_t length() const { return length_; }

    double node_intensity(std::size_t t, std::size_t i) const { return x_[i * length_ + t]; }
    void set(std::size_t t, std::size_t i, double v) { x_[i * length_ + t] = v; }
    /// 1 - x: what the DMD sees through the orthogonal polarization.
    double readout_plane(std::size_t t, std::size_t i) const { return 1.0 - node_intensity(t, i); }

    /// History of node i.
    std::span<const double> node(std::size_t i) const { return {x_.data() + i * length_, length_}; }

    /// Steps [first, first + count).
    Trajectory slice(std::size_t first, std::size_t count) const;

private:
    std::size_t n_nodes_ = 0;
    std::size_t length_ = 0;
    std::vector<double> x_;
};

/// Each theta_i is theta0 with probability 1 - mu, else theta0 + delta_theta.
std::vector<double> init_phases(std::size_t n_nodes, double mu, double theta0, double delta_theta,
                                std::uint64_t seed);

enum class InjectionMask { Uniform, Binary, Ones };
std::vector<double> init_injection(std::size_t n_nodes, InjectionMask mask, std::uint64_t seed);

/// Noise source for optional camera noise. Unused when noise_std == 0.
using NoiseEngine = std::mt19937_64;

RnnState step(const RnnConfig& config, const RnnState& state, double u_next, NoiseEngine* noise = nullptr);

/// Applies step once per input sample, starting from `initial`. Noise draws
/// come from a stream seeded with config.noise_seed.
Trajectory run(const RnnConfig& config, const TimeSeries& input, const RnnState& initial);
/// As above, also returning the final state.
Trajectory run(const RnnConfig& config, const TimeSeries& input, const RnnState& initial, RnnState& final_state);

/// y(n) = delta sum_i w_i (1 - x_i(n)).
TimeSeries readout(const Trajectory& trajectory, const BooleanWeights& weights, double delta = 1.0);

/// Camera gain such that the 99.9th percentile (nearest rank) of alpha c^2
/// over a probe run equals 1. The feedback makes c depend on alpha, so the
/// estimate is refined by re-running until the clipped fraction is <= 0.1%.
double calibrate_alpha(const RnnConfig& config, const TimeSeries& probe_input);

/// Pre-clip coupled intensities c^2 for every step and node of a run.
std::vector<double> coupled_intensities(const RnnConfig& config, const TimeSeries& input);

/// Fraction of camera samples that the run with `config` clips at 1.
double clipped_fraction(const RnnConfig& config, const TimeSeries& input);

/// CSV `n,node_0,...,node_{N-1}` of node intensities.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

} // namespace prnn

#pragma once

// Experiment configuration: INI file with one section per module, plus
// command-line overrides.
//
//   [mg]       a b p tau dt x0 burn_in downsample
//   [data]     train_len discard test_len input_offset input_scale
//   [topology] kind=synthetic|optical|file grid_side kernel_radius heterogeneity
//              normalize=max-row-sum|spectral|none matrix_file
//   [optics]   wavelength slm_pitch oversample grid_samples doe=flat|triplicator|sinusoidal
//              doe_depth order_spacing footprint_shift aperture propagation_distances
//   [network]  beta gamma mu theta0 delta_theta injection=uniform|binary|ones
//              calibrate_alpha alpha delta quantize_8bit noise_std
//   [learner]  max_iterations strict checkpoint_every
//   [sweep]    mu beta gamma seeds   (comma-separated lists)
//   [seeds]    base topology phases injection learner noise
//   [output]   dir plot workers
//
// Angles accept a `pi` suffix, e.g. `theta0 = 0.17pi`.

#include "prnn/coupling_matrix.hpp"
#include "prnn/mackey_glass.hpp"
#include "prnn/network.hpp"
#include "prnn/optics.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace prnn {

struct DataConfig {
    std::size_t burn_in = kDefaultBurnIn;
    std::size_t downsample = 1;
    std::size_t train_len = 500;
    std::size_t discard = 30;
    std::size_t test_len = 4500;
    /// Injected input is (u - input_offset) * input_scale.
    double input_offset = 0.0;
    double input_scale = 1.0;
};

enum class TopologyKind { Synthetic, Optical, File };

struct TopologyConfig {
    TopologyKind kind = TopologyKind::Synthetic;
    std::size_t grid_side = 30;
    std::size_t kernel_radius = 1;
    double heterogeneity = 0.5;
    std::optional<NormalizeMode> normalize = NormalizeMode::MaxRowSum;
    OpticalSystemSpec optics;
    std::string matrix_file;
};

struct NetworkSettings {
    double beta = 0.8;
    double gamma = 0.4;
    double mu = 0.45;
    double theta0 = 0.17 * 3.14159265358979323846;
    double delta_theta = 0.26 * 3.14159265358979323846;
    InjectionMask injection = InjectionMask::Uniform;
    bool calibrate_alpha = false;
    double alpha = 2.5;
    double delta = 1.0;
    bool quantize_8bit = false;
    double noise_std = 0.0;
};

struct LearnerSettings {
    std::size_t max_iterations = 5000;
    bool strict = true;
    std::size_t checkpoint_every = 250;
};

struct SweepConfig {
    std::vector<double> mu{0.25, 0.35, 0.45, 0.5};
    std::vector<double> beta{0.8};
    std::vector<double> gamma{0.4};
    std::vector<std::uint64_t> seeds{1, 2, 3};
};

struct SeedConfig {
    std::uint64_t base = 1;
    std::optional<std::uint64_t> topology, phases, injection, learner, noise;
};

/// Per-component seeds resolved from a base seed and explicit overrides.
struct ResolvedSeeds {
    std::uint64_t topology, phases, injection, learner, noise;
};

struct ExperimentConfig {
    MGParams mg;
    DataConfig data;
    TopologyConfig topology;
    NetworkSettings network;
    LearnerSettings learner;
    SweepConfig sweep;
    SeedConfig seeds;
    std::string output_dir = "out";
    bool plot = false;
    std::size_t workers = 1;

    /// Throws InvalidArgument on any invalid field.
    void validate() const;
    ResolvedSeeds resolve_seeds() const;
    /// Same config with base seed replaced and per-component overrides dropped.
    ExperimentConfig with_seed(std::uint64_t seed) const;

    /// Every effective value as sorted `section.key=value` lines.
    std::string canonical() const;
    /// First 16 hex digits of SHA-256 over canonical().
    std::string hash() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Parses "1.5", "0.17pi", "-pi".
double parse_angle(const std::string& text);

/// splitmix64 finalizer, used to derive independent component seeds.
std::uint64_t mix_seed(std::uint64_t x);

} // namespace prnn

#pragma once

// Scalar Fourier optics: angular-spectrum propagation and the 4f + DOE model
// that produces a physical coupling matrix.

#include "prnn/coupling_matrix.hpp"

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <vector>

namespace prnn {

using Complex = std::complex<double>;

/// Complex amplitudes on a uniform n x n grid, row-major. Lengths in metres.
struct FieldGrid {
    std::size_t n = 0;
    double pitch = 0.0;
    std::vector<Complex> data;

    FieldGrid() = default;
    FieldGrid(std::size_t n_, double pitch_) : n(n_), pitch(pitch_), data(n_ * n_) {}

    Complex& at(std::size_t row, std::size_t col) { return data[row * n + col]; }
    const Complex& at(std::size_t row, std::size_t col) const { return data[row * n + col]; }

    /// sum |E|^2 pitch^2
    double power() const;
    bool finite() const;
};

/// Spatial frequency (cycles per metre) of FFT bin k on an n-point grid.
double fft_frequency(std::size_t k, std::size_t n, double pitch);

/// Exact free-space propagation over `distance` >= 0 using the transfer function
/// exp(i 2 pi z sqrt(1/lambda^2 - fx^2 - fy^2)); evanescent components are zeroed.
/// Throws InvalidField for non-finite input.
FieldGrid angular_spectrum_propagate(const FieldGrid& field, double distance, double wavelength);

/// Writes `row,col,real,imag` lines.
void write_field_csv(std::ostream& out, const FieldGrid& field);

/// Periodic DOE transmission t(u, v), with u, v the position inside one grating
/// period (period 1 in both directions). Separable: t(u, v) = g(u) g(v).
struct DoeGrating {
    enum class Kind {
        Flat,        ///< t = 1
        Triplicator, ///< g(u) = (1 + 2 cos 2 pi u) / 3: exactly three equal orders, phase 0 or pi
        Sinusoidal,  ///< g(u) = exp(i depth cos 2 pi u), pure phase, Bessel-weighted orders
    };
    Kind kind = Kind::Sinusoidal;
    /// Modulation depth of the sinusoidal phase grating (radians). 1.4347 makes
    /// orders 0 and +-1 equally bright.
    double depth = 1.4347;

    Complex profile(double u) const;
    Complex transmission(double u, double v) const { return profile(u) * profile(v); }
    /// Phase of t(u, v) in radians.
    double phase(double u, double v) const { return std::arg(transmission(u, v)); }
};

/// The 4f chain: SLM plane -> Fourier transform -> DOE and pupil -> inverse
/// transform -> camera plane, followed by optional defocus distances.
struct OpticalSystemSpec {
    double wavelength = 661.2e-9;
    double slm_pitch = 12.5e-6;
    std::size_t grid_side = 30;      ///< nodes per side
    std::size_t oversample = 8;      ///< samples per SLM pixel
    std::size_t grid_samples = 512;  ///< FFT grid size (includes zero padding)
    DoeGrating doe;
    /// Order spacing in units of the pixel pitch (1 = matched).
    double order_spacing = 1.0;
    /// Per-pixel sub-period displacement of the DOE footprint, in periods per
    /// pixel. Models the DOE sitting slightly off the exact Fourier plane.
    double footprint_shift = 0.29;
    /// Gaussian pupil exp(-(f / f_c)^2), f_c = aperture / slm_pitch; <= 0
    /// disables it. A hard-edged pupil rings far beyond the sparsification
    /// threshold, a soft one keeps the response local.
    double aperture = 1.25;
    /// Free-space distances applied after the 4f image, in metres.
    std::vector<double> propagation_distances{};

    double sample_pitch() const { return slm_pitch / static_cast<double>(oversample); }
    std::size_t pixel_slots() const { return grid_samples / oversample; }

    /// Throws InvalidArgument for bad geometry, SamplingError if the pupil or
    /// the DOE period is not resolved by the grid.
    void validate() const;
};

/// Pupil amplitude that must be reached inside the grid Nyquist band (the
/// same level at which matrix entries are dropped).
inline constexpr double kPupilFloor = 1e-4;

/// Entries below this fraction of their column maximum are dropped.
inline constexpr double kDoeThreshold = 1e-4;

/// Column j: illuminate pixel j alone, propagate through the modeled optics and
/// integrate the complex amplitude over every destination pixel; entries are
/// the magnitudes of those overlaps divided by the pixel area. Not normalized.
CouplingMatrix compute_doe_matrix(const OpticalSystemSpec& spec);

/// Camera-plane field for a single illuminated pixel (debugging aid).
FieldGrid probe_response(const OpticalSystemSpec& spec, std::size_t node);

} // namespace prnn

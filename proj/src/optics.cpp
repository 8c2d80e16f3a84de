#include "prnn/optics.hpp"

#include "prnn/csv.hpp"
#include "prnn/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <ostream>

namespace prnn {

namespace {

// FFTW planning is not thread-safe; execution of distinct plans is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

class Fft2d {
public:
    Fft2d(std::size_t n, std::vector<Complex>& buffer, int sign) {
        std::lock_guard lock(fftw_planner_mutex());
        auto* ptr = reinterpret_cast<fftw_complex*>(buffer.data());
        plan_ = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), ptr, ptr, sign, FFTW_ESTIMATE);
    }
    ~Fft2d() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
    }
    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;

    void execute() const { fftw_execute(plan_); }

private:
    fftw_plan plan_ = nullptr;
};

double frac(double x) { return x - std::floor(x); }

// exp(i 2 pi z sqrt(1/lambda^2 - f^2)), zero for evanescent components.
Complex free_space_transfer(double fx, double fy, double distance, double wavelength) {
    const double kz2 = 1.0 / (wavelength * wavelength) - fx * fx - fy * fy;
    if (kz2 < 0.0) return {0.0, 0.0};
    return std::polar(1.0, 2.0 * std::numbers::pi * distance * std::sqrt(kz2));
}

} // namespace

double FieldGrid::power() const {
    double s = 0.0;
    for (const auto& v : data) s += std::norm(v);
    return s * pitch * pitch;
}

bool FieldGrid::finite() const {
    return std::all_of(data.begin(), data.end(),
                       [](const Complex& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

double fft_frequency(std::size_t k, std::size_t n, double pitch) {
    const auto kk = k <= n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
    return kk / (static_cast<double>(n) * pitch);
}

FieldGrid angular_spectrum_propagate(const FieldGrid& field, double distance, double wavelength) {
    if (field.n == 0 || field.data.size() != field.n * field.n || !(field.pitch > 0.0))
        throw InvalidField("angular_spectrum_propagate: malformed grid");
    if (!field.finite()) throw InvalidField("angular_spectrum_propagate: non-finite field");
    if (!(distance >= 0.0)) throw InvalidArgument("angular_spectrum_propagate: distance must be >= 0");
    if (!(wavelength > 0.0)) throw InvalidArgument("angular_spectrum_propagate: wavelength must be > 0");

    FieldGrid out = field;
    const std::size_t n = field.n;
    Fft2d forward(n, out.data, FFTW_FORWARD);
    Fft2d backward(n, out.data, FFTW_BACKWARD);
    forward.execute();
    const double norm = 1.0 / static_cast<double>(n * n);
    for (std::size_t r = 0; r < n; ++r) {
        const double fy = fft_frequency(r, n, field.pitch);
        for (std::size_t c = 0; c < n; ++c) {
            const double fx = fft_frequency(c, n, field.pitch);
            out.at(r, c) *= free_space_transfer(fx, fy, distance, wavelength) * norm;
        }
    }
    backward.execute();
    return out;
}

void write_field_csv(std::ostream& out, const FieldGrid& field) {
    out << "row,col,real,imag\n";
    for (std::size_t r = 0; r < field.n; ++r)
        for (std::size_t c = 0; c < field.n; ++c)
            out << r << ',' << c << ',' << csv::num(field.at(r, c).real()) << ','
                << csv::num(field.at(r, c).imag()) << '\n';
}

Complex DoeGrating::profile(double u) const {
    const double ang = 2.0 * std::numbers::pi * u;
    switch (kind) {
    case Kind::Flat: return {1.0, 0.0};
    case Kind::Triplicator: return {(1.0 + 2.0 * std::cos(ang)) / 3.0, 0.0};
    case Kind::Sinusoidal: return std::polar(1.0, depth * std::cos(ang));
    }
    return {1.0, 0.0};
}

void OpticalSystemSpec::validate() const {
    if (!(wavelength > 0.0)) throw InvalidArgument("optics: wavelength must be > 0");
    if (!(slm_pitch > 0.0)) throw InvalidArgument("optics: slm_pitch must be > 0");
    if (grid_side == 0 || oversample == 0 || grid_samples == 0)
        throw InvalidArgument("optics: grid_side, oversample and grid_samples must be >= 1");
    if (grid_samples % oversample != 0)
        throw InvalidArgument("optics: grid_samples must be a multiple of oversample");
    if (pixel_slots() < grid_side + 2)
        throw InvalidArgument("optics: grid too small for the node array plus a guard band");
    if (!(order_spacing > 0.0)) throw InvalidArgument("optics: order_spacing must be > 0");
    for (double z : propagation_distances)
        if (!(z >= 0.0)) throw InvalidArgument("optics: propagation distances must be >= 0");

    // The pupil must have decayed to kPupilFloor before the grid Nyquist limit.
    const double nyquist = 1.0 / (2.0 * sample_pitch());
    if (aperture > 0.0 && nyquist * slm_pitch / aperture < std::sqrt(-std::log(kPupilFloor)))
        throw SamplingError("optics: pupil is not band-limited by the grid");
    // The DOE period in the Fourier plane (1 / (order_spacing * pitch)) needs
    // at least two frequency bins.
    const double bins_per_period = static_cast<double>(grid_samples) * sample_pitch() / (order_spacing * slm_pitch);
    if (doe.kind != DoeGrating::Kind::Flat && bins_per_period < 2.0)
        throw SamplingError("optics: DOE period is not resolved by the frequency grid");
}

namespace {

struct ProbeContext {
    const OpticalSystemSpec& spec;
    std::size_t n, os, first_slot;
    std::vector<double> freq;        // per FFT bin, same for rows and columns
    std::vector<Complex> fixed;      // pupil * defocus * 1/n^2, row-major

    explicit ProbeContext(const OpticalSystemSpec& s)
        : spec(s), n(s.grid_samples), os(s.oversample), first_slot((s.pixel_slots() - s.grid_side) / 2),
          freq(n), fixed(n * n) {
        const double dx = s.sample_pitch();
        for (std::size_t k = 0; k < n; ++k) freq[k] = fft_frequency(k, n, dx);
        const double fc = s.aperture / s.slm_pitch;
        const double norm = 1.0 / static_cast<double>(n * n);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) {
                const double fx = freq[c], fy = freq[r];
                Complex h = norm;
                if (s.aperture > 0.0) h *= std::exp(-(fx * fx + fy * fy) / (fc * fc));
                for (double z : s.propagation_distances) h *= free_space_transfer(fx, fy, z, s.wavelength);
                fixed[r * n + c] = h;
            }
        }
    }

    // Camera-plane field for source node j.
    void respond(std::size_t node, std::vector<Complex>& buf, const Fft2d& fwd, const Fft2d& bwd) const {
        const std::size_t side = spec.grid_side;
        const std::size_t row = node / side, col = node % side;
        std::fill(buf.begin(), buf.end(), Complex{});
        const std::size_t r0 = (first_slot + row) * os, c0 = (first_slot + col) * os;
        for (std::size_t r = 0; r < os; ++r)
            for (std::size_t c = 0; c < os; ++c) buf[(r0 + r) * n + c0 + c] = 1.0;
        fwd.execute();

        const double scale = spec.order_spacing * spec.slm_pitch;
        const double shift_x = frac(spec.footprint_shift * static_cast<double>(col));
        const double shift_y = frac(spec.footprint_shift * static_cast<double>(row));
        std::vector<Complex> gx(n), gy(n);
        for (std::size_t k = 0; k < n; ++k) {
            gx[k] = spec.doe.profile(freq[k] * scale + shift_x);
            gy[k] = spec.doe.profile(freq[k] * scale + shift_y);
        }
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) buf[r * n + c] *= fixed[r * n + c] * gy[r] * gx[c];
        bwd.execute();
    }
};

} // namespace

FieldGrid probe_response(const OpticalSystemSpec& spec, std::size_t node) {
    spec.validate();
    if (node >= spec.grid_side * spec.grid_side) throw InvalidArgument("probe_response: node out of range");
    ProbeContext ctx(spec);
    FieldGrid field(spec.grid_samples, spec.sample_pitch());
    Fft2d fwd(field.n, field.data, FFTW_FORWARD);
    Fft2d bwd(field.n, field.data, FFTW_BACKWARD);
    ctx.respond(node, field.data, fwd, bwd);
    return field;
}

CouplingMatrix compute_doe_matrix(const OpticalSystemSpec& spec) {
    spec.validate();
    ProbeContext ctx(spec);
    const std::size_t n = spec.grid_samples, os = spec.oversample, side = spec.grid_side;
    const std::size_t nodes = side * side;
    std::vector<Complex> buf(n * n);
    Fft2d fwd(n, buf, FFTW_FORWARD);
    Fft2d bwd(n, buf, FFTW_BACKWARD);

    const double inv_area = 1.0 / static_cast<double>(os * os);
    std::vector<Eigen::Triplet<double>> triplets;
    std::vector<double> column(nodes);
    std::size_t radius = 0;
    const auto grid = CouplingMatrix::identity(side); // for grid_distance only

    for (std::size_t j = 0; j < nodes; ++j) {
        ctx.respond(j, buf, fwd, bwd);
        double col_max = 0.0;
        for (std::size_t i = 0; i < nodes; ++i) {
            const std::size_t r0 = (ctx.first_slot + i / side) * os, c0 = (ctx.first_slot + i % side) * os;
            Complex acc{};
            for (std::size_t r = 0; r < os; ++r)
                for (std::size_t c = 0; c < os; ++c) acc += buf[(r0 + r) * n + c0 + c];
            column[i] = std::abs(acc) * inv_area;
            col_max = std::max(col_max, column[i]);
        }
        for (std::size_t i = 0; i < nodes; ++i) {
            if (column[i] > 0.0 && column[i] >= kDoeThreshold * col_max) {
                triplets.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), column[i]);
                radius = std::max(radius, grid.grid_distance(i, j));
            }
        }
    }
    const auto nn = static_cast<Eigen::Index>(nodes);
    SparseRowMatrix w(nn, nn);
    w.setFromTriplets(triplets.begin(), triplets.end());
    return CouplingMatrix(side, radius, std::move(w));
}

} // namespace prnn

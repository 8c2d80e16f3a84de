#include "prnn/coupling_matrix.hpp"

#include "prnn/csv.hpp"
#include "prnn/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <string>

namespace prnn {

CouplingMatrix::CouplingMatrix(std::size_t grid_side, std::size_t kernel_radius, SparseRowMatrix weights)
    : grid_side_(grid_side), kernel_radius_(kernel_radius), weights_(std::move(weights)) {
    const auto n = static_cast<Eigen::Index>(n_nodes());
    if (grid_side_ == 0) throw InvalidArgument("coupling matrix: grid_side must be >= 1");
    if (weights_.rows() != n || weights_.cols() != n)
        throw InvalidArgument("coupling matrix: shape does not match grid_side^2");
    weights_.prune(0.0);
    weights_.makeCompressed();
    for (Eigen::Index i = 0; i < n; ++i) {
        bool any = false;
        for (SparseRowMatrix::InnerIterator it(weights_, i); it; ++it) {
            if (!(it.value() >= 0.0) || !std::isfinite(it.value()))
                throw InvalidArgument("coupling matrix: entries must be finite and nonnegative");
            if (grid_distance(static_cast<std::size_t>(i), static_cast<std::size_t>(it.col())) > kernel_radius_)
                throw InvalidArgument("coupling matrix: entry outside kernel radius");
            any = any || it.value() > 0.0;
        }
        if (!any) throw InvalidArgument("coupling matrix: row " + std::to_string(i) + " is all zero");
    }
}

CouplingMatrix CouplingMatrix::identity(std::size_t grid_side) {
    const auto n = static_cast<Eigen::Index>(grid_side * grid_side);
    SparseRowMatrix w(n, n);
    w.setIdentity();
    return CouplingMatrix(grid_side, 0, std::move(w));
}

std::size_t CouplingMatrix::grid_distance(std::size_t i, std::size_t j) const {
    const auto ri = static_cast<long long>(i / grid_side_), ci = static_cast<long long>(i % grid_side_);
    const auto rj = static_cast<long long>(j / grid_side_), cj = static_cast<long long>(j % grid_side_);
    return static_cast<std::size_t>(std::max(std::llabs(ri - rj), std::llabs(ci - cj)));
}

void CouplingMatrix::multiply(const std::vector<double>& x, std::vector<double>& out) const {
    const auto n = static_cast<Eigen::Index>(n_nodes());
    out.assign(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (SparseRowMatrix::InnerIterator it(weights_, i); it; ++it)
            acc += it.value() * x[static_cast<std::size_t>(it.col())];
        out[static_cast<std::size_t>(i)] = acc;
    }
}

namespace {

double largest_singular_value(const SparseRowMatrix& w) {
    if (w.rows() <= 4096) {
        Eigen::MatrixXd dense(w);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(dense);
        return svd.singularValues()(0);
    }
    // Large grids: power iteration on W^T W.
    Eigen::VectorXd v = Eigen::VectorXd::Ones(w.cols()).normalized();
    double sigma = 0.0;
    for (int it = 0; it < 2000; ++it) {
        Eigen::VectorXd next = w.transpose() * (w * v);
        const double norm = next.norm();
        if (norm == 0.0) return 0.0;
        next /= norm;
        const double s = std::sqrt(norm);
        v = next;
        if (std::abs(s - sigma) <= 1e-13 * s) return s;
        sigma = s;
    }
    return sigma;
}

} // namespace

NormalizedMatrix normalize_matrix(const CouplingMatrix& matrix, NormalizeMode mode) {
    const auto& w = matrix.weights();
    double norm = 0.0;
    if (mode == NormalizeMode::MaxRowSum) {
        for (Eigen::Index i = 0; i < w.outerSize(); ++i) {
            double row = 0.0;
            for (SparseRowMatrix::InnerIterator it(w, i); it; ++it) row += it.value();
            norm = std::max(norm, row);
        }
    } else {
        norm = largest_singular_value(w);
    }
    if (!(norm > 0.0)) throw DegenerateMatrix("normalize_matrix: zero matrix");
    const double scale = 1.0 / norm;
    SparseRowMatrix scaled = w * scale;
    return {CouplingMatrix(matrix.grid_side(), matrix.kernel_radius(), std::move(scaled)), scale};
}

CouplingMatrix synth_kernel_matrix(std::size_t grid_side, std::size_t kernel_radius,
                                   double heterogeneity, std::uint64_t seed) {
    if (grid_side == 0) throw InvalidArgument("synth_kernel_matrix: grid_side must be >= 1");
    if (!(heterogeneity >= 0.0 && heterogeneity <= 1.0))
        throw InvalidArgument("synth_kernel_matrix: heterogeneity must be in [0, 1]");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> eta(-1.0, 1.0);
    const auto side = static_cast<long long>(grid_side);
    const auto r = static_cast<long long>(kernel_radius);

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(grid_side * grid_side * static_cast<std::size_t>((2 * r + 1) * (2 * r + 1)));
    for (long long row = 0; row < side; ++row) {
        for (long long col = 0; col < side; ++col) {
            const long long i = row * side + col;
            for (long long dr = -r; dr <= r; ++dr) {
                for (long long dc = -r; dc <= r; ++dc) {
                    // Draw for every offset, in-grid or not, so a node's weights
                    // do not depend on where it sits relative to the edge.
                    const double w = 1.0 + heterogeneity * eta(rng);
                    const long long rr = row + dr, cc = col + dc;
                    if (rr < 0 || rr >= side || cc < 0 || cc >= side) continue;
                    if (w > 0.0) triplets.emplace_back(i, rr * side + cc, w);
                }
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(grid_side * grid_side);
    SparseRowMatrix w(n, n);
    w.setFromTriplets(triplets.begin(), triplets.end());
    return normalize_matrix(CouplingMatrix(grid_side, kernel_radius, std::move(w)), NormalizeMode::MaxRowSum).matrix;
}

MatrixStats matrix_stats(const CouplingMatrix& matrix) {
    MatrixStats stats;
    const std::size_t side = matrix.grid_side();
    const auto& w = matrix.weights();
    const auto r = static_cast<long long>(matrix.kernel_radius());
    SparseRowMatrix wt = w.transpose(); // row j of wt = column j of w

    std::map<std::pair<long long, long long>, std::vector<double>> by_offset;
    stats.min_diagonal_dominance = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < matrix.n_nodes(); ++j) {
        const auto rj = static_cast<long long>(j / side), cj = static_cast<long long>(j % side);
        const bool interior = rj >= r && cj >= r && rj + r < static_cast<long long>(side) &&
                              cj + r < static_cast<long long>(side);
        std::size_t support = 0;
        double diag = 0.0, off = 0.0;
        for (SparseRowMatrix::InnerIterator it(wt, static_cast<Eigen::Index>(j)); it; ++it) {
            const auto i = static_cast<std::size_t>(it.col());
            if (it.value() > 0.0) ++support;
            if (i == j) diag = it.value();
            else off = std::max(off, it.value());
            if (interior) {
                const auto ri = static_cast<long long>(i / side), ci = static_cast<long long>(i % side);
                by_offset[{ri - rj, ci - cj}].push_back(it.value());
            }
        }
        if (interior) stats.max_interior_support = std::max(stats.max_interior_support, support);
        const double dom = off > 0.0 ? diag / off : std::numeric_limits<double>::infinity();
        stats.min_diagonal_dominance = std::min(stats.min_diagonal_dominance, dom);
    }

    double sum_cv = 0.0;
    std::size_t count = 0;
    for (const auto& [offset, values] : by_offset) {
        if (values.size() < 2) continue;
        double m = 0.0;
        for (double v : values) m += v;
        m /= static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - m) * (v - m);
        const double cv = m > 0.0 ? std::sqrt(ss / static_cast<double>(values.size())) / m : 0.0;
        sum_cv += cv;
        stats.max_offset_cv = std::max(stats.max_offset_cv, cv);
        ++count;
    }
    stats.mean_offset_cv = count ? sum_cv / static_cast<double>(count) : 0.0;
    return stats;
}

void write_matrix(std::ostream& out, const CouplingMatrix& matrix) {
    out << "N=" << matrix.n_nodes() << " radius=" << matrix.kernel_radius() << '\n';
    const auto& w = matrix.weights();
    for (Eigen::Index i = 0; i < w.outerSize(); ++i)
        for (SparseRowMatrix::InnerIterator it(w, i); it; ++it)
            out << i << ',' << it.col() << ',' << csv::num(it.value()) << '\n';
    if (!out) throw IoError("failed writing coupling matrix");
}

CouplingMatrix read_matrix(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw InvalidArgument("matrix file: empty");
    unsigned long long n = 0, radius = 0;
    if (std::sscanf(header.c_str(), "N=%llu radius=%llu", &n, &radius) != 2)
        throw InvalidArgument("matrix file: bad header '" + header + "'");
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    if (side * side != n) throw InvalidArgument("matrix file: N is not a perfect square");

    std::vector<Eigen::Triplet<double>> triplets;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto cols = csv::split(line);
        if (cols.size() != 3) throw InvalidArgument("matrix file: expected i,j,w");
        const auto i = csv::parse_int(cols[0]);
        const auto j = csv::parse_int(cols[1]);
        if (i < 0 || j < 0 || static_cast<unsigned long long>(i) >= n || static_cast<unsigned long long>(j) >= n)
            throw InvalidArgument("matrix file: index out of range");
        triplets.emplace_back(i, j, csv::parse_double(cols[2]));
    }
    SparseRowMatrix w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    w.setFromTriplets(triplets.begin(), triplets.end());
    return CouplingMatrix(side, radius, std::move(w));
}

} // namespace prnn

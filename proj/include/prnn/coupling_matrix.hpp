#pragma once

// Nonnegative local coupling between nodes on a square grid.

#include <Eigen/SparseCore>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace prnn {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Row i holds the weights with which every source node j feeds the field at node i.
/// Nodes are numbered row-major on a side x side grid.
class CouplingMatrix {
public:
    CouplingMatrix() = default;
    /// Validates nonnegativity, locality (Chebyshev grid distance <= radius) and
    /// that every row has a positive entry.
    CouplingMatrix(std::size_t grid_side, std::size_t kernel_radius, SparseRowMatrix weights);

    static CouplingMatrix identity(std::size_t grid_side);

    std::size_t n_nodes() const { return grid_side_ * grid_side_; }
    std::size_t grid_side() const { return grid_side_; }
    std::size_t kernel_radius() const { return kernel_radius_; }
    const SparseRowMatrix& weights() const { return weights_; }

    double at(std::size_t i, std::size_t j) const { return weights_.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }

    /// Chebyshev distance between two node indices on the grid.
    std::size_t grid_distance(std::size_t i, std::size_t j) const;

    /// out_i = sum_j W_ij x_j in a fixed (column-index) reduction order.
    void multiply(const std::vector<double>& x, std::vector<double>& out) const;

private:
    std::size_t grid_side_ = 0;
    std::size_t kernel_radius_ = 0;
    SparseRowMatrix weights_;
};

enum class NormalizeMode { MaxRowSum, Spectral };

struct NormalizedMatrix {
    CouplingMatrix matrix;
    double scale = 1.0; // factor the input was multiplied by
};

/// Rescales so the largest row sum (MaxRowSum) or largest singular value
/// (Spectral) is 1. Throws DegenerateMatrix for a zero matrix.
NormalizedMatrix normalize_matrix(const CouplingMatrix& matrix, NormalizeMode mode);

/// Synthetic surrogate for a measured DOE matrix: every node couples to its
/// (2r+1)^2 neighbours with weight (1 + heterogeneity * eta), eta ~ U[-1, 1]
/// drawn per (node, offset), then max-row-sum normalized.
CouplingMatrix synth_kernel_matrix(std::size_t grid_side, std::size_t kernel_radius,
                                   double heterogeneity, std::uint64_t seed);

/// Heterogeneity statistics: for every in-grid neighbour offset, the
/// coefficient of variation of the weights at that offset across interior
/// columns. Also the largest support size of an interior column and the
/// smallest ratio diagonal / max off-diagonal over columns.
struct MatrixStats {
    std::size_t max_interior_support = 0;
    double mean_offset_cv = 0.0;
    double max_offset_cv = 0.0;
    double min_diagonal_dominance = 0.0;
};
MatrixStats matrix_stats(const CouplingMatrix& matrix);

/// Sparse triplet text: header `N=<nodes> radius=<r>`, then one `i,j,w` line per entry.
void write_matrix(std::ostream& out, const CouplingMatrix& matrix);
CouplingMatrix read_matrix(std::istream& in);

} // namespace prnn

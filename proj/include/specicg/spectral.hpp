#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace specicg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Slack used by every reconstruction/orthonormality check in the library:
// roughly 100x double epsilon, scaled by the norm of the data at the call site.
inline constexpr double kSpectralTolerance = 1e-10;

/// Thin SVD Z = P dg(s) Q^T with s nonincreasing and nonnegative.
///
/// P is m x r and Q is n x r with r = min(m, n); both have orthonormal
/// columns. Ties in s admit any orthonormal completion, and every routine
/// below is invariant to that choice.
struct SpectralTriple {
    Matrix P;
    Vector s;
    Matrix Q;

    Index rows() const { return P.rows(); }
    Index cols() const { return Q.rows(); }
    Index rank_dim() const { return s.size(); }
};

/// Throws std::invalid_argument for non-finite input. The zero matrix maps to
/// s = 0 with identity factors.
SpectralTriple svd(const Matrix& Z);

/// Matrix with z on the leading diagonal; z.size() must equal min(rows, cols).
Matrix dg(const Vector& z, Index rows, Index cols);

/// Leading diagonal Z_ii, i < min(m, n).
Vector diag_extract(const Matrix& Z);

/// P dg(u) Q^T.
Matrix lift(const SpectralTriple& t, const Vector& u);

/// Dg(P^T U Q).
Vector vectorize(const SpectralTriple& t, const Matrix& U);

/// eps - [<sigma(Z), sigma(S)> - <Z, S>]. The bracket is nonnegative by von
/// Neumann's trace inequality, and zero when S and Z share an SVD.
double eps_transfer(const Matrix& S, const Matrix& Z, double eps);

/// Frobenius inner product.
inline double frob_inner(const Matrix& A, const Matrix& B) { return A.cwiseProduct(B).sum(); }

/// Partition of an m x n matrix into a grid of equally sized p x q blocks.
/// The default single block covers the whole matrix.
struct BlockLayout {
    Index block_rows = 1;
    Index block_cols = 1;
    Index block_height = 0;
    Index block_width = 0;

    static BlockLayout whole(Index rows, Index cols) { return {1, 1, rows, cols}; }

    Index total_rows() const { return block_rows * block_height; }
    Index total_cols() const { return block_cols * block_width; }
    Index num_blocks() const { return block_rows * block_cols; }
    Index values_per_block() const { return std::min(block_height, block_width); }
    /// Length of the concatenated singular value vector.
    Index vector_size() const { return num_blocks() * values_per_block(); }
    bool operator==(const BlockLayout&) const = default;
};

/// Per-block SVDs of a matrix laid out as BlockLayout, in row-major block
/// order. The concatenated singular value vector is the coordinate system in
/// which block-spectral functions act.
class SpectralFrame {
  public:
    SpectralFrame() = default;
    SpectralFrame(const Matrix& Z, const BlockLayout& layout);

    const BlockLayout& layout() const { return layout_; }
    const std::vector<SpectralTriple>& blocks() const { return blocks_; }

    /// Concatenated singular values, block by block.
    Vector singular_values() const;
    /// Blockwise P_b dg(u_b) Q_b^T.
    Matrix lift(const Vector& u) const;
    /// Blockwise Dg(P_b^T U_b Q_b).
    Vector vectorize(const Matrix& U) const;

  private:
    BlockLayout layout_;
    std::vector<SpectralTriple> blocks_;
};

/// Concatenated block singular values; a single SVD for the whole layout.
Vector block_singular_values(const Matrix& Z, const BlockLayout& layout);

}  // namespace specicg

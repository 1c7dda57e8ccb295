#include "specicg/spectral.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace specicg {

SpectralTriple svd(const Matrix& Z)
{
    if (!Z.allFinite())
        throw std::invalid_argument("svd: matrix has non-finite entries");

    const Index m = Z.rows();
    const Index n = Z.cols();
    const Index r = std::min(m, n);
    SpectralTriple t;
    if (r == 0 || Z.isZero(0.0)) {
        t.P = Matrix::Identity(m, r);
        t.s = Vector::Zero(r);
        t.Q = Matrix::Identity(n, r);
        return t;
    }

    Eigen::BDCSVD<Matrix> solver(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    t.P = solver.matrixU();
    t.s = solver.singularValues();
    t.Q = solver.matrixV();
    if (t.P.allFinite() && t.s.allFinite() && t.Q.allFinite())
        return t;
    // BDCSVD can emit NaN factors on nearly deflated inputs; Jacobi is slower but robust.
    Eigen::JacobiSVD<Matrix> jacobi(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    t.P = jacobi.matrixU();
    t.s = jacobi.singularValues();
    t.Q = jacobi.matrixV();
    return t;
}

Matrix dg(const Vector& z, Index rows, Index cols)
{
    if (z.size() != std::min(rows, cols))
        throw std::invalid_argument("dg: vector length " + std::to_string(z.size()) +
                                    " does not match min(" + std::to_string(rows) + ", " +
                                    std::to_string(cols) + ")");
    Matrix out = Matrix::Zero(rows, cols);
    out.diagonal() = z;
    return out;
}

Vector diag_extract(const Matrix& Z) { return Z.diagonal(); }

Matrix lift(const SpectralTriple& t, const Vector& u)
{
    if (u.size() != t.rank_dim())
        throw std::invalid_argument("lift: vector length does not match the triple");
    return t.P * u.asDiagonal() * t.Q.transpose();
}

Vector vectorize(const SpectralTriple& t, const Matrix& U)
{
    if (U.rows() != t.rows() || U.cols() != t.cols())
        throw std::invalid_argument("vectorize: matrix shape does not match the triple");
    // Only the diagonal of P^T U Q is needed.
    const Matrix UQ = U * t.Q;
    return (t.P.array() * UQ.array()).colwise().sum().transpose();
}

double eps_transfer(const Matrix& S, const Matrix& Z, double eps)
{
    if (S.rows() != Z.rows() || S.cols() != Z.cols())
        throw std::invalid_argument("eps_transfer: shape mismatch");
    const Vector sz = svd(Z).s;
    const Vector ss = svd(S).s;
    return eps - (sz.dot(ss) - frob_inner(Z, S));
}

SpectralFrame::SpectralFrame(const Matrix& Z, const BlockLayout& layout) : layout_(layout)
{
    if (Z.rows() != layout.total_rows() || Z.cols() != layout.total_cols())
        throw std::invalid_argument("SpectralFrame: matrix shape does not match the block layout");
    blocks_.reserve(static_cast<std::size_t>(layout.num_blocks()));
    const Index p = layout.block_height;
    const Index q = layout.block_width;
    for (Index bi = 0; bi < layout.block_rows; ++bi)
        for (Index bj = 0; bj < layout.block_cols; ++bj)
            blocks_.push_back(svd(Z.block(bi * p, bj * q, p, q)));
}

Vector SpectralFrame::singular_values() const
{
    const Index r = layout_.values_per_block();
    Vector out(layout_.vector_size());
    for (std::size_t b = 0; b < blocks_.size(); ++b)
        out.segment(static_cast<Index>(b) * r, r) = blocks_[b].s;
    return out;
}

Matrix SpectralFrame::lift(const Vector& u) const
{
    if (u.size() != layout_.vector_size())
        throw std::invalid_argument("SpectralFrame::lift: vector length does not match the layout");
    const Index p = layout_.block_height;
    const Index q = layout_.block_width;
    const Index r = layout_.values_per_block();
    Matrix out(layout_.total_rows(), layout_.total_cols());
    std::size_t b = 0;
    for (Index bi = 0; bi < layout_.block_rows; ++bi)
        for (Index bj = 0; bj < layout_.block_cols; ++bj, ++b)
            out.block(bi * p, bj * q, p, q) =
                specicg::lift(blocks_[b], u.segment(static_cast<Index>(b) * r, r));
    return out;
}

Vector SpectralFrame::vectorize(const Matrix& U) const
{
    if (U.rows() != layout_.total_rows() || U.cols() != layout_.total_cols())
        throw std::invalid_argument("SpectralFrame::vectorize: matrix shape does not match the layout");
    const Index p = layout_.block_height;
    const Index q = layout_.block_width;
    const Index r = layout_.values_per_block();
    Vector out(layout_.vector_size());
    std::size_t b = 0;
    for (Index bi = 0; bi < layout_.block_rows; ++bi)
        for (Index bj = 0; bj < layout_.block_cols; ++bj, ++b)
            out.segment(static_cast<Index>(b) * r, r) =
                specicg::vectorize(blocks_[b], U.block(bi * p, bj * q, p, q));
    return out;
}

Vector block_singular_values(const Matrix& Z, const BlockLayout& layout)
{
    if (Z.rows() != layout.total_rows() || Z.cols() != layout.total_cols())
        throw std::invalid_argument("block_singular_values: matrix shape does not match the block layout");
    if (!Z.allFinite())
        throw std::invalid_argument("block_singular_values: matrix has non-finite entries");
    const Index p = layout.block_height;
    const Index q = layout.block_width;
    const Index r = layout.values_per_block();
    Vector out(layout.vector_size());
    Index b = 0;
    for (Index bi = 0; bi < layout.block_rows; ++bi)
        for (Index bj = 0; bj < layout.block_cols; ++bj, ++b) {
            Eigen::BDCSVD<Matrix> solver(Z.block(bi * p, bj * q, p, q));
            out.segment(b * r, r) = solver.singularValues();
        }
    return out;
}

}  // namespace specicg

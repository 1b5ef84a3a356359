#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace embproj {

/// Row-major so that one point is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using Index = std::size_t;

inline std::span<const double> row_span(const Matrix& m, Index row) {
    return {m.data() + row * static_cast<Index>(m.cols()), static_cast<Index>(m.cols())};
}

/// Exact element-wise equality that tolerates differing shapes.
inline bool identical(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a.data()[i] != b.data()[i]) return false;
    }
    return true;
}

/// Copies the listed rows, in order, into a new matrix.
inline Matrix gather_rows(const Matrix& m, std::span<const Index> rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (Index i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

} // namespace embproj

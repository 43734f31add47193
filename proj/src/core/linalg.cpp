#include "hyperts/core/linalg.hpp"

#include <Eigen/Dense>

#include "hyperts/core/error.hpp"

namespace hyperts::linalg {

SymEigen sym_eigen(const Mat& m) {
    if (m.rows() != m.cols()) throw DimensionError("sym_eigen: matrix must be square");
    const auto n = static_cast<Eigen::Index>(m.rows());
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            a(r, c) = m(static_cast<std::size_t>(r), static_cast<std::size_t>(c));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) throw NumericError("sym_eigen: decomposition failed");

    SymEigen out;
    out.values.resize(static_cast<std::size_t>(n));
    out.vectors = Mat(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
        for (Eigen::Index r = 0; r < n; ++r)
            out.vectors(static_cast<std::size_t>(r), static_cast<std::size_t>(i)) =
                solver.eigenvectors()(r, i);
    }
    return out;
}

} // namespace hyperts::linalg

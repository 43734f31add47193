#pragma once

#include <vector>

#include "hyperts/core/matrix.hpp"

namespace hyperts::linalg {

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
/// Column c of `vectors` is the unit eigenvector for values[c].
struct SymEigen {
    std::vector<double> values;
    Mat vectors;
};

SymEigen sym_eigen(const Mat& m);

} // namespace hyperts::linalg

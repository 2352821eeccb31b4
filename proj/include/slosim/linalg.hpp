#pragma once

#include <cstddef>
#include <vector>

namespace slosim::linalg {

// Dense symmetric positive-definite solve via Cholesky. A is row-major n x n
// (only the lower triangle is read); throws SingularMatrixError when a pivot
// falls below tol times the largest diagonal entry.
struct SingularMatrixError : std::exception {
  const char* what() const noexcept override { return "singular normal-equation matrix"; }
};

std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n,
                                   double rel_tol = 1e-12);

}  // namespace slosim::linalg

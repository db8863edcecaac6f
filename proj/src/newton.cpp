#include "gpbif/newton.hpp"

#include <Eigen/SparseLU>

namespace gpbif {

Vec sparse_solve(const SparseMat& A, const Vec& b) {
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw DimensionMismatch("sparse_solve: dimensions");
  Eigen::SparseLU<SparseMat> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw SingularMatrix("sparse_solve: factorization failed");
  Vec x = lu.solve(b);
  double bnorm = b.norm();
  if (bnorm == 0.0) return Vec::Zero(b.size());
  double res = (A * x - b).norm();
  if (!(res <= 1e-10 * bnorm)) {  // negated form also trips on NaN
    x += lu.solve(b - A * x);     // one refinement pass
    res = (A * x - b).norm();
    if (!(res <= 1e-10 * bnorm))
      throw SingularMatrix("sparse_solve: residual contract violated");
  }
  return x;
}

}  // namespace gpbif

#ifndef GPBIF_TYPES_HPP
#define GPBIF_TYPES_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <string>

namespace gpbif {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Index = Eigen::Index;

// Chemical potential and trap strength of a single solve.
struct GpParameters {
  double mu = 0.0;
  double omega = 0.2;  // must be > 0
};

// Quantum numbers identifying a branch; vortex selects the complex
// combination guess (phi from (m,n), psi from (n,m)).
struct BranchLabel {
  int m = 0;
  int n = 0;
  bool vortex = false;

  double mu_crit(double omega) const { return (m + n + 1) * omega; }
};

struct Observables {
  double n_bosons = 0.0;  // N = integral of phi^2 + psi^2
  double rho_inf = 0.0;   // max over dofs of phi_i^2 + psi_i^2
};

struct DimensionMismatch : std::invalid_argument {
  explicit DimensionMismatch(const std::string& what)
      : std::invalid_argument(what) {}
};

struct SingularMatrix : std::runtime_error {
  explicit SingularMatrix(const std::string& what) : std::runtime_error(what) {}
};

struct SingularJacobian : std::runtime_error {
  explicit SingularJacobian(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace gpbif

#endif

#pragma once

#include <vector>

#include "gpbif/assembly.hpp"

namespace gpbif {

// Physicists' Hermite polynomial H_j via the three-term recurrence.
double hermite_eval(int j, double x);

// Full-order operators of the steady Gross-Pitaevskii system
//   G(X; mu, omega) = (A + omega^2 B - mu M) X + n(X)
// acting on interior dofs; X is the [phi; psi] pair. Constant matrices are
// assembled and condensed once at construction.
struct GpSystem {
  explicit GpSystem(const FeSpace& space);

  const FeSpace& space() const { return *space_; }

  // x_full has length 2*n_s with zero Dirichlet entries; results are
  // interior-sized (2*n_interior).
  Vec residual(const Vec& x_full, const GpParameters& p) const;
  SparseMat jacobian(const Vec& x_full, const GpParameters& p) const;
  void residual_and_jacobian(const Vec& x_full, const GpParameters& p,
                             Vec& r, SparseMat& J) const;
  SparseMat linear_operator(const GpParameters& p) const;  // A + omega^2 B - mu M

  Observables observables(const Vec& x_full) const;
  double state_norm(const Vec& x_full, Norm which) const;

  SparseMat A, B, M;             // condensed pair operators; B at unit trap strength
  SparseMat M_scalar, K_scalar;  // full single-field Gram blocks

 private:
  const FeSpace* space_;
};

// One Hermite-product component of an initial guess; phi/psi are the
// weights it contributes to the two fields.
struct GuessTerm {
  int m = 0, n = 0;
  double phi = 1.0, psi = 0.0;
};

// Nodal interpolant of sum_k coeff_k H_m(sqrt(omega) x) H_n(sqrt(omega) y)
// exp(-omega r^2/2), zeroed on the boundary and scaled so its discrete L2
// norm equals amplitude.
Vec superposition_guess(const GpSystem& sys, const std::vector<GuessTerm>& terms,
                        const GpParameters& p, double amplitude);

// Single-product guess for a branch label; vortex labels pair (m,n) on phi
// with (n,m) on psi.
Vec hermite_guess(const GpSystem& sys, const BranchLabel& label,
                  const GpParameters& p, double amplitude);

}  // namespace gpbif

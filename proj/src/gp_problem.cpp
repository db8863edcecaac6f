#include "gpbif/gp_problem.hpp"

#include <cmath>
#include <stdexcept>

namespace gpbif {

double hermite_eval(int j, double x) {
  double hm = 1.0;
  if (j == 0) return hm;
  double h = 2.0 * x;
  for (int k = 1; k < j; ++k) {
    double next = 2.0 * x * h - 2.0 * k * hm;
    hm = h;
    h = next;
  }
  return h;
}

GpSystem::GpSystem(const FeSpace& space) : space_(&space) {
  A = assemble_constant_matrix(space, MatrixKind::A, Dirichlet::Condense);
  B = assemble_constant_matrix(space, MatrixKind::B, Dirichlet::Condense);
  M = assemble_constant_matrix(space, MatrixKind::M, Dirichlet::Condense);
  M_scalar = assemble_scalar_matrix(space, MatrixKind::M, Dirichlet::Full);
  K_scalar = assemble_scalar_matrix(space, MatrixKind::K, Dirichlet::Full);
}

SparseMat GpSystem::linear_operator(const GpParameters& p) const {
  return A + (p.omega * p.omega) * B - p.mu * M;
}

Vec GpSystem::residual(const Vec& x_full, const GpParameters& p) const {
  SparseMat C;
  Vec n_vec;
  assemble_nonlinear(*space_, x_full, Dirichlet::Condense, C, n_vec);
  return linear_operator(p) * space_->restrict_state(x_full) + n_vec;
}

SparseMat GpSystem::jacobian(const Vec& x_full, const GpParameters& p) const {
  SparseMat C;
  Vec n_vec;
  assemble_nonlinear(*space_, x_full, Dirichlet::Condense, C, n_vec);
  return SparseMat(linear_operator(p) + C);
}

void GpSystem::residual_and_jacobian(const Vec& x_full, const GpParameters& p,
                                     Vec& r, SparseMat& J) const {
  SparseMat C;
  Vec n_vec;
  assemble_nonlinear(*space_, x_full, Dirichlet::Condense, C, n_vec);
  SparseMat lin = linear_operator(p);
  r = lin * space_->restrict_state(x_full) + n_vec;
  J = lin + C;
}

Observables GpSystem::observables(const Vec& x_full) const {
  const Index n = space_->n_s;
  if (x_full.size() != 2 * n)
    throw DimensionMismatch("observables: state length");
  Observables obs;
  if (x_full.isZero(0.0)) return obs;
  obs.n_bosons = x_full.head(n).dot(M_scalar * x_full.head(n)) +
                 x_full.tail(n).dot(M_scalar * x_full.tail(n));
  obs.rho_inf = 0.0;
  for (Index d = 0; d < n; ++d) {
    double rho = x_full[d] * x_full[d] + x_full[n + d] * x_full[n + d];
    if (rho > obs.rho_inf) obs.rho_inf = rho;
  }
  return obs;
}

double GpSystem::state_norm(const Vec& x_full, Norm which) const {
  const Index n = space_->n_s;
  if (x_full.size() != 2 * n)
    throw DimensionMismatch("state_norm: state length");
  if (x_full.isZero(0.0)) return 0.0;
  double sq = x_full.head(n).dot(M_scalar * x_full.head(n)) +
              x_full.tail(n).dot(M_scalar * x_full.tail(n));
  if (which == Norm::H1) {
    sq += x_full.head(n).dot(K_scalar * x_full.head(n)) +
          x_full.tail(n).dot(K_scalar * x_full.tail(n));
  }
  return std::sqrt(sq);
}

Vec superposition_guess(const GpSystem& sys, const std::vector<GuessTerm>& terms,
                        const GpParameters& p, double amplitude) {
  if (amplitude <= 0.0)
    throw std::invalid_argument("superposition_guess: amplitude must be positive");
  const FeSpace& space = sys.space();
  const double sq = std::sqrt(p.omega);
  Vec x = Vec::Zero(2 * space.n_s);
  for (Index d = 0; d < space.n_s; ++d) {
    if (space.dof_on_boundary[d]) continue;
    double px = space.dof_coords(d, 0), py = space.dof_coords(d, 1);
    double envelope = std::exp(-0.5 * p.omega * (px * px + py * py));
    for (const GuessTerm& t : terms) {
      double base = hermite_eval(t.m, sq * px) * hermite_eval(t.n, sq * py) * envelope;
      x[d] += t.phi * base;
      x[space.n_s + d] += t.psi * base;
    }
  }
  double nrm = sys.state_norm(x, Norm::L2);
  if (nrm == 0.0)
    throw std::invalid_argument("superposition_guess: zero guess");
  x *= amplitude / nrm;
  return x;
}

Vec hermite_guess(const GpSystem& sys, const BranchLabel& label,
                  const GpParameters& p, double amplitude) {
  std::vector<GuessTerm> terms;
  terms.push_back({label.m, label.n, 1.0, 0.0});
  if (label.vortex) terms.push_back({label.n, label.m, 0.0, 1.0});
  return superposition_guess(sys, terms, p, amplitude);
}

}  // namespace gpbif

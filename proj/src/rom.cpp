#include "gpbif/rom.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace gpbif {

Mat SnapshotSet::matrix() const {
  if (columns.empty()) return Mat();
  Mat S(columns.front().size(), count());
  for (Index k = 0; k < count(); ++k) S.col(k) = columns[k];
  return S;
}

namespace {

Vec apply_ip(const SparseMat* X, const Vec& v) { return X ? Vec(*X * v) : v; }

}  // namespace

double PodResult::tail(Index keep) const {
  double t = 0.0;
  for (Index i = keep; i < eigenvalues.size(); ++i)
    t += std::max(eigenvalues[i], 0.0);
  return t;
}

PodResult pod_basis(const Mat& S, const SparseMat* X, double tol, Index n_max) {
  if (S.cols() < 1) throw std::invalid_argument("pod_basis: no snapshots");
  if (!(tol > 0.0 && tol < 1.0))
    throw std::invalid_argument("pod_basis: tol must lie in (0,1)");

  const Index K = S.cols();
  Mat XS(S.rows(), K);
  for (Index k = 0; k < K; ++k) XS.col(k) = apply_ip(X, S.col(k));
  Mat G = S.transpose() * XS;
  G = 0.5 * (G + G.transpose());

  Eigen::SelfAdjointEigenSolver<Mat> eig(G);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("pod_basis: eigendecomposition failed");

  PodResult result;
  result.eigenvalues = eig.eigenvalues().reverse();
  double total = 0.0;
  for (Index i = 0; i < K; ++i) total += std::max(result.eigenvalues[i], 0.0);
  if (total <= 0.0) throw std::invalid_argument("pod_basis: all-zero snapshot set");

  const double floor = result.eigenvalues[0] * 1e-14;
  Index N = 0;
  double kept = 0.0;
  while (N < K && N < n_max) {
    if (result.eigenvalues[N] <= floor) break;
    kept += result.eigenvalues[N];
    ++N;
    if (kept / total >= 1.0 - tol) break;
  }
  if (N == 0) N = 1;

  result.U.resize(S.rows(), N);
  for (Index i = 0; i < N; ++i) {
    result.U.col(i) =
        S * eig.eigenvectors().col(K - 1 - i) / std::sqrt(result.eigenvalues[i]);
  }

  // Two modified Gram-Schmidt passes in the X inner product.
  for (int pass = 0; pass < 2; ++pass) {
    for (Index i = 0; i < N; ++i) {
      for (Index j = 0; j < i; ++j)
        result.U.col(i) -= result.U.col(j).dot(apply_ip(X, result.U.col(i))) *
                           result.U.col(j);
      double nrm = std::sqrt(result.U.col(i).dot(apply_ip(X, result.U.col(i))));
      result.U.col(i) /= nrm;
    }
  }
  return result;
}

double ReducedBasis::tail(Index keep) const {
  double t = 0.0;
  for (Index i = keep; i < eigenvalues.size(); ++i)
    t += std::max(eigenvalues[i], 0.0);
  return t;
}

ReducedBasis pod(const SnapshotSet& snaps, const GpSystem& sys, Norm ip,
                 double tol, Index n_max) {
  ReducedBasis rb;
  rb.ip = ip;
  rb.X = gram_matrix(sys.space(), ip, Dirichlet::Full);
  PodResult p = pod_basis(snaps.matrix(), &rb.X, tol, n_max);
  rb.V = std::move(p.U);
  rb.eigenvalues = std::move(p.eigenvalues);

  const FeSpace& space = sys.space();
  SparseMat A = assemble_constant_matrix(space, MatrixKind::A, Dirichlet::Full);
  SparseMat B = assemble_constant_matrix(space, MatrixKind::B, Dirichlet::Full);
  SparseMat M = assemble_constant_matrix(space, MatrixKind::M, Dirichlet::Full);
  rb.A_N = rb.V.transpose() * (A * rb.V);
  rb.B_N = rb.V.transpose() * (B * rb.V);
  rb.M_N = rb.V.transpose() * (M * rb.V);
  return rb;
}

Vec project_state(const ReducedBasis& rb, const Vec& x_full) {
  if (x_full.size() != rb.V.rows())
    throw DimensionMismatch("project_state: state length");
  return rb.V.transpose() * (rb.X * x_full);
}

Vec lift_state(const ReducedBasis& rb, const Vec& xN) {
  if (xN.size() != rb.size()) throw DimensionMismatch("lift_state: coefficient length");
  return rb.V * xN;
}

void fill_reduced_record(const ReducedBasis& rb, const Vec& xN,
                         SolveResult& out) {
  double m = xN.dot(rb.M_N * xN);
  double a = xN.dot(rb.A_N * xN);
  out.norm_l2 = std::sqrt(std::max(0.0, m));
  out.norm_h1 = std::sqrt(std::max(0.0, m + 2.0 * a));
  Observables obs;
  obs.n_bosons = m;
  const Index n = out.state.size() / 2;
  for (Index d = 0; d < n; ++d) {
    double rho = out.state[d] * out.state[d] +
                 out.state[n + d] * out.state[n + d];
    if (rho > obs.rho_inf) obs.rho_inf = rho;
  }
  out.observables = obs;
}

Vec reduced_residual(const ReducedBasis& rb, const GpSystem& sys, const Vec& xN,
                     const GpParameters& p) {
  if (xN.size() != rb.size()) throw DimensionMismatch("reduced_residual: length");
  Vec lifted = lift_state(rb, xN);
  SparseMat C;
  Vec n_vec;
  assemble_nonlinear(sys.space(), lifted, Dirichlet::Full, C, n_vec);
  Mat lin = rb.A_N + (p.omega * p.omega) * rb.B_N - p.mu * rb.M_N;
  return lin * xN + rb.V.transpose() * n_vec;
}

Mat reduced_jacobian(const ReducedBasis& rb, const GpSystem& sys, const Vec& xN,
                     const GpParameters& p) {
  if (xN.size() != rb.size()) throw DimensionMismatch("reduced_jacobian: length");
  Vec lifted = lift_state(rb, xN);
  SparseMat C;
  Vec n_vec;
  assemble_nonlinear(sys.space(), lifted, Dirichlet::Full, C, n_vec);
  Mat lin = rb.A_N + (p.omega * p.omega) * rb.B_N - p.mu * rb.M_N;
  return lin + rb.V.transpose() * (C * rb.V);
}

namespace {

struct RomNewtonSystem {
  const ReducedBasis& rb;
  const GpSystem& sys;
  GpParameters p;
  Mat J;

  Vec residual(const Vec& xN) {
    Vec lifted = rb.V * xN;
    SparseMat C;
    Vec n_vec;
    assemble_nonlinear(sys.space(), lifted, Dirichlet::Full, C, n_vec);
    Mat lin = rb.A_N + (p.omega * p.omega) * rb.B_N - p.mu * rb.M_N;
    J = lin + rb.V.transpose() * (C * rb.V);
    return lin * xN + rb.V.transpose() * n_vec;
  }
  Vec newton_step(const Vec&, const Vec& r) {
    Vec dx = J.partialPivLu().solve(r);
    if (!dx.allFinite()) throw SingularMatrix("reduced newton step not finite");
    return dx;
  }
};

}  // namespace

SolveResult RomBackend::solve(const Vec& guess_full, const GpParameters& p,
                              const NewtonConfig& cfg) {
  RomNewtonSystem nls{*basis_, *sys_, p, {}};
  auto [xN, report] = newton_solve(project_state(*basis_, guess_full), nls, cfg);
  SolveResult out;
  out.state = lift_state(*basis_, xN);
  out.report = std::move(report);
  fill_reduced_record(*basis_, xN, out);
  return out;
}

}  // namespace gpbif

#pragma once

#include <vector>

#include "gpbif/continuation.hpp"

namespace gpbif {

struct SnapshotTag {
  BranchLabel label;
  double mu = 0.0;
  double omega = 0.0;
};

// Converged full-order states collected during an offline sweep.
struct SnapshotSet {
  std::vector<Vec> columns;  // each of length 2*n_s
  std::vector<SnapshotTag> tags;

  void add(const Vec& state, const SnapshotTag& tag) {
    columns.push_back(state);
    tags.push_back(tag);
  }
  Index count() const { return static_cast<Index>(columns.size()); }
  Mat matrix() const;
};

// Energy-truncated basis from the eigendecomposition of the snapshot Gram
// matrix S' X S; columns are X-orthonormalized by modified Gram-Schmidt.
// X = nullptr selects the Euclidean inner product.
struct PodResult {
  Mat U;            // orthonormal columns
  Vec eigenvalues;  // all Gram eigenvalues, descending
  double tail(Index keep) const;
};

PodResult pod_basis(const Mat& S, const SparseMat* X, double tol, Index n_max);

struct ReducedBasis {
  Mat V;            // 2*n_s x N, zero rows at Dirichlet dofs
  Norm ip = Norm::H1;
  SparseMat X;      // full-dof Gram matrix of ip
  Vec eigenvalues;  // descending, all modes
  Mat A_N, B_N, M_N;

  Index size() const { return V.cols(); }
  double tail(Index keep) const;
};

// Pooled POD over the snapshot set plus Galerkin projection of the
// parameter-independent operators.
ReducedBasis pod(const SnapshotSet& snaps, const GpSystem& sys, Norm ip,
                 double tol, Index n_max);

Vec project_state(const ReducedBasis& rb, const Vec& x_full);  // V' X x
Vec lift_state(const ReducedBasis& rb, const Vec& xN);         // V x

// Observables and trivial-detection norms of the lifted state, computed from
// reduced coordinates (N = xN'M_N xN, H1 Gram = M_N + 2A_N since K = 2A);
// only the density max scans out.state. Keeps the trace loop free of
// full-order matrix work when the backend is reduced.
void fill_reduced_record(const ReducedBasis& rb, const Vec& xN,
                         SolveResult& out);

// Galerkin-reduced Newton system; the cubic term is assembled at the lifted
// state and projected, the deliberate full-order-cost baseline.
Vec reduced_residual(const ReducedBasis& rb, const GpSystem& sys, const Vec& xN,
                     const GpParameters& p);
Mat reduced_jacobian(const ReducedBasis& rb, const GpSystem& sys, const Vec& xN,
                     const GpParameters& p);

struct RomBackend final : ContinuationBackend {
  RomBackend(const GpSystem& sys, const ReducedBasis& basis)
      : sys_(&sys), basis_(&basis) {}
  SolveResult solve(const Vec& guess_full, const GpParameters& p,
                    const NewtonConfig& cfg) override;
  const GpSystem& system() const override { return *sys_; }
  const ReducedBasis& basis() const { return *basis_; }

 private:
  const GpSystem* sys_;
  const ReducedBasis* basis_;
};

}  // namespace gpbif

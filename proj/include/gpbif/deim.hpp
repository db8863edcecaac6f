#pragma once

#include <Eigen/LU>

#include "gpbif/rom.hpp"

namespace gpbif {

// q = 0 selects the basis size by the energy tolerance; q > 0 requests a
// fixed interpolation rank (truncated to the snapshot rank with a warning).
struct DeimOptions {
  Index q = 0;
  double tol = 1e-9;
};

// One sample element prepared for online assembly: its gathered basis rows
// and the interpolation slots owned by its local dofs.  Everything the online
// sweep touches lives here, so its cost is independent of the full dimension.
struct DeimElement {
  double det = 0.0;
  Mat V_e;  // 2*nd x N: basis rows of the first-field dofs, then the second
  std::vector<std::pair<int, Index>> phi_slots;  // (local dof, magic slot)
  std::vector<std::pair<int, Index>> psi_slots;
};

struct DeimModel {
  Mat H;                                // 2*n_s x Q nonlinearity basis
  std::vector<Index> magic;             // interpolation dof indices, distinct
  Eigen::PartialPivLU<Mat> interp;      // factorization of P'H
  Mat projection;                       // V'H (P'H)^{-1}, N x Q
  std::vector<Index> sample_elements;   // elements touching any magic dof
  Vec eigenvalues;                      // nonlinearity POD spectrum, descending
  std::vector<DeimElement> online;      // per-sample-element assembly data
  FeTables tab;                         // reference tables shared by elements

  Index size() const { return static_cast<Index>(magic.size()); }
  double tail(Index keep) const;
};

// Assembled cubic vector of a converged state with boundary rows zeroed:
// the interpolation target collected during the offline sweep.
Vec nonlinearity_snapshot(const GpSystem& sys, const Vec& state_full);

DeimModel deim_build(const Mat& nonlinear_snapshots, const DeimOptions& opt,
                     const ReducedBasis& basis, const FeSpace& space);

// Rebuild the derived members (P'H factorization, projection, sample
// elements) of a model whose H, magic and eigenvalues are already set; the
// persistence layer stores only those three.
void deim_finalize(DeimModel& model, const ReducedBasis& basis,
                   const FeSpace& space);

// Interpolatory reconstruction H (P'H)^{-1} P' g of a full-length vector.
Vec deim_reconstruct(const DeimModel& model, const Vec& g_full);

// Reduced cubic residual g_N and Jacobian block C_N at reduced state xN,
// assembling only over sample_elements; cost independent of the full-order
// dimension for fixed Q.
void deim_reduced_nonlinearity(const DeimModel& model, const ReducedBasis& basis,
                               const FeSpace& space, const Vec& xN, Vec& g_N,
                               Mat& C_N);

struct DeimBackend final : ContinuationBackend {
  DeimBackend(const GpSystem& sys, const ReducedBasis& basis,
              const DeimModel& model)
      : sys_(&sys), basis_(&basis), model_(&model) {}
  SolveResult solve(const Vec& guess_full, const GpParameters& p,
                    const NewtonConfig& cfg) override;
  const GpSystem& system() const override { return *sys_; }

 private:
  const GpSystem* sys_;
  const ReducedBasis* basis_;
  const DeimModel* model_;
  // Continuation feeds the previous solution back as the next guess; keeping
  // its reduced coordinates avoids re-projecting a state this backend lifted.
  Vec last_full_;
  Vec last_reduced_;
};

}  // namespace gpbif

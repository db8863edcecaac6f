#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "gpbif/gp_problem.hpp"
#include "gpbif/newton.hpp"

namespace gpbif {

// Uniform grid endpoints-inclusive; stable against accumulation drift.
Vec uniform_grid(double lo, double hi, Index count);

struct ParameterGrid {
  Vec mu;     // strictly increasing, uniform spacing
  Vec omega;  // singleton for one-parameter studies
  void validate() const;
  double mu_step() const { return mu.size() > 1 ? mu[1] - mu[0] : 0.0; }
};

struct ContinuationConfig {
  double eps_bif = 1e-4;        // trivial/bifurcated threshold on the state norm
  double guess_amplitude = 1.0; // 0 selects the zero guess (trivial branch)
  // The analytic guess is first supplied at mu >= mu_crit + guess_offset.
  // Immediately past a degenerate onset the target states are tiny and the
  // mesh-preferred mixed state captures every guess; a small standoff keeps
  // the first guessed point inside the correct basin.
  double guess_offset = 0.005;
  Norm eps_norm = Norm::L2;
  NewtonConfig newton;
};

struct BranchRecord {
  double mu = 0.0;
  double omega = 0.0;
  double n_bosons = 0.0;
  double rho_inf = 0.0;
  int newton_iters = 0;
  bool converged = false;
};

struct BranchCurve {
  BranchLabel label;
  std::vector<BranchRecord> records;           // ordered by mu
  std::optional<double> first_nontrivial_mu;   // smallest mu with norm >= eps_bif
  double wall_seconds = 0.0;                   // accumulated solve time
  long total_newton_iters = 0;
};

struct SolveResult {
  Vec state;  // full length 2*n_s
  NewtonReport report;
  // Reduced backends fill these from reduced coordinates so the trace loop
  // skips full-order matrix work; empty means compute from the state.
  std::optional<Observables> observables;
  std::optional<double> norm_l2;
  std::optional<double> norm_h1;
};

// Common contract of the full-order and reduced online solvers, so branch
// tracing runs unchanged over either.
struct ContinuationBackend {
  virtual ~ContinuationBackend() = default;
  virtual SolveResult solve(const Vec& guess_full, const GpParameters& p,
                            const NewtonConfig& cfg) = 0;
  virtual const GpSystem& system() const = 0;
};

struct FomBackend final : ContinuationBackend {
  explicit FomBackend(const GpSystem& sys) : sys_(&sys) {}
  SolveResult solve(const Vec& guess_full, const GpParameters& p,
                    const NewtonConfig& cfg) override;
  const GpSystem& system() const override { return *sys_; }

 private:
  const GpSystem* sys_;
};

bool detect_bifurcated(const GpSystem& sys, const Vec& state_full,
                       const ContinuationConfig& cfg);

// Observer invoked at every converged grid point (snapshot collection).
using StateObserver =
    std::function<void(const BranchLabel&, const GpParameters&, const Vec&)>;

// Sweep the mu grid at one trap strength. Each point starts from the
// previous solution once the branch has bifurcated, from the (possibly
// superposed) Hermite guess otherwise; the Hermite guess is supplied only
// from the branch's linear limit (m+n+1)*omega upward, since below it the
// guessed mode is not a solution and could only capture a different branch.
// Non-convergence is recorded and the guess policy resets. guess_terms
// overrides the label-derived guess.
BranchCurve trace_branch(const BranchLabel& label, const ParameterGrid& grid,
                         ContinuationBackend& backend,
                         const ContinuationConfig& cfg,
                         const std::vector<GuessTerm>& guess_terms = {},
                         const StateObserver& observer = {});

// One request per traced branch; empty terms fall back to hermite_guess.
// A positive amplitude overrides cfg.guess_amplitude for this branch only,
// for branches whose capture basin needs a non-default guess size.
struct BranchRequest {
  BranchLabel label;
  std::vector<GuessTerm> guess_terms;
  double amplitude = 0.0;
};

// All branches over all omegas: |labels| x |omega| curves, labels outermost.
std::vector<BranchCurve> trace_diagram(const std::vector<BranchRequest>& requests,
                                       const ParameterGrid& grid,
                                       ContinuationBackend& backend,
                                       const ContinuationConfig& cfg,
                                       const StateObserver& observer = {});

}  // namespace gpbif

#include "gpbif/continuation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gpbif {

Vec uniform_grid(double lo, double hi, Index count) {
  if (count < 1) throw std::invalid_argument("uniform_grid: empty");
  Vec g(count);
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  for (Index i = 0; i < count; ++i)
    g[i] = (lo * static_cast<double>(count - 1 - i) + hi * static_cast<double>(i)) /
           static_cast<double>(count - 1);
  return g;
}

void ParameterGrid::validate() const {
  if (mu.size() < 1) throw std::invalid_argument("ParameterGrid: empty mu grid");
  if (omega.size() < 1) throw std::invalid_argument("ParameterGrid: empty omega grid");
  for (Index i = 1; i < mu.size(); ++i)
    if (mu[i] <= mu[i - 1])
      throw std::invalid_argument("ParameterGrid: mu not strictly increasing");
  for (Index i = 1; i < omega.size(); ++i)
    if (omega[i] <= omega[i - 1])
      throw std::invalid_argument("ParameterGrid: omega not strictly increasing");
  if (mu.size() > 2) {
    double step = mu[1] - mu[0];
    for (Index i = 1; i < mu.size(); ++i)
      if (std::abs((mu[i] - mu[i - 1]) - step) > 1e-12)
        throw std::invalid_argument("ParameterGrid: mu spacing not uniform");
  }
}

namespace {

// Adapts GpSystem to the newton_solve contract on interior vectors. The
// Jacobian assembled during residual() is reused by the following
// newton_step(), which newton_solve always calls at the same iterate.
struct FomNewtonSystem {
  const GpSystem& sys;
  GpParameters p;
  SparseMat J;

  Vec residual(const Vec& xi) {
    Vec r;
    sys.residual_and_jacobian(sys.space().prolong_state(xi), p, r, J);
    return r;
  }
  Vec newton_step(const Vec&, const Vec& r) { return sparse_solve(J, r); }
};

}  // namespace

SolveResult FomBackend::solve(const Vec& guess_full, const GpParameters& p,
                              const NewtonConfig& cfg) {
  FomNewtonSystem nls{*sys_, p, {}};
  auto [xi, report] =
      newton_solve(sys_->space().restrict_state(guess_full), nls, cfg);
  return {sys_->space().prolong_state(xi), std::move(report)};
}

bool detect_bifurcated(const GpSystem& sys, const Vec& state_full,
                       const ContinuationConfig& cfg) {
  return sys.state_norm(state_full, cfg.eps_norm) >= cfg.eps_bif;
}

namespace {

// Linear limit of the chosen guess: the smallest mu_crit among its modes.
double guess_onset(const BranchLabel& label,
                   const std::vector<GuessTerm>& terms, double omega) {
  if (terms.empty()) return label.mu_crit(omega);
  double mc = std::numeric_limits<double>::infinity();
  for (const GuessTerm& t : terms)
    mc = std::min(mc, (t.m + t.n + 1) * omega);
  return mc;
}

BranchCurve trace_single_omega(const BranchLabel& label, const Vec& mu_grid,
                               double omega, ContinuationBackend& backend,
                               const ContinuationConfig& cfg,
                               const std::vector<GuessTerm>& guess_terms,
                               const StateObserver& observer) {
  const GpSystem& sys = backend.system();
  BranchCurve curve;
  curve.label = label;

  // Below the linear limit the guessed mode does not exist as a solution;
  // a finite-amplitude guess there can only land on a different branch, so
  // the chosen guess stays zero until mu clears the onset plus the standoff.
  const double mu_c = guess_onset(label, guess_terms, omega);

  const Vec zero = Vec::Zero(2 * sys.space().n_s);
  Vec prev = zero;
  bool prev_bifurcated = false;
  Vec guess_store;
  for (Index j = 0; j < mu_grid.size(); ++j) {
    GpParameters p{mu_grid[j], omega};
    bool past_onset = p.mu >= mu_c + cfg.guess_offset - 1e-9;
    const Vec* guess = &zero;
    if (prev_bifurcated) {
      guess = &prev;
    } else if (past_onset && cfg.guess_amplitude != 0.0) {
      guess_store = guess_terms.empty()
                        ? hermite_guess(sys, label, p, cfg.guess_amplitude)
                        : superposition_guess(sys, guess_terms, p,
                                              cfg.guess_amplitude);
      guess = &guess_store;
    }

    auto t0 = std::chrono::steady_clock::now();
    SolveResult sol = backend.solve(*guess, p, cfg.newton);
    curve.wall_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    curve.total_newton_iters += sol.report.iterations;

    BranchRecord rec;
    rec.mu = p.mu;
    rec.omega = p.omega;
    rec.newton_iters = sol.report.iterations;
    rec.converged = sol.report.converged;
    if (sol.report.converged) {
      double nrm = cfg.eps_norm == Norm::L2
                       ? (sol.norm_l2 ? *sol.norm_l2
                                      : sys.state_norm(sol.state, Norm::L2))
                       : (sol.norm_h1 ? *sol.norm_h1
                                      : sys.state_norm(sol.state, Norm::H1));
      prev_bifurcated = nrm >= cfg.eps_bif;
      if (prev_bifurcated) {
        Observables obs =
            sol.observables ? *sol.observables : sys.observables(sol.state);
        rec.n_bosons = obs.n_bosons;
        rec.rho_inf = obs.rho_inf;
        if (!curve.first_nontrivial_mu) curve.first_nontrivial_mu = p.mu;
      }
      if (observer) observer(label, p, sol.state);
      prev = std::move(sol.state);
    } else {
      prev.setZero();  // reset the guess policy after a failure
      prev_bifurcated = false;
    }
    curve.records.push_back(rec);
  }
  return curve;
}

}  // namespace

BranchCurve trace_branch(const BranchLabel& label, const ParameterGrid& grid,
                         ContinuationBackend& backend,
                         const ContinuationConfig& cfg,
                         const std::vector<GuessTerm>& guess_terms,
                         const StateObserver& observer) {
  grid.validate();
  if (grid.omega.size() != 1)
    throw std::invalid_argument("trace_branch: expects a single omega");
  return trace_single_omega(label, grid.mu, grid.omega[0], backend, cfg,
                            guess_terms, observer);
}

std::vector<BranchCurve> trace_diagram(const std::vector<BranchRequest>& requests,
                                       const ParameterGrid& grid,
                                       ContinuationBackend& backend,
                                       const ContinuationConfig& cfg,
                                       const StateObserver& observer) {
  grid.validate();
  if (requests.empty())
    throw std::invalid_argument("trace_diagram: no branch labels");
  std::vector<BranchCurve> curves;
  curves.reserve(requests.size() * static_cast<size_t>(grid.omega.size()));
  for (const BranchRequest& req : requests) {
    ContinuationConfig branch_cfg = cfg;
    if (req.amplitude > 0.0) branch_cfg.guess_amplitude = req.amplitude;
    for (Index w = 0; w < grid.omega.size(); ++w) {
      curves.push_back(trace_single_omega(req.label, grid.mu, grid.omega[w],
                                          backend, branch_cfg, req.guess_terms,
                                          observer));
    }
  }
  return curves;
}

}  // namespace gpbif

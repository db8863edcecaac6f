#pragma once

#include <utility>
#include <vector>

#include "gpbif/types.hpp"

namespace gpbif {

struct NewtonConfig {
  double tol = 1e-10;
  int max_iter = 50;
  double damping = 1.0;       // step factor in (0,1]
  enum class Criterion { ResidualNorm, StepNorm };
  Criterion criterion = Criterion::ResidualNorm;
};

struct NewtonReport {
  bool converged = false;
  int iterations = 0;
  std::vector<double> residual_history;  // length iterations+1
  std::vector<double> step_history;      // length iterations
};

// Direct sparse solve with one iterative-refinement pass; enforces a 1e-10
// relative residual and throws SingularMatrix otherwise.
Vec sparse_solve(const SparseMat& A, const Vec& b);

// Newton-Kantorovich update x <- x - damping * dx with J(x) dx = G(x).
// System provides residual(x) and newton_step(x, r) where newton_step is
// always called at the x of the preceding residual evaluation.
template <class System>
std::pair<Vec, NewtonReport> newton_solve(Vec x, System&& sys,
                                          const NewtonConfig& cfg) {
  NewtonReport report;
  Vec r = sys.residual(x);
  report.residual_history.push_back(r.norm());
  if (cfg.criterion == NewtonConfig::Criterion::ResidualNorm &&
      report.residual_history.back() <= cfg.tol) {
    report.converged = true;
    return {std::move(x), std::move(report)};
  }
  for (int k = 0; k < cfg.max_iter; ++k) {
    Vec dx;
    try {
      dx = sys.newton_step(x, r);
    } catch (const SingularMatrix&) {
      return {std::move(x), std::move(report)};  // converged stays false
    }
    x -= cfg.damping * dx;
    r = sys.residual(x);
    report.iterations = k + 1;
    report.residual_history.push_back(r.norm());
    report.step_history.push_back(dx.norm());
    bool done = (cfg.criterion == NewtonConfig::Criterion::ResidualNorm)
                    ? report.residual_history.back() <= cfg.tol
                    : report.step_history.back() <= cfg.tol;
    if (done) {
      report.converged = true;
      break;
    }
  }
  return {std::move(x), std::move(report)};
}

}  // namespace gpbif

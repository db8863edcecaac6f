#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "gpbif/newton.hpp"

using namespace gpbif;

namespace {

struct LinearSystem {
  SparseMat A;
  Vec b;
  Vec residual(const Vec& x) { return A * x - b; }
  Vec newton_step(const Vec&, const Vec& r) { return sparse_solve(A, r); }
};

struct CubeRoot {
  // f(x) = x^3 - 2 as a one-dimensional system
  Vec residual(const Vec& x) {
    Vec r(1);
    r[0] = x[0] * x[0] * x[0] - 2.0;
    return r;
  }
  Vec newton_step(const Vec& x, const Vec& r) {
    Vec dx(1);
    dx[0] = r[0] / (3.0 * x[0] * x[0]);
    return dx;
  }
};

SparseMat random_spd(Index n) {
  Mat L = Mat::Random(n, n);
  Mat S = L * L.transpose() + static_cast<double>(n) * Mat::Identity(n, n);
  return S.sparseView();
}

}  // namespace

TEST_CASE("sparse_solve on a diagonal system is elementwise division") {
  Index n = 10;
  std::vector<Triplet> trip;
  for (Index i = 0; i < n; ++i) trip.emplace_back(i, i, 2.0 + i);
  SparseMat A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Vec b = Vec::LinSpaced(n, 1.0, 10.0);
  Vec x = sparse_solve(A, b);
  for (Index i = 0; i < n; ++i)
    CHECK(x[i] == doctest::Approx(b[i] / (2.0 + i)).epsilon(1e-15));
}

TEST_CASE("sparse_solve meets the residual contract on random SPD systems") {
  std::srand(11);
  for (int trial = 0; trial < 3; ++trial) {
    SparseMat A = random_spd(50);
    Vec b = Vec::Random(50);
    Vec x = sparse_solve(A, b);
    CHECK((A * x - b).norm() <= 1e-10 * b.norm());
  }
}

TEST_CASE("sparse_solve rejects a rank-deficient matrix") {
  std::srand(5);
  Mat D = Mat::Random(6, 6);
  D.row(3) = D.row(1);  // duplicated row: rank-deficient by construction
  SparseMat A = D.sparseView();
  Vec b = Vec::LinSpaced(6, 1.0, 6.0);  // b[1] != b[3], no exact solution
  CHECK_THROWS_AS(sparse_solve(A, b), SingularMatrix);
}

TEST_CASE("newton converges in one iteration on a linear system") {
  std::srand(23);
  LinearSystem sys{random_spd(30), Vec::Random(30)};
  NewtonConfig cfg;
  auto [x, rep] = newton_solve(Vec::Zero(30), sys, cfg);
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  CHECK((sys.A * x - sys.b).norm() <= 1e-9);
  CHECK(rep.residual_history.size() == rep.iterations + 1);
}

TEST_CASE("newton finds the cube root of two with quadratic decay") {
  NewtonConfig cfg;
  cfg.tol = 1e-14;
  Vec x0(1);
  x0[0] = 1.0;
  auto [x, rep] = newton_solve(x0, CubeRoot{}, cfg);
  CHECK(rep.converged);
  CHECK(x[0] == doctest::Approx(std::cbrt(2.0)).epsilon(1e-14));

  // r_{k+1} <= C r_k^2 over the tail of the history
  const auto& h = rep.residual_history;
  REQUIRE(h.size() >= 4);
  for (size_t k = h.size() - 4; k + 1 < h.size(); ++k) {
    if (h[k + 1] == 0.0) continue;
    CHECK(h[k + 1] <= 1e3 * h[k] * h[k]);
  }
}

TEST_CASE("newton takes zero steps when started at the root") {
  Vec x0(1);
  x0[0] = std::cbrt(2.0);
  NewtonConfig cfg;
  cfg.tol = 1e-10;
  auto [x, rep] = newton_solve(x0, CubeRoot{}, cfg);
  CHECK(rep.converged);
  CHECK(rep.iterations == 0);
  CHECK(rep.residual_history.size() == 1);
}

TEST_CASE("newton honors the step-norm criterion") {
  NewtonConfig cfg;
  cfg.tol = 1e-12;
  cfg.criterion = NewtonConfig::Criterion::StepNorm;
  Vec x0(1);
  x0[0] = 1.5;
  auto [x, rep] = newton_solve(x0, CubeRoot{}, cfg);
  CHECK(rep.converged);
  CHECK(rep.step_history.back() <= 1e-12);
  CHECK(x[0] == doctest::Approx(std::cbrt(2.0)).epsilon(1e-13));
}

TEST_CASE("newton reports non-convergence at the iteration cap") {
  NewtonConfig cfg;
  cfg.tol = 1e-16;
  cfg.max_iter = 2;
  Vec x0(1);
  x0[0] = 50.0;
  auto [x, rep] = newton_solve(x0, CubeRoot{}, cfg);
  CHECK_FALSE(rep.converged);
  CHECK(rep.iterations == 2);
}

TEST_CASE("newton iterates are deterministic") {
  std::srand(31);
  SparseMat A = random_spd(20);
  Vec b = Vec::Random(20);
  NewtonConfig cfg;
  auto [x1, r1] = newton_solve(Vec::Zero(20), LinearSystem{A, b}, cfg);
  auto [x2, r2] = newton_solve(Vec::Zero(20), LinearSystem{A, b}, cfg);
  CHECK((x1 - x2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r1.residual_history == r2.residual_history);
}

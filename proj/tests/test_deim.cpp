#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>
#include <cstdlib>
#include <set>

#include "gpbif/deim.hpp"

using namespace gpbif;

namespace {

// Shared offline run: fine-grid sweep so the snapshot set covers the
// near-critical region, where interpolation errors are amplified most.
struct DeimFixture {
  FeSpace space;
  GpSystem sys;
  ParameterGrid grid;
  SnapshotSet snaps;
  Mat nonlin;
  ReducedBasis rb;      // tight state basis, oracle-grade
  DeimModel model;      // near-full interpolation rank
  DeimModel model_def;  // default energy rule

  DeimFixture() : space(build_mesh(12.0, 12, 2)), sys(space) {
    FomBackend backend(sys);
    ContinuationConfig cfg;
    grid.mu = uniform_grid(0.0, 1.0, 81);
    grid.omega = Vec::Constant(1, 0.2);
    std::vector<Vec> cols;
    StateObserver collect = [&](const BranchLabel& label, const GpParameters& p,
                                const Vec& x) {
      snaps.add(x, {label, p.mu, p.omega});
      cols.push_back(nonlinearity_snapshot(sys, x));
    };
    std::vector<BranchRequest> reqs = {{{0, 0, false}, {}}, {{0, 1, true}, {}}};
    trace_diagram(reqs, grid, backend, cfg, collect);

    nonlin.resize(2 * space.n_s, static_cast<Index>(cols.size()));
    for (size_t k = 0; k < cols.size(); ++k)
      nonlin.col(static_cast<Index>(k)) = cols[k];
    rb = pod(snaps, sys, Norm::H1, 1e-13, 200);
    model = deim_build(nonlin, {0, 1e-15}, rb, space);
    model_def = deim_build(nonlin, {0, 1e-9}, rb, space);
  }
};

const DeimFixture& fixture() {
  static DeimFixture f;
  return f;
}

double interp_amplification(const DeimModel& m) {
  Mat inv = m.interp.solve(Mat::Identity(m.size(), m.size()));
  return inv.jacobiSvd().singularValues()(0);
}

}  // namespace

TEST_CASE("single-snapshot interpolation picks the largest entry") {
  Mat S(8, 1);
  S.col(0) << 0.0, 2.0, -3.0, 3.0, 1.0, 0.0, -3.0, 2.0;
  // |u| peaks at indices 2, 3, 6 with value 3; the greedy rule takes the first
  ReducedBasis dummy;
  dummy.V = Mat::Identity(8, 2);
  FeSpace space = build_mesh(12.0, 2, 1);
  DeimModel model = deim_build(S, {0, 1e-9}, dummy, space);
  CHECK(model.size() == 1);
  CHECK(model.magic[0] == 2);
}

TEST_CASE("disjoint-support snapshots interpolate exactly") {
  Mat S = Mat::Zero(12, 3);
  S(1, 0) = 2.0;
  S(5, 1) = -1.5;
  S(9, 2) = 0.7;
  ReducedBasis dummy;
  dummy.V = Mat::Identity(12, 3);
  FeSpace space = build_mesh(12.0, 2, 1);
  DeimModel model = deim_build(S, {0, 1e-9}, dummy, space);
  REQUIRE(model.size() == 3);
  std::set<Index> got(model.magic.begin(), model.magic.end());
  CHECK(got == std::set<Index>({1, 5, 9}));
  for (Index k = 0; k < 3; ++k) {
    Vec err = deim_reconstruct(model, S.col(k)) - S.col(k);
    CHECK(err.cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("requested rank beyond snapshot rank is truncated") {
  std::srand(97);
  Mat S(30, 4);
  S.col(0) = Vec::Random(30);
  S.col(1) = 2.0 * S.col(0);
  S.col(2) = Vec::Random(30);
  S.col(3) = S.col(0) - 3.0 * S.col(2);
  ReducedBasis dummy;
  dummy.V = Mat::Identity(30, 2);
  FeSpace space = build_mesh(12.0, 2, 1);
  DeimModel model = deim_build(S, {4, 1e-9}, dummy, space);
  CHECK(model.size() == 2);  // rank 2 by construction
}

TEST_CASE("magic indices are distinct interior dofs with covered supports") {
  const DeimFixture& F = fixture();
  const DeimModel& m = F.model_def;
  CHECK(m.size() >= 2);
  std::set<Index> distinct(m.magic.begin(), m.magic.end());
  CHECK(distinct.size() == m.magic.size());
  for (Index idx : m.magic)
    CHECK_FALSE(F.space.dof_on_boundary[idx % F.space.n_s]);
  CHECK_FALSE(m.sample_elements.empty());

  std::set<Index> sampled(m.sample_elements.begin(), m.sample_elements.end());
  for (Index idx : m.magic) {
    Index d = idx % F.space.n_s;
    for (Index e = 0; e < F.space.mesh.n_triangles(); ++e)
      for (Index k = 0; k < F.space.element_dofs.cols(); ++k)
        if (F.space.element_dofs(e, k) == d) CHECK(sampled.count(e) == 1);
  }
}

TEST_CASE("interpolation is exact at magic indices for any state") {
  const DeimFixture& F = fixture();
  std::srand(101);
  Vec x = F.space.prolong_state(Vec::Random(2 * F.space.n_interior()));
  Vec g = nonlinearity_snapshot(F.sys, x);
  Vec rec = deim_reconstruct(F.model_def, g);
  double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  for (Index i = 0; i < F.model_def.size(); ++i)
    CHECK(std::abs(rec[F.model_def.magic[i]] - g[F.model_def.magic[i]]) <=
          1e-12 * scale);
}

TEST_CASE("training snapshots are reconstructed within the amplified tail bound") {
  // the interpolation error bound carries the |(P'H)^{-1}| factor; the
  // unamplified eigenvalue tail alone is not an upper bound
  const DeimFixture& F = fixture();
  const DeimModel& m = F.model_def;
  double amp = interp_amplification(m);
  double bound = amp * amp * m.tail(m.size()) + 1e-10;
  for (Index k = 0; k < F.nonlin.cols(); ++k) {
    Vec err = deim_reconstruct(m, F.nonlin.col(k)) - F.nonlin.col(k);
    CHECK(err.squaredNorm() <= bound);
  }
}

TEST_CASE("full-rank interpolation reproduces the span") {
  const DeimFixture& F = fixture();
  std::vector<Index> nonzero;
  for (Index k = 0; k < F.nonlin.cols(); ++k)
    if (F.nonlin.col(k).norm() > 1e-8) nonzero.push_back(k);
  REQUIRE(nonzero.size() >= 6);
  Mat S(2 * F.space.n_s, 6);
  for (Index k = 0; k < 6; ++k) {
    Index pick = nonzero[static_cast<size_t>(k) * (nonzero.size() - 1) / 5];
    S.col(k) = F.nonlin.col(pick) / F.nonlin.col(pick).norm();
  }
  DeimModel model = deim_build(S, {6, 1e-9}, F.rb, F.space);
  REQUIRE(model.size() == 6);
  for (Index k = 0; k < 6; ++k) {
    Vec err = deim_reconstruct(model, S.col(k)) - S.col(k);
    CHECK(err.norm() <= 1e-10);
  }
}

TEST_CASE("sampled rows equal the global assembly rows") {
  const DeimFixture& F = fixture();
  std::srand(103);
  const DeimModel& m = F.model_def;
  Vec xN = 0.6 * Vec::Random(F.rb.size());
  Vec gN;
  Mat CN;
  deim_reduced_nonlinearity(m, F.rb, F.space, xN, gN, CN);

  Vec lifted = lift_state(F.rb, xN);
  SparseMat C;
  Vec n_full;
  assemble_nonlinear(F.space, lifted, Dirichlet::Full, C, n_full);

  Vec Pg(m.size());
  for (Index i = 0; i < m.size(); ++i) Pg[i] = n_full[m.magic[i]];
  Vec gN_ref = m.projection * Pg;
  CHECK((gN - gN_ref).cwiseAbs().maxCoeff() <=
        1e-13 * std::max(1.0, gN_ref.cwiseAbs().maxCoeff()));

  Mat CV = C * F.rb.V;
  Mat PtCV(m.size(), F.rb.size());
  for (Index i = 0; i < m.size(); ++i) PtCV.row(i) = CV.row(m.magic[i]);
  Mat CN_ref = m.projection * PtCV;
  CHECK((CN - CN_ref).cwiseAbs().maxCoeff() <=
        1e-13 * std::max(1.0, CN_ref.cwiseAbs().maxCoeff()));
}

TEST_CASE("zero reduced state yields zero nonlinearity") {
  const DeimFixture& F = fixture();
  Vec gN;
  Mat CN;
  deim_reduced_nonlinearity(F.model_def, F.rb, F.space, Vec::Zero(F.rb.size()),
                            gN, CN);
  CHECK(gN.cwiseAbs().maxCoeff() == 0.0);
  CHECK(CN.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("deim residual agrees with the exact reduced residual at training points") {
  const DeimFixture& F = fixture();
  int checked = 0;
  for (Index k = 0; k < F.snaps.count(); k += 5) {
    Vec xN = project_state(F.rb, F.snaps.columns[k]);
    GpParameters p{F.snaps.tags[k].mu, F.snaps.tags[k].omega};
    Vec exact = reduced_residual(F.rb, F.sys, xN, p);
    Vec gN;
    Mat CN;
    deim_reduced_nonlinearity(F.model, F.rb, F.space, xN, gN, CN);
    Vec lin = (F.rb.A_N + p.omega * p.omega * F.rb.B_N - p.mu * F.rb.M_N) * xN;
    CHECK((lin + gN - exact).cwiseAbs().maxCoeff() <= 1e-6);
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("deim and exact online traces coincide") {
  const DeimFixture& F = fixture();
  RomBackend rom(F.sys, F.rb);
  DeimBackend deim(F.sys, F.rb, F.model);
  ContinuationConfig cfg;

  BranchCurve exact = trace_branch({0, 1, true}, F.grid, rom, cfg);
  BranchCurve hyper = trace_branch({0, 1, true}, F.grid, deim, cfg);
  REQUIRE(exact.first_nontrivial_mu.has_value());
  REQUIRE(hyper.first_nontrivial_mu.has_value());
  CHECK(*exact.first_nontrivial_mu == doctest::Approx(*hyper.first_nontrivial_mu));
  for (size_t j = 0; j < exact.records.size(); ++j) {
    CHECK(exact.records[j].converged);
    CHECK(hyper.records[j].converged);
    CHECK(std::abs(exact.records[j].n_bosons - hyper.records[j].n_bosons) <= 1e-4);
  }
}

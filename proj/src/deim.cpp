#include "gpbif/deim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace gpbif {

namespace {

// Lowest index wins on ties.
Index argmax_abs(const Vec& v) {
  Index best = 0;
  double mag = std::abs(v[0]);
  for (Index i = 1; i < v.size(); ++i) {
    double m = std::abs(v[i]);
    if (m > mag) {
      mag = m;
      best = i;
    }
  }
  return best;
}

}  // namespace

double DeimModel::tail(Index keep) const {
  double t = 0.0;
  for (Index i = keep; i < eigenvalues.size(); ++i)
    t += std::max(eigenvalues[i], 0.0);
  return t;
}

Vec nonlinearity_snapshot(const GpSystem& sys, const Vec& state_full) {
  SparseMat C;
  Vec n_vec;
  assemble_nonlinear(sys.space(), state_full, Dirichlet::Full, C, n_vec);
  return sys.space().prolong_state(sys.space().restrict_state(n_vec));
}

DeimModel deim_build(const Mat& nonlinear_snapshots, const DeimOptions& opt,
                     const ReducedBasis& basis, const FeSpace& space) {
  DeimModel model;
  const double tol = (opt.q > 0) ? 1e-15 : opt.tol;
  const Index cap = (opt.q > 0) ? opt.q : nonlinear_snapshots.cols();
  PodResult np = pod_basis(nonlinear_snapshots, nullptr, tol, cap);
  model.H = std::move(np.U);
  model.eigenvalues = std::move(np.eigenvalues);
  const Index Q = model.H.cols();
  if (opt.q > 0 && Q < opt.q) {
    std::fprintf(stderr,
                 "deim_build: requested %lld interpolation modes, snapshot "
                 "rank supports only %lld\n",
                 static_cast<long long>(opt.q), static_cast<long long>(Q));
  }

  model.magic.reserve(Q);
  for (Index q = 0; q < Q; ++q) {
    Vec r = model.H.col(q);
    if (q > 0) {
      Mat PtU(q, q);
      Vec Ptu(q);
      for (Index i = 0; i < q; ++i) {
        for (Index j = 0; j < q; ++j) PtU(i, j) = model.H(model.magic[i], j);
        Ptu[i] = model.H(model.magic[i], q);
      }
      r -= model.H.leftCols(q) * PtU.partialPivLu().solve(Ptu);
    }
    model.magic.push_back(argmax_abs(r));
  }
  std::set<Index> distinct(model.magic.begin(), model.magic.end());
  if (static_cast<Index>(distinct.size()) != Q)
    throw std::runtime_error("deim_build: repeated interpolation index");

  deim_finalize(model, basis, space);
  return model;
}

void deim_finalize(DeimModel& model, const ReducedBasis& basis,
                   const FeSpace& space) {
  const Index Q = model.size();
  Mat PtH(Q, Q);
  for (Index i = 0; i < Q; ++i)
    for (Index j = 0; j < Q; ++j) PtH(i, j) = model.H(model.magic[i], j);
  model.interp = PtH.partialPivLu();
  model.projection = (basis.V.transpose() * model.H) * model.interp.inverse();

  // Elements whose dofs include a magic point, in either field.
  std::set<Index> scalar_dofs;
  for (Index idx : model.magic) scalar_dofs.insert(idx % space.n_s);
  std::set<Index> elems;
  for (Index e = 0; e < space.mesh.n_triangles(); ++e)
    for (Index k = 0; k < space.element_dofs.cols(); ++k)
      if (scalar_dofs.count(space.element_dofs(e, k))) {
        elems.insert(e);
        break;
      }
  model.sample_elements.assign(elems.begin(), elems.end());

  // Gather each sample element's basis rows and magic slots up front so the
  // online assembly never touches a full-length array.
  std::unordered_map<Index, Index> magic_pos;
  magic_pos.reserve(static_cast<size_t>(Q));
  for (Index i = 0; i < Q; ++i) magic_pos.emplace(model.magic[i], i);

  model.tab = make_tables(space.degree, 4 * space.degree);
  const int nd = model.tab.ndof();
  const Index N = basis.size();
  model.online.clear();
  model.online.reserve(model.sample_elements.size());
  for (Index e : model.sample_elements) {
    DeimElement el;
    Eigen::Vector2d p0 = space.mesh.nodes.row(space.mesh.triangles(e, 0));
    Eigen::Vector2d p1 = space.mesh.nodes.row(space.mesh.triangles(e, 1));
    Eigen::Vector2d p2 = space.mesh.nodes.row(space.mesh.triangles(e, 2));
    el.det = (p1[0] - p0[0]) * (p2[1] - p0[1]) -
             (p1[1] - p0[1]) * (p2[0] - p0[0]);
    el.V_e.resize(2 * nd, N);
    for (int k = 0; k < nd; ++k) {
      Index d = space.element_dofs(e, k);
      el.V_e.row(k) = basis.V.row(d);
      el.V_e.row(nd + k) = basis.V.row(space.n_s + d);
      auto ip = magic_pos.find(d);
      if (ip != magic_pos.end()) el.phi_slots.emplace_back(k, ip->second);
      auto is = magic_pos.find(space.n_s + d);
      if (is != magic_pos.end()) el.psi_slots.emplace_back(k, is->second);
    }
    model.online.push_back(std::move(el));
  }
}

Vec deim_reconstruct(const DeimModel& model, const Vec& g_full) {
  const Index Q = model.size();
  Vec Pg(Q);
  for (Index i = 0; i < Q; ++i) Pg[i] = g_full[model.magic[i]];
  return model.H * model.interp.solve(Pg);
}

void deim_reduced_nonlinearity(const DeimModel& model, const ReducedBasis& basis,
                               const FeSpace& space, const Vec& xN, Vec& g_N,
                               Mat& C_N) {
  const Index N = basis.size();
  if (xN.size() != N) throw DimensionMismatch("deim_reduced_nonlinearity: length");
  if (model.online.size() != model.sample_elements.size())
    throw std::logic_error("deim_reduced_nonlinearity: model not finalized");
  const Index Q = model.size();
  const FeTables& tab = model.tab;
  const int nd = tab.ndof();
  (void)space;

  Vec sampled = Vec::Zero(Q);
  Mat PtCV = Mat::Zero(Q, N);
  Eigen::RowVectorXd lrow(2 * nd);
  for (const DeimElement& el : model.online) {
    Vec xe = el.V_e * xN;
    Vec phi_q = tab.N * xe.head(nd);
    Vec psi_q = tab.N * xe.tail(nd);
    Vec wdet = tab.quad.weights * el.det;
    Vec pq2 = phi_q.array().square();
    Vec sq2 = psi_q.array().square();
    Vec dens = (pq2 + sq2).cwiseProduct(wdet);

    Vec nphi = tab.N.transpose() * dens.cwiseProduct(phi_q);
    Vec npsi = tab.N.transpose() * dens.cwiseProduct(psi_q);
    Mat Lpp = tab.N.transpose() *
              (wdet.array() * (3.0 * pq2 + sq2).array()).matrix().asDiagonal() *
              tab.N;
    Mat Lss = tab.N.transpose() *
              (wdet.array() * (pq2 + 3.0 * sq2).array()).matrix().asDiagonal() *
              tab.N;
    Mat Lps = tab.N.transpose() *
              (2.0 * wdet.array() * phi_q.array() * psi_q.array())
                  .matrix().asDiagonal() *
              tab.N;

    for (auto [a, slot] : el.phi_slots) {
      sampled[slot] += nphi[a];
      lrow.head(nd) = Lpp.row(a);
      lrow.tail(nd) = Lps.row(a);
      PtCV.row(slot) += lrow * el.V_e;
    }
    for (auto [a, slot] : el.psi_slots) {
      sampled[slot] += npsi[a];
      lrow.head(nd) = Lps.row(a);
      lrow.tail(nd) = Lss.row(a);
      PtCV.row(slot) += lrow * el.V_e;
    }
  }

  g_N = model.projection * sampled;
  C_N = model.projection * PtCV;
}

namespace {

struct DeimNewtonSystem {
  const DeimModel& model;
  const ReducedBasis& rb;
  const FeSpace& space;
  GpParameters p;
  Mat J;

  Vec residual(const Vec& xN) {
    Vec gN;
    Mat CN;
    deim_reduced_nonlinearity(model, rb, space, xN, gN, CN);
    Mat lin = rb.A_N + (p.omega * p.omega) * rb.B_N - p.mu * rb.M_N;
    J = lin + CN;
    return lin * xN + gN;
  }
  Vec newton_step(const Vec&, const Vec& r) {
    Vec dx = J.partialPivLu().solve(r);
    if (!dx.allFinite()) throw SingularMatrix("deim newton step not finite");
    return dx;
  }
};

}  // namespace

SolveResult DeimBackend::solve(const Vec& guess_full, const GpParameters& p,
                               const NewtonConfig& cfg) {
  Vec x0;
  if (guess_full.isZero(0.0))
    x0 = Vec::Zero(basis_->size());
  else if (last_full_.size() == guess_full.size() && guess_full == last_full_)
    x0 = last_reduced_;
  else
    x0 = project_state(*basis_, guess_full);

  DeimNewtonSystem nls{*model_, *basis_, sys_->space(), p, {}};
  auto [xN, report] = newton_solve(std::move(x0), nls, cfg);

  SolveResult out;
  out.state = xN.isZero(0.0) ? Vec::Zero(2 * sys_->space().n_s)
                             : lift_state(*basis_, xN);
  out.report = std::move(report);
  fill_reduced_record(*basis_, xN, out);
  last_reduced_ = std::move(xN);
  last_full_ = out.state;
  return out;
}

}  // namespace gpbif

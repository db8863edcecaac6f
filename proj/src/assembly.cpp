#include "gpbif/assembly.hpp"

#include <stdexcept>
#include <vector>

namespace gpbif {

namespace {

void shape_p1(double x, double y, double* N, double* dx, double* dy) {
  N[0] = 1.0 - x - y;
  N[1] = x;
  N[2] = y;
  dx[0] = -1.0; dx[1] = 1.0; dx[2] = 0.0;
  dy[0] = -1.0; dy[1] = 0.0; dy[2] = 1.0;
}

void shape_p2(double x, double y, double* N, double* dx, double* dy) {
  double l0 = 1.0 - x - y, l1 = x, l2 = y;
  N[0] = l0 * (2.0 * l0 - 1.0);
  N[1] = l1 * (2.0 * l1 - 1.0);
  N[2] = l2 * (2.0 * l2 - 1.0);
  N[3] = 4.0 * l0 * l1;
  N[4] = 4.0 * l1 * l2;
  N[5] = 4.0 * l0 * l2;
  dx[0] = 1.0 - 4.0 * l0; dy[0] = 1.0 - 4.0 * l0;
  dx[1] = 4.0 * l1 - 1.0; dy[1] = 0.0;
  dx[2] = 0.0;            dy[2] = 4.0 * l2 - 1.0;
  dx[3] = 4.0 * (l0 - l1); dy[3] = -4.0 * l1;
  dx[4] = 4.0 * l2;        dy[4] = 4.0 * l1;
  dx[5] = -4.0 * l2;       dy[5] = 4.0 * (l0 - l2);
}

// Affine element geometry: columns of J span the physical triangle.
struct ElementGeometry {
  Eigen::Matrix2d J;
  Eigen::Matrix2d invJT;
  double det;
  Eigen::Vector2d origin;
};

ElementGeometry element_geometry(const Mesh& mesh, Index t) {
  ElementGeometry g;
  Eigen::Vector2d p0 = mesh.nodes.row(mesh.triangles(t, 0));
  Eigen::Vector2d p1 = mesh.nodes.row(mesh.triangles(t, 1));
  Eigen::Vector2d p2 = mesh.nodes.row(mesh.triangles(t, 2));
  g.origin = p0;
  g.J.col(0) = p1 - p0;
  g.J.col(1) = p2 - p0;
  g.det = g.J.determinant();
  g.invJT = g.J.inverse().transpose();
  return g;
}

// Scatter a local block into triplets, mapping through the Dirichlet policy.
void scatter(const FeSpace& space, Index e, const Mat& local, Dirichlet policy,
             Index row_offset, Index col_offset, std::vector<Triplet>& out) {
  const int nd = static_cast<int>(local.rows());
  for (int a = 0; a < nd; ++a) {
    Index ga = space.element_dofs(e, a);
    if (policy == Dirichlet::Condense) {
      ga = space.interior_index[ga];
      if (ga < 0) continue;
    }
    for (int b = 0; b < nd; ++b) {
      Index gb = space.element_dofs(e, b);
      if (policy == Dirichlet::Condense) {
        gb = space.interior_index[gb];
        if (gb < 0) continue;
      }
      out.emplace_back(row_offset + ga, col_offset + gb, local(a, b));
    }
  }
}

}  // namespace

FeTables make_tables(int degree, int quad_degree) {
  FeTables tab;
  tab.quad = triangle_quadrature(quad_degree);
  const Index nq = tab.quad.size();
  const int nd = (degree == 1) ? 3 : 6;
  tab.N.resize(nq, nd);
  tab.dNx.resize(nq, nd);
  tab.dNy.resize(nq, nd);
  double N[6], dx[6], dy[6];
  for (Index q = 0; q < nq; ++q) {
    double x = tab.quad.points(q, 0), y = tab.quad.points(q, 1);
    if (degree == 1) shape_p1(x, y, N, dx, dy);
    else shape_p2(x, y, N, dx, dy);
    for (int k = 0; k < nd; ++k) {
      tab.N(q, k) = N[k];
      tab.dNx(q, k) = dx[k];
      tab.dNy(q, k) = dy[k];
    }
  }
  return tab;
}

SparseMat assemble_scalar_matrix(const FeSpace& space, MatrixKind kind,
                                 Dirichlet policy) {
  const FeTables tab = make_tables(space.degree, 4 * space.degree);
  const Index nq = tab.quad.size();
  const int nd = tab.ndof();
  const Index n = (policy == Dirichlet::Full) ? space.n_s : space.n_interior();

  std::vector<Triplet> trip;
  trip.reserve(static_cast<size_t>(space.mesh.n_triangles()) * nd * nd);
  Mat local(nd, nd);
  Vec wq(nq);
  for (Index e = 0; e < space.mesh.n_triangles(); ++e) {
    ElementGeometry g = element_geometry(space.mesh, e);
    switch (kind) {
      case MatrixKind::M:
        local.noalias() = tab.N.transpose() *
                          (tab.quad.weights * g.det).asDiagonal() * tab.N;
        break;
      case MatrixKind::B: {
        for (Index q = 0; q < nq; ++q) {
          Eigen::Vector2d xq =
              g.origin + g.J * tab.quad.points.row(q).transpose();
          wq[q] = tab.quad.weights[q] * g.det * 0.5 * xq.squaredNorm();
        }
        local.noalias() = tab.N.transpose() * wq.asDiagonal() * tab.N;
        break;
      }
      case MatrixKind::A:
      case MatrixKind::K: {
        Mat Gx = g.invJT(0, 0) * tab.dNx + g.invJT(0, 1) * tab.dNy;
        Mat Gy = g.invJT(1, 0) * tab.dNx + g.invJT(1, 1) * tab.dNy;
        auto w = (tab.quad.weights * g.det).asDiagonal();
        local.noalias() = Gx.transpose() * w * Gx + Gy.transpose() * w * Gy;
        if (kind == MatrixKind::A) local *= 0.5;
        break;
      }
    }
    scatter(space, e, local, policy, 0, 0, trip);
  }

  SparseMat S(n, n);
  S.setFromTriplets(trip.begin(), trip.end());
  S.makeCompressed();
  return S;
}

SparseMat assemble_constant_matrix(const FeSpace& space, MatrixKind kind,
                                   Dirichlet policy) {
  SparseMat S = assemble_scalar_matrix(space, kind, policy);
  const Index n = S.rows();
  std::vector<Triplet> trip;
  trip.reserve(2 * static_cast<size_t>(S.nonZeros()));
  for (Index k = 0; k < S.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(S, k); it; ++it) {
      trip.emplace_back(it.row(), it.col(), it.value());
      trip.emplace_back(n + it.row(), n + it.col(), it.value());
    }
  }
  SparseMat blocked(2 * n, 2 * n);
  blocked.setFromTriplets(trip.begin(), trip.end());
  blocked.makeCompressed();
  return blocked;
}

void assemble_nonlinear(const FeSpace& space, const Vec& Z, Dirichlet policy,
                        SparseMat& C, Vec& n_vec) {
  if (Z.size() != 2 * space.n_s)
    throw DimensionMismatch("assemble_nonlinear: state length");
  const FeTables tab = make_tables(space.degree, 4 * space.degree);
  const Index nq = tab.quad.size();
  const int nd = tab.ndof();
  const Index n = (policy == Dirichlet::Full) ? space.n_s : space.n_interior();

  std::vector<Triplet> trip;
  trip.reserve(static_cast<size_t>(space.mesh.n_triangles()) * nd * nd * 4);
  Vec nfull = Vec::Zero(2 * space.n_s);

  Vec phi_e(nd), psi_e(nd);
  Mat local(nd, nd);
  for (Index e = 0; e < space.mesh.n_triangles(); ++e) {
    ElementGeometry g = element_geometry(space.mesh, e);
    for (int k = 0; k < nd; ++k) {
      Index d = space.element_dofs(e, k);
      phi_e[k] = Z[d];
      psi_e[k] = Z[space.n_s + d];
    }
    Vec phi_q = tab.N * phi_e;
    Vec psi_q = tab.N * psi_e;
    Vec wdet = tab.quad.weights * g.det;
    Vec p2 = phi_q.array().square();
    Vec s2 = psi_q.array().square();

    // phi-phi block: 3 phi^2 + psi^2
    local.noalias() = tab.N.transpose() *
                      (wdet.array() * (3.0 * p2 + s2).array()).matrix().asDiagonal() *
                      tab.N;
    scatter(space, e, local, policy, 0, 0, trip);
    // psi-psi block: phi^2 + 3 psi^2
    local.noalias() = tab.N.transpose() *
                      (wdet.array() * (p2 + 3.0 * s2).array()).matrix().asDiagonal() *
                      tab.N;
    scatter(space, e, local, policy, n, n, trip);
    // off-diagonal blocks: 2 phi psi
    local.noalias() = tab.N.transpose() *
                      (2.0 * wdet.array() * phi_q.array() * psi_q.array())
                          .matrix().asDiagonal() *
                      tab.N;
    scatter(space, e, local, policy, 0, n, trip);
    scatter(space, e, local, policy, n, 0, trip);

    Vec dens = (p2 + s2).cwiseProduct(wdet);
    Vec nphi = tab.N.transpose() * dens.cwiseProduct(phi_q);
    Vec npsi = tab.N.transpose() * dens.cwiseProduct(psi_q);
    for (int k = 0; k < nd; ++k) {
      Index d = space.element_dofs(e, k);
      nfull[d] += nphi[k];
      nfull[space.n_s + d] += npsi[k];
    }
  }

  C.resize(2 * n, 2 * n);
  C.setFromTriplets(trip.begin(), trip.end());
  C.makeCompressed();
  n_vec = (policy == Dirichlet::Full) ? nfull : space.restrict_state(nfull);
}

SparseMat gram_matrix(const FeSpace& space, Norm norm, Dirichlet policy) {
  SparseMat G = assemble_constant_matrix(space, MatrixKind::M, policy);
  if (norm == Norm::H1)
    G = G + assemble_constant_matrix(space, MatrixKind::K, policy);
  return G;
}

double inner_product(const FeSpace& space, const Vec& u, const Vec& v,
                     Norm norm) {
  if (u.size() != v.size()) throw DimensionMismatch("inner_product: lengths");
  SparseMat S = assemble_scalar_matrix(space, MatrixKind::M, Dirichlet::Full);
  if (norm == Norm::H1)
    S = S + assemble_scalar_matrix(space, MatrixKind::K, Dirichlet::Full);
  if (u.size() == space.n_s) return u.dot(S * v);
  if (u.size() == 2 * space.n_s) {
    return u.head(space.n_s).dot(S * v.head(space.n_s)) +
           u.tail(space.n_s).dot(S * v.tail(space.n_s));
  }
  throw DimensionMismatch("inner_product: expected n_s or 2*n_s");
}

}  // namespace gpbif

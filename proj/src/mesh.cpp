#include "gpbif/mesh.hpp"

#include <cmath>
#include <stdexcept>

namespace gpbif {

double Mesh::signed_area(Index t) const {
  auto a = nodes.row(triangles(t, 0));
  auto b = nodes.row(triangles(t, 1));
  auto c = nodes.row(triangles(t, 2));
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

double Mesh::total_area() const {
  double s = 0.0;
  for (Index t = 0; t < n_triangles(); ++t) s += signed_area(t);
  return s;
}

Vec FeSpace::restrict_field(const Vec& full) const {
  if (full.size() != n_s) throw DimensionMismatch("restrict_field: bad length");
  Vec inner(n_interior());
  for (Index k = 0; k < n_interior(); ++k) inner[k] = full[interior[k]];
  return inner;
}

Vec FeSpace::prolong_field(const Vec& inner) const {
  if (inner.size() != n_interior()) throw DimensionMismatch("prolong_field: bad length");
  Vec full = Vec::Zero(n_s);
  for (Index k = 0; k < n_interior(); ++k) full[interior[k]] = inner[k];
  return full;
}

Vec FeSpace::restrict_state(const Vec& full) const {
  if (full.size() != 2 * n_s) throw DimensionMismatch("restrict_state: bad length");
  Vec inner(2 * n_interior());
  inner.head(n_interior()) = restrict_field(full.head(n_s));
  inner.tail(n_interior()) = restrict_field(full.tail(n_s));
  return inner;
}

Vec FeSpace::prolong_state(const Vec& inner) const {
  if (inner.size() != 2 * n_interior())
    throw DimensionMismatch("prolong_state: bad length");
  Vec full(2 * n_s);
  full.head(n_s) = prolong_field(inner.head(n_interior()));
  full.tail(n_s) = prolong_field(inner.tail(n_interior()));
  return full;
}

FeSpace build_mesh(double L, int nx, int degree) {
  if (L <= 0.0) throw std::invalid_argument("build_mesh: L must be positive");
  if (nx < 2) throw std::invalid_argument("build_mesh: nx must be at least 2");
  if (degree != 1 && degree != 2)
    throw std::invalid_argument("build_mesh: degree must be 1 or 2");

  FeSpace space;
  Mesh& mesh = space.mesh;
  mesh.L = L;
  mesh.nx = nx;
  mesh.h = 2.0 * L / nx;

  const int nv = nx + 1;
  mesh.nodes.resize(static_cast<Index>(nv) * nv, 2);
  mesh.boundary_node.assign(static_cast<size_t>(nv) * nv, 0);
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nv; ++i) {
      Index id = static_cast<Index>(j) * nv + i;
      mesh.nodes(id, 0) = -L + i * mesh.h;
      mesh.nodes(id, 1) = -L + j * mesh.h;
      if (i == 0 || i == nx || j == 0 || j == nx) mesh.boundary_node[id] = 1;
    }
  }

  mesh.triangles.resize(2 * static_cast<Index>(nx) * nx, 3);
  Index t = 0;
  for (int j = 0; j < nx; ++j) {
    for (int i = 0; i < nx; ++i) {
      int a = j * nv + i;
      int b = j * nv + i + 1;
      int c = (j + 1) * nv + i + 1;
      int d = (j + 1) * nv + i;
      mesh.triangles.row(t++) << a, b, d;
      mesh.triangles.row(t++) << b, c, d;
    }
  }

  space.degree = degree;
  // Dof lattice: the vertex grid for P1, the half-step refinement for P2.
  const int nd = degree * nx + 1;
  const double hd = mesh.h / degree;
  space.n_s = static_cast<Index>(nd) * nd;
  space.dof_coords.resize(space.n_s, 2);
  space.dof_on_boundary.assign(static_cast<size_t>(space.n_s), 0);
  space.interior_index.assign(static_cast<size_t>(space.n_s), -1);
  for (int j = 0; j < nd; ++j) {
    for (int i = 0; i < nd; ++i) {
      Index id = static_cast<Index>(j) * nd + i;
      space.dof_coords(id, 0) = -L + i * hd;
      space.dof_coords(id, 1) = -L + j * hd;
      bool bdry = (i == 0 || i == nd - 1 || j == 0 || j == nd - 1);
      space.dof_on_boundary[id] = bdry ? 1 : 0;
      if (!bdry) {
        space.interior_index[id] = static_cast<Index>(space.interior.size());
        space.interior.push_back(id);
      }
    }
  }

  // Element dofs in reference order: vertices (0,0),(1,0),(0,1) then the
  // midpoints opposite-free ordering m01, m12, m02 for P2.
  const int per_elem = (degree == 1) ? 3 : 6;
  space.element_dofs.resize(mesh.n_triangles(), per_elem);
  auto lattice_id = [&](int iv, int jv) { return jv * nd + iv; };
  for (Index e = 0; e < mesh.n_triangles(); ++e) {
    int vi[3], vj[3];
    for (int k = 0; k < 3; ++k) {
      int node = mesh.triangles(e, k);
      vi[k] = degree * (node % nv);
      vj[k] = degree * (node / nv);
      space.element_dofs(e, k) = lattice_id(vi[k], vj[k]);
    }
    if (degree == 2) {
      space.element_dofs(e, 3) = lattice_id((vi[0] + vi[1]) / 2, (vj[0] + vj[1]) / 2);
      space.element_dofs(e, 4) = lattice_id((vi[1] + vi[2]) / 2, (vj[1] + vj[2]) / 2);
      space.element_dofs(e, 5) = lattice_id((vi[0] + vi[2]) / 2, (vj[0] + vj[2]) / 2);
    }
  }

  return space;
}

}  // namespace gpbif

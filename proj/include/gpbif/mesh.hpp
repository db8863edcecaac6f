#pragma once

#include <vector>

#include "gpbif/types.hpp"

namespace gpbif {

// Uniform right-triangle grid on the square [-L,L]^2.
// Cell (i,j) is split along its b-d diagonal into (a,b,d) and (b,c,d),
// both counter-clockwise, giving 2*nx^2 triangles.
struct Mesh {
  Mat nodes;                                   // n_nodes x 2
  Eigen::Matrix<int, Eigen::Dynamic, 3> triangles;
  std::vector<char> boundary_node;
  double L = 0.0;
  int nx = 0;
  double h = 0.0;                              // cell edge length 2L/nx

  Index n_nodes() const { return nodes.rows(); }
  Index n_triangles() const { return triangles.rows(); }
  double signed_area(Index t) const;
  double total_area() const;
};

// Lagrange P1/P2 space with homogeneous Dirichlet conditions on the square
// boundary. P2 dofs are numbered on the refined (2nx+1)^2 point grid, so
// every dof has lattice coordinates and edge midpoints need no edge table.
struct FeSpace {
  Mesh mesh;
  int degree = 1;
  Index n_s = 0;                               // dofs per scalar field
  Mat dof_coords;                              // n_s x 2
  std::vector<char> dof_on_boundary;
  std::vector<Index> interior;                 // interior dof ids, ascending
  std::vector<Index> interior_index;           // dof id -> position in interior, -1 on boundary
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> element_dofs;  // n_triangles x (3|6)

  Index n_interior() const { return static_cast<Index>(interior.size()); }

  // Scalar field (length n_s) <-> interior coefficients (length n_interior).
  Vec restrict_field(const Vec& full) const;
  Vec prolong_field(const Vec& inner) const;
  // Paired state [phi; psi] (length 2*n_s) <-> interior pair (length 2*n_interior).
  Vec restrict_state(const Vec& full) const;
  Vec prolong_state(const Vec& inner) const;
};

FeSpace build_mesh(double L, int nx, int degree);

}  // namespace gpbif

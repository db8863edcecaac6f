#pragma once

#include "gpbif/mesh.hpp"
#include "gpbif/quadrature.hpp"
#include "gpbif/types.hpp"

namespace gpbif {

// A = (1/2) grad-grad, B = (1/2) |r|^2 mass kernel (unit trap strength,
// scaled at use sites), M = mass, K = unweighted grad-grad.
enum class MatrixKind { A, B, M, K };

// Full keeps every dof; Condense restricts rows and columns to interior
// dofs, which enforces the homogeneous Dirichlet condition symmetrically.
enum class Dirichlet { Full, Condense };

enum class Norm { L2, H1 };

// Reference-element shape data tabulated at a quadrature rule.
struct FeTables {
  TriangleQuadrature quad;
  Mat N;                    // nq x ndof_per_element
  Mat dNx, dNy;             // reference gradients
  int ndof() const { return static_cast<int>(N.cols()); }
};

FeTables make_tables(int degree, int quad_degree);

// Scalar n_s x n_s (or interior-sized) operator for one field.
SparseMat assemble_scalar_matrix(const FeSpace& space, MatrixKind kind,
                                 Dirichlet policy);

// Same operator acting block-diagonally on the [phi; psi] pair.
SparseMat assemble_constant_matrix(const FeSpace& space, MatrixKind kind,
                                   Dirichlet policy);

// Cubic terms at state Z = [phi; psi] (full length 2*n_s):
//   C: derivative of the cubic term, couples the blocks via 2(X.Z)Z;
//   n_vec: cubic residual contribution, n_vec_i = integral |Z|^2 Z . E^i.
void assemble_nonlinear(const FeSpace& space, const Vec& Z, Dirichlet policy,
                        SparseMat& C, Vec& n_vec);

// Gram matrix of the chosen norm (M for L2, M+K for H1) on the pair space.
SparseMat gram_matrix(const FeSpace& space, Norm norm, Dirichlet policy);

// u' G v with G the scalar Gram matrix, applied blockwise; accepts single
// fields (length n_s) or pairs (length 2*n_s).
double inner_product(const FeSpace& space, const Vec& u, const Vec& v,
                     Norm norm);

}  // namespace gpbif

#ifndef GPBIF_QUADRATURE_HPP
#define GPBIF_QUADRATURE_HPP

#include <vector>

#include "gpbif/types.hpp"

namespace gpbif {

// Quadrature rule on the reference triangle {(x,y): x,y >= 0, x+y <= 1}.
// Weights sum to the reference area 1/2.
struct TriangleQuadrature {
  Mat points;   // q x 2 reference coordinates
  Vec weights;  // q

  Index size() const { return weights.size(); }
};

// Gauss-Legendre nodes/weights on [-1,1].
void gauss_legendre(int n, Vec& nodes, Vec& weights);

// Rule exact for bivariate polynomials of total degree <= degree,
// built by collapsing a tensor Gauss rule onto the triangle.
TriangleQuadrature triangle_quadrature(int degree);

}  // namespace gpbif

#endif

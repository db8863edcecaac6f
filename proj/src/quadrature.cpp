#include "gpbif/quadrature.hpp"

#include <cmath>

namespace gpbif {

// Newton iteration on the Legendre recurrence; nodes are the roots of P_n.
void gauss_legendre(int n, Vec& nodes, Vec& weights) {
  nodes.resize(n);
  weights.resize(n);
  const double pi = std::acos(-1.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

TriangleQuadrature triangle_quadrature(int degree) {
  // Duffy map (u,v) in [0,1]^2 -> (u, v(1-u)) with Jacobian (1-u); the
  // u-direction integrand picks up one extra degree.
  int nu = (degree + 2) / 2 + 1;
  int nv = (degree + 1) / 2 + 1;
  Vec xu, wu, xv, wv;
  gauss_legendre(nu, xu, wu);
  gauss_legendre(nv, xv, wv);

  TriangleQuadrature rule;
  rule.points.resize(nu * nv, 2);
  rule.weights.resize(nu * nv);
  Index q = 0;
  for (int i = 0; i < nu; ++i) {
    double u = 0.5 * (xu[i] + 1.0);
    for (int j = 0; j < nv; ++j) {
      double v = 0.5 * (xv[j] + 1.0);
      rule.points(q, 0) = u;
      rule.points(q, 1) = v * (1.0 - u);
      rule.weights[q] = 0.25 * wu[i] * wv[j] * (1.0 - u);
      ++q;
    }
  }
  return rule;
}

}  // namespace gpbif

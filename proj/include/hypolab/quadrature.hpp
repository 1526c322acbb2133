#pragma once

#include <vector>

namespace hypolab {

// Nodes and weights of a quadrature rule. For Gauss-Legendre the rule is
// stated on a finite interval; for Gauss-Hermite the weights are normalized so
// that sum(w) = 1 and E[f(Z)] ~= sum_i w_i f(x_i) for Z ~ N(0,1).
struct QuadRule {
  std::vector<double> x;
  std::vector<double> w;

  // Affine image of a [-1,1] Gauss-Legendre rule on [a,b].
  QuadRule scaled_to(double a, double b) const;

  template <class F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * f(x[i]);
    return acc;
  }
};

// Gauss-Legendre rule with n nodes on [-1,1]; exact for polynomials of degree
// <= 2n-1. Computed by Newton iteration on the Legendre recurrence.
QuadRule gauss_legendre(int n);
QuadRule gauss_legendre(int n, double a, double b);

// Probabilists' Gauss-Hermite rule with n nodes: nodes are roots of He_n,
// weights normalized to sum to 1 (Golub-Welsch on the Jacobi matrix).
QuadRule gauss_hermite(int n);

// Cached fixed-order rules used throughout the kernel/parametrix quadratures.
const QuadRule& gl32();
const QuadRule& gl64();
const QuadRule& gh20();

}  // namespace hypolab

#pragma once

#include <functional>
#include <vector>

#include "hypolab/coefficients.hpp"

namespace hypolab {

// Deterministic transport flow: the solution s -> theta(s) of
//   d theta1/ds = F1(s, theta),   d theta2/ds = F2(s, theta),
// started from xi at time tau, stored on the solver's accepted grid with the
// right-hand side at each knot so values interpolate by cubic Hermite.
struct TransportFlow {
  double tau = 0.0;
  double T = 0.0;
  Vec xi;
  std::vector<double> grid;    // accepted times, grid.front() == tau
  std::vector<Vec> values;     // theta at grid (values.front() == xi exactly)
  std::vector<Vec> derivs;     // F(t, theta) at grid
  std::string interpolation = "cubic-hermite";
  double tol = 0.0;

  Vec eval(double s) const;        // cubic Hermite interpolation on [tau, T]
  Vec eval_deriv(double s) const;  // derivative of the interpolant
};

// Adaptive Dormand-Prince 5(4) solve of the transport ODE on [tau, T] with
// local error tolerance tol. The maximum step is capped so the cubic Hermite
// dense output keeps the midpoint ODE residual below tol as well. Throws
// StiffnessError on step-size underflow.
TransportFlow solve_transport(const CoefficientSet& cs, double tau, const Vec& xi, double T,
                              double tol);

// The same adaptive integrator for a generic right-hand side (the transport
// solve is the special case rhs = (F1, F2)). Other modules reuse it to sweep
// auxiliary ODE systems with dense output.
TransportFlow integrate_ode(const std::function<Vec(double, const Vec&)>& rhs, double t0,
                            const Vec& y0, double T, double tol);

}  // namespace hypolab

#include "hypolab/transport.hpp"

#include <algorithm>
#include <cmath>

namespace hypolab {

namespace {

// Locate the knot interval containing s (grid is strictly increasing).
std::size_t interval_of(const std::vector<double>& grid, double s) {
  const auto it = std::upper_bound(grid.begin(), grid.end(), s);
  std::size_t i = (it == grid.begin()) ? 0 : std::size_t(it - grid.begin()) - 1;
  return std::min(i, grid.size() - 2);
}

}  // namespace

Vec TransportFlow::eval(double s) const {
  if (s <= grid.front()) return values.front();
  if (s >= grid.back()) {
    if (s > grid.back() + 1e-9 * std::max(1.0, std::abs(T)))
      throw DomainError("TransportFlow::eval: time outside [tau, T]");
    return values.back();
  }
  const std::size_t i = interval_of(grid, s);
  const double h = grid[i + 1] - grid[i];
  const double u = (s - grid[i]) / h;
  const double h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
  const double h10 = u * (1.0 - u) * (1.0 - u);
  const double h01 = u * u * (3.0 - 2.0 * u);
  const double h11 = u * u * (u - 1.0);
  return h00 * values[i] + (h10 * h) * derivs[i] + h01 * values[i + 1] + (h11 * h) * derivs[i + 1];
}

Vec TransportFlow::eval_deriv(double s) const {
  if (s <= grid.front()) return derivs.front();
  if (s >= grid.back()) return derivs.back();
  const std::size_t i = interval_of(grid, s);
  const double h = grid[i + 1] - grid[i];
  const double u = (s - grid[i]) / h;
  const double g00 = 6.0 * u * (u - 1.0) / h;
  const double g10 = (3.0 * u - 1.0) * (u - 1.0);
  const double g01 = -g00;
  const double g11 = u * (3.0 * u - 2.0);
  return g00 * values[i] + g10 * derivs[i] + g01 * values[i + 1] + g11 * derivs[i + 1];
}

TransportFlow solve_transport(const CoefficientSet& cs, double tau, const Vec& xi, double T,
                              double tol) {
  const int d = cs.d;
  if (xi.size() != 2 * d) throw DomainError("solve_transport: xi must lie in R^{2d}");

  auto rhs = [f1 = cs.f1, f2 = cs.f2, d](double t, const Vec& y) {
    Vec f(2 * d);
    f.head(d) = f1(t, y);
    f.tail(d) = f2(t, y);
    if (!f.allFinite()) throw EvaluationError("solve_transport: non-finite right-hand side");
    return f;
  };
  return integrate_ode(rhs, tau, xi, T, tol);
}

TransportFlow integrate_ode(const std::function<Vec(double, const Vec&)>& rhs, double tau,
                            const Vec& xi, double T, double tol) {
  if (T < tau) throw DomainError("integrate_ode: requires tau <= T");
  if (!(tol > 0.0)) throw DomainError("integrate_ode: tol must be positive");

  TransportFlow flow;
  flow.tau = tau;
  flow.T = T;
  flow.xi = xi;
  flow.tol = tol;
  flow.grid.push_back(tau);
  flow.values.push_back(xi);
  flow.derivs.push_back(rhs(tau, xi));
  if (T == tau) return flow;

  // Dormand-Prince 5(4) tableau.
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                      a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                      b6 = 11.0 / 84;
  static const double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695, e4 = b4 - 393.0 / 640,
                      e5 = b5 + 92097.0 / 339200, e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

  // Cap the step so cubic Hermite dense output keeps the midpoint ODE
  // residual (which scales like h^4) below tol even on near-linear flows
  // where pure local-error control would take much larger steps.
  const double h_max = std::clamp(0.5 * std::pow(384.0 * tol, 0.25), 1e-4, 0.05);
  double t = tau;
  Vec y = xi;
  Vec k1 = flow.derivs.front();
  double h = std::min(h_max, (T - tau) * 0.1);
  if (h <= 0.0) h = h_max;
  const double h_min = 1e-14 * std::max(1.0, std::abs(T));

  while (t < T) {
    h = std::min(h, T - t);
    const Vec k2 = rhs(t + c2 * h, y + h * (a21 * k1));
    const Vec k3 = rhs(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Vec k4 = rhs(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = rhs(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 = rhs(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec k7 = rhs(t + h, ynew);
    const Vec errv = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err = 0.0;
    for (int i = 0; i < y.size(); ++i) {
      const double sc = tol + tol * std::max(std::abs(y(i)), std::abs(ynew(i)));
      const double r = errv(i) / sc;
      err += r * r;
    }
    err = std::sqrt(err / double(y.size()));

    if (err <= 1.0) {
      t += h;
      y = ynew;
      k1 = k7;  // first-same-as-last
      flow.grid.push_back(t);
      flow.values.push_back(y);
      flow.derivs.push_back(k1);
    }
    const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
    h = std::min(h * fac, h_max);
    if (h < h_min && t < T)
      throw StiffnessError("integrate_ode: step-size underflow at t=" + std::to_string(t));
  }
  return flow;
}

}  // namespace hypolab

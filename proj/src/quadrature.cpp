#include "hypolab/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace hypolab {

QuadRule QuadRule::scaled_to(double a, double b) const {
  QuadRule r;
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  r.x.reserve(x.size());
  r.w.reserve(w.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.x.push_back(mid + half * x[i]);
    r.w.push_back(half * w[i]);
  }
  return r;
}

QuadRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  QuadRule r;
  r.x.assign(n, 0.0);
  r.w.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-based initial guess for the i-th positive root of P_n.
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    r.w[n - 1 - i] = r.w[i];
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

QuadRule gauss_legendre(int n, double a, double b) {
  return gauss_legendre(n).scaled_to(a, b);
}

QuadRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
  // Golub-Welsch: symmetric tridiagonal Jacobi matrix of the probabilists'
  // Hermite recurrence has off-diagonals sqrt(k); eigenvalues are the nodes
  // and the squared first eigenvector components are the normalized weights.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(double(k));
    J(k - 1, k) = b;
    J(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success) throw std::runtime_error("gauss_hermite: eigensolver failed");
  QuadRule r;
  r.x.assign(n, 0.0);
  r.w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    r.x[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    r.w[i] = v0 * v0;
  }
  // Symmetrize against eigensolver roundoff: average mirrored nodes/weights.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double xm = 0.5 * (r.x[j] - r.x[i]);
    const double wm = 0.5 * (r.w[i] + r.w[j]);
    r.x[i] = -xm;
    r.x[j] = xm;
    r.w[i] = wm;
    r.w[j] = wm;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

const QuadRule& gl32() {
  static const QuadRule r = gauss_legendre(32);
  return r;
}

const QuadRule& gl64() {
  static const QuadRule r = gauss_legendre(64);
  return r;
}

const QuadRule& gh20() {
  static const QuadRule r = gauss_hermite(20);
  return r;
}

}  // namespace hypolab

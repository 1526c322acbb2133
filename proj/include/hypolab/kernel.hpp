#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "hypolab/quadrature.hpp"
#include "hypolab/transport.hpp"

namespace hypolab {

// Gaussian parameters of the frozen/linearized system between times t < s:
// mean (m1, m2) and block covariance of the linear SDE obtained by evaluating
// the coefficients along the transport flow and linearizing F2 in x1. The
// mean is affine in the backward variable x:  m(x) = A x + const with
// A = [[I, 0], [M, I]] and M = R_{t,s} = int_t^s D1F2(v, theta_v) dv, which is
// what the analytic x-derivatives of the density differentiate through (the
// frozen point stays fixed).
struct GaussianKernelParams {
  int d = 1;
  double t = 0.0, s = 0.0;
  Vec mean1, mean2;
  Mat S11, S12, S22;  // Sigma blocks; S21 = S12^T = int_t^s R_{r,s} a dr
  Mat M;              // R_{t,s}
  std::function<Mat(double)> resolvent;  // r -> R_{t,r}
  double quad_rel_error = 0.0;           // 32- vs 64-node Richardson deviation

  // Derived quantities (filled by finalize()).
  Mat Sigma;  // assembled 2d x 2d covariance
  Mat L;      // lower Cholesky factor of Sigma
  Mat P;      // Sigma^{-1}
  double det = 0.0;
  double norm_const = 0.0;  // (2 pi)^{-d} det^{-1/2}

  Vec mean() const;
  // Same kernel with the backward point moved by dx: mean += A dx. Used for
  // finite-difference validation of the analytic x-derivatives.
  GaussianKernelParams shifted(const Vec& dx) const;
  // Assemble Sigma from blocks and factorize; throws DegeneracyError if the
  // covariance is not positive definite.
  void finalize();
};

// Frozen-kernel parameters by nested Gauss-Legendre (32 nodes, with the inner
// time integrals at the same order), Richardson-checked against 64 nodes when
// `richardson` is set (the relative deviation lands in quad_rel_error).
GaussianKernelParams kernel_params(const CoefficientSet& cs, const TransportFlow& flow, double t,
                                   double s, const Vec& x, bool richardson = true);

// Bulk evaluator: integrates the mean/covariance ODE system
//   m1' = F1,  m2' = F2 + D1F2 (m1 - theta1),  R' = D1F2,
//   S11' = a,  S21' = D1F2 S11,  S22' = D1F2 S12 + S21 D1F2^T
// once over [t, T] (Dormand-Prince, dense output), so kernels at many s come
// from one sweep. Cross-validated against kernel_params in the unit tests;
// used by the parametrix grid builders where the nested quadrature would be
// thousands of times more expensive.
class KernelSweep {
 public:
  // Diagonal freezing only: the flow starts at (t, x), so the Gaussian mean
  // coincides with the transport flow itself.
  KernelSweep(const CoefficientSet& cs, double t, const Vec& x, double T, double tol = 1e-11);
  GaussianKernelParams params_at(double s) const;
  double t0() const { return t_; }
  double T() const { return T_; }
  const Vec& x() const { return x_; }
  const TransportFlow& state_flow() const { return *sweep_; }

 private:
  int d_;
  double t_ = 0.0, T_ = 0.0, tol_ = 0.0;
  Vec x_;
  CoefficientSet cs_;  // kept for the direct near-t evaluation path
  // Reused ODE machinery; the state vector packs [theta, R, S11, S21, S22].
  std::shared_ptr<const TransportFlow> sweep_;
};

// Gaussian transition density q(y) = (2 pi)^{-d} det^{-1/2} exp(-w P w / 2).
double density(const GaussianKernelParams& p, const Vec& y);

// Analytic mixed derivative d^{n_x1}/dx1 d^{n_x2}/dx2 d^{n_y1}/dy1 of the
// density (each order <= 2), returned as a flat row-major tensor over the
// component indices (size d^{n_x1 + n_x2 + n_y1}; a single scalar for d = 1).
// x-derivatives act through the affine mean only (frozen point fixed).
std::vector<double> density_derivative(const GaussianKernelParams& p, const Vec& y, int n_x1,
                                       int n_x2, int n_y1);

// Dominating Gaussian kernel qhat_c(y) = c (s-t)^{-2d} exp(-c (|y1-m1|^2/(s-t)
// + |y2-m2|^2/(s-t)^3)) together with the fitted constants of q <= C qhat_c.
struct DominatingKernel {
  double C = 0.0;
  double c = 0.0;
  int d = 1;
  double t = 0.0, s = 0.0;
  Vec mean1, mean2;
  double certified_c_max = 0.0;  // analytic PSD threshold for c
  double qhat(const Vec& y) const;
  // The probability density proportional to qhat (per-coordinate variances
  // (s-t)/(2c) and (s-t)^3/(2c)); used for the normalized hat-expectations.
  double normalized_density(const Vec& y) const;
};

// Certify constants (C, c) with q <= C qhat_c: ascend a fixed geometric ladder
// of candidates and keep the largest c that passes the analytic positive-
// definiteness certificate c <= lam_min(Dh^{1/2} Sigma^{-1} Dh^{1/2})/2 plus a
// decreasing-tail ray check; C is the maximal density ratio over the supplied
// grid (the exact supremum, attained at y = mean, is always included).
DominatingKernel dominating_bound_fit(const CoefficientSet& cs, const TransportFlow& flow,
                                      double t, double s, const Vec& x,
                                      const std::vector<Vec>& grid);

// E| (Y - theta)_i |^gamma under the frozen kernel with the freezing point
// (tau, xi) = (0, x), evaluated by tensor Gauss-Hermite for each s-t in times.
std::vector<std::pair<double, double>> smoothing_probe(const CoefficientSet& cs, const Vec& x,
                                                       double gamma, int i,
                                                       const std::vector<double>& times);

// Tensor Gauss-Hermite expectation E[phi(Y)], Y ~ N(mean, Sigma), for d <= 2;
// Monte Carlo fallback above (stderr written to mc_stderr when used).
double gh_expect(const GaussianKernelParams& p, const std::function<double(const Vec&)>& phi,
                 double* mc_stderr = nullptr);

// Same for an axis-aligned Gaussian N(mean, diag(sd^2)) (dimension <= 4).
double gh_expect_diag(const Vec& mean, const Vec& sd,
                      const std::function<double(const Vec&)>& phi);

// Integral of the density over R^{2d} by Gauss-Hermite. reference_scale = 0
// generates nodes from the kernel's own (mean, Sigma) — an internal
// consistency check good to ~1e-14; a positive scale uses the independent
// diagonal reference N(mean, scale * diag(Sigma)) (spectrally convergent,
// ~1e-4 at 20 nodes for the covariance shapes arising here).
double density_integral(const GaussianKernelParams& p, double reference_scale = 0.0);

}  // namespace hypolab

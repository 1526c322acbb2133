#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hypolab/kernel.hpp"
#include "hypolab/sde.hpp"
#include "hypolab/stats.hpp"

namespace hypolab {

// Source term of the terminal-value PDE (at most 1-Lipschitz in space).
struct SourceTerm {
  std::function<double(double, const Vec&)> f;
  double lipschitz_constant = 1.0;
};

SourceTerm source_zero();
SourceTerm source_one();
SourceTerm source_x2();  // f(s, x) = sum of the degenerate block components

// Worst sampled spatial Lipschitz ratio of f over same-time probe pairs.
double sampled_lipschitz(const SourceTerm& f, const std::vector<Probe>& probes);

// Frozen-semigroup application [P phi](s, x) = E[phi(Y)] with Y drawn from
// the frozen Gaussian kernel between t and s, freezing point (t, x). With
// hat = true the expectation is taken under the normalized fitted dominating
// kernel instead.
double apply_P(const CoefficientSet& cs, double t, double s, const Vec& x,
               const std::function<double(const Vec&)>& phi, bool hat = false);

// Order-0 approximation u0(t, x) = -int_t^T [P f(s, .)](s, x) ds by 32-node
// Gauss-Legendre in s, checked against the 64-node value (NumericError if the
// two disagree beyond quadrature tolerance).
double u0(const CoefficientSet& cs, const SourceTerm& f, double T, double t, const Vec& x);

// u and its kernel derivatives at one point (d = 1): D1 = d/dx1, D2 = d/dx2,
// D11 = d^2/dx1^2, taken by differentiating under the kernel integral with
// the freezing point held fixed (the a-priori objects of the estimates).
struct DerivativeFields {
  double u = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d11 = 0.0;
};

DerivativeFields u0_fields(const CoefficientSet& cs, const SourceTerm& f, double T, double t,
                           const Vec& x);

// Parametrix solution evaluator for d = 1. Order 0 is the pure frozen-kernel
// approximation; order 1 adds one Picard pass of the perturbation terms
//   (F1 - F1(s,theta)) . D1u0 + (F2 - F2(s,theta) - D1F2(s,theta)(y1-theta1)) . D2u0
//   + Tr[(a - a(s,theta)) D1^2 u0] / 2,
// with the order-0 derivative fields interpolated from a lattice precomputed
// over [0, T] x (box padded by the kernel spread). u(T, .) = 0 exactly.
class ParametrixSolution {
 public:
  ParametrixSolution(const CoefficientSet& cs, const SourceTerm& f, double T, int order,
                     const std::array<std::pair<double, double>, 2>& box, int n_t = 7,
                     int n_x = 13, int workers = 0);

  int order() const { return order_; }
  double T() const { return T_; }
  double value(double t, const Vec& x) const;
  DerivativeFields fields(double t, const Vec& x) const;

  // Order-0 fields interpolated from the precomputed lattice (exposed for the
  // interpolation-accuracy spot checks).
  DerivativeFields lattice_fields(double t, double x1, double x2) const;

 private:
  DerivativeFields order1_fields(double t, const Vec& x) const;

  CoefficientSet cs_;
  SourceTerm f_;
  double T_ = 0.0;
  int order_ = 0;
  // Regular lattice: t_k ascending ending at T (fields vanish there), x1/x2
  // ascending; flat arrays indexed [(k * n1 + i) * n2 + j].
  std::vector<double> tk_;
  std::vector<double> x1s_, x2s_;
  std::vector<DerivativeFields> lattice_;
};

// One-point order-1 value (d = 1 enforced); builds a local lattice sized to
// the kernel spread around x. For sweeps over many points build a
// ParametrixSolution once instead.
double u1_correction(const CoefficientSet& cs, const SourceTerm& f, double T, double t,
                     const Vec& x);

// Martingale probe: for each time t in `times`, the Monte Carlo estimate of
//   E[u(t, X_t) - int_0^t f(s, X_s) ds] - u(0, x0)
// over Euler paths of the full system, with u the order-1 parametrix solution
// (order 0 for the Kolmogorov set, where the frozen kernel is exact).
struct MartingaleRow {
  double t = 0.0;
  double deviation = 0.0;
  double stderr_of_mean = 0.0;
  long n_paths = 0;
};

struct MartingaleTable {
  std::vector<MartingaleRow> rows;
  double u00 = 0.0;  // u(0, x0)
  std::uint64_t seed = 0;
};

MartingaleTable martingale_check(const CoefficientSet& cs, const SourceTerm& f, double T,
                                 const Vec& x0, long n_paths, long steps,
                                 const std::vector<double>& times, std::uint64_t seed,
                                 int workers = 0);

// Small-time decay probe: grid suprema of the order-1 derivative fields and
// the composite-denominator Holder seminorm of D1u in x2,
//   |D1u(t,x1,x2) - D1u(t,x1,z2)| / (|dx2| + |dx2|^b12 + |dx2|^b22 + |dx2|^nu),
// nu = 0.9 min(b12, b22), per terminal time T, with log-log slopes across T.
struct SmalltimeRow {
  double T = 0.0;
  double sup_d1 = 0.0;
  double sup_d2 = 0.0;
  double sup_d11 = 0.0;
  double seminorm_nu = 0.0;
};

struct SmalltimeReport {
  std::vector<SmalltimeRow> rows;
  double nu = 0.0;
  SlopeFit slope_d1, slope_d2, slope_d11, slope_nu;
};

SmalltimeReport smalltime_decay_probe(const CoefficientSet& cs, const SourceTerm& f,
                                      const std::vector<double>& T_list,
                                      const std::array<std::pair<double, double>, 2>& box,
                                      int workers = 0);

}  // namespace hypolab

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "hypolab/errors.hpp"

namespace hypolab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Holder regularity metadata of a coefficient triple. Naming convention:
// beta11 = exponent of F1 in x1, beta12 = exponent of F1 in x2,
// beta22 = exponent of F2 in x2, eta = exponent of D1F2 in x1.
// F2 is Lipschitz in x1 by convention (beta21 = 1).
struct HolderExponents {
  double beta11 = 1.0;
  double beta12 = 1.0;
  double beta22 = 1.0;
  double eta = 1.0;
  static constexpr double beta21 = 1.0;
  // Whether the set claims the x2-exponents exceed the 1/3 well-posedness
  // threshold (drops to false for rough drifts at or below it).
  bool claims_threshold = true;
};

// Evaluable coefficient triple (F1, F2, sigma) of the two-block system
//   dX1 = F1(t,X) dt + sigma(t,X) dB,   dX2 = F2(t,X) dt,
// with the analytic x1-derivative of F2 and spectral bounds metadata.
struct CoefficientSet {
  std::string id;
  int d = 1;
  std::function<Vec(double, const Vec&)> f1;    // (t, x in R^{2d}) -> R^d
  std::function<Vec(double, const Vec&)> f2;    // (t, x) -> R^d
  std::function<Mat(double, const Vec&)> sigma; // (t, x) -> d x d
  std::function<Mat(double, const Vec&)> d1f2;  // (t, x) -> d x d
  HolderExponents exponents;
  double ellipticity = 1.5;       // Lambda:   1/L |z|^2 <= z.(ss*)z <= L |z|^2
  double hypo_ellipticity = 1.5;  // same bounds for (D1F2)(D1F2)*
  double holder_bound = 10.0;     // declared constant for sampled ratio checks

  Vec x1_of(const Vec& x) const { return x.head(d); }
  Vec x2_of(const Vec& x) const { return x.tail(d); }
};

// One named assumption check with its worst observed probe.
struct CheckResult {
  std::string name;
  bool pass = true;
  double worst = 0.0;       // worst observed ratio / eigenvalue margin
  std::string worst_probe;  // human-readable probe location
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool all_pass = true;
  const CheckResult* find(const std::string& name) const;
};

// Probe point for validation: a (time, state) pair.
struct Probe {
  double t;
  Vec x;
};

// Sampled verification of the regularity/ellipticity assumptions at the probe
// points (pairs are formed between probes at a common time). Throws
// EvaluationError naming the probe if a coefficient evaluates non-finite.
ValidationReport validate(const CoefficientSet& cs, const std::vector<Probe>& probes);

// Low-discrepancy (Halton) probe generator over [0,T] x box, box given as
// per-coordinate (lo, hi) over R^{2d}.
std::vector<Probe> halton_probes(int n, double T, const std::vector<std::pair<double, double>>& box);

// Coefficients smoothed by convolution in the state variables against a
// tensorized C-infinity bump of width 1/n (fixed 64-node Gauss-Legendre per
// dimension). Exponent metadata is preserved.
CoefficientSet mollify(const CoefficientSet& cs, int n);

// The scalar rough drift x -> sign(x)|x|^alpha.
struct PeanoDrift {
  double alpha;
  explicit PeanoDrift(double a);
  double operator()(double x) const;
};

// Built-in sets: "kolmogorov", "peano:<alpha>", "heterogeneous-demo".
CoefficientSet builtin_set(const std::string& id);
std::vector<std::string> builtin_set_names();

}  // namespace hypolab

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace hypolab {

// Monte Carlo point estimate with its standard error (sample sd / sqrt(n)).
struct McEstimate {
  double estimate = 0.0;
  double stderr_of_mean = 0.0;
  long n_paths = 0;
  std::uint64_t seed = 0;
};

// Welford running mean/variance, mergeable in a fixed order for deterministic
// parallel reductions.
struct RunningStat {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / double(n);
    m2 += d * (v - mean);
  }
  void merge(const RunningStat& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double d = o.mean - mean;
    const long tot = n + o.n;
    mean += d * double(o.n) / double(tot);
    m2 += o.m2 + d * d * double(n) * double(o.n) / double(tot);
    n = tot;
  }
  double variance() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
  double stderr_of_mean() const;
  McEstimate estimate(std::uint64_t seed) const;
};

// Two-sample Kolmogorov-Smirnov sup-distance with the asymptotic 99% flag.
struct KsResult {
  double statistic = 0.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  double critical_99 = 0.0;
  bool exceeds_99 = false;
};

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// O(n*m) reference implementation used to verify ks_two_sample on small inputs.
double ks_statistic_quadratic(const std::vector<double>& a, const std::vector<double>& b);

// Least-squares line fit; fit_loglog fits log(y) against log(x).
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

SlopeFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

// FNV-1a 64-bit content hash (used for run manifests).
std::uint64_t fnv1a64(const std::string& data);

}  // namespace hypolab

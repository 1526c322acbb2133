#include "hypolab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hypolab/errors.hpp"

namespace hypolab {

double RunningStat::stderr_of_mean() const {
  return n > 0 ? std::sqrt(variance() / double(n)) : 0.0;
}

McEstimate RunningStat::estimate(std::uint64_t seed) const {
  return McEstimate{mean, stderr_of_mean(), n, seed};
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n = a.size(), m = b.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < n && j < m) {
    const double v = std::min(a[i], b[j]);
    while (i < n && a[i] <= v) ++i;
    while (j < m && b[j] <= v) ++j;
    d = std::max(d, std::abs(double(i) / double(n) - double(j) / double(m)));
  }
  // Exhausting one sample leaves |F1 - F2| <= the value already recorded at
  // the last shared point, so the sweep above is complete.
  KsResult r;
  r.statistic = d;
  r.n1 = n;
  r.n2 = m;
  // 99% asymptotic two-sample critical value: c(0.01) = sqrt(-ln(0.005)/2).
  const double c99 = std::sqrt(-0.5 * std::log(0.005));
  r.critical_99 = c99 * std::sqrt(double(n + m) / (double(n) * double(m)));
  r.exceeds_99 = r.statistic > r.critical_99;
  return r;
}

double ks_statistic_quadratic(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw DomainError("ks_statistic_quadratic: empty sample");
  auto ecdf = [](const std::vector<double>& s, double v) {
    std::size_t c = 0;
    for (double x : s)
      if (x <= v) ++c;
    return double(c) / double(s.size());
  };
  double d = 0.0;
  for (const auto* s : {&a, &b})
    for (double v : *s) d = std::max(d, std::abs(ecdf(a, v) - ecdf(b, v)));
  return d;
}

SlopeFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DomainError("fit_linear: need >= 2 points with matching sizes");
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw DomainError("fit_linear: degenerate abscissae");
  SlopeFit f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  lx.reserve(x.size());
  ly.reserve(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw DomainError("fit_loglog: inputs must be strictly positive");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_linear(lx, ly);
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace hypolab

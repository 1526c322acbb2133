#include "hypolab/kernel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "hypolab/errors.hpp"
#include "hypolab/rng.hpp"
#include "hypolab/stats.hpp"

namespace hypolab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

Mat diffusion_a(const CoefficientSet& cs, double t, const Vec& theta) {
  const Mat sig = cs.sigma(t, theta);
  if (!sig.allFinite()) throw EvaluationError("kernel: sigma evaluated non-finite");
  return sig * sig.transpose();
}

// Row-major d x d block <-> flat segment of a state vector.
Mat unpack_mat(const Vec& y, int off, int d) {
  Mat m(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) m(r, c) = y(off + r * d + c);
  return m;
}

void pack_mat(const Mat& m, Vec& y, int off) {
  const int d = int(m.rows());
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) y(off + r * d + c) = m(r, c);
}

struct QuadPieces {
  Vec m1, m2;
  Mat S11, S21, S22, M;
};

// Nested Gauss-Legendre assembly of the frozen-kernel mean and covariance at
// order n (outer nodes on [t,s]; the running integrals int_t^r F1 and
// R_{t,r} = int_t^r D1F2 use an inner rule of the same order on [t,r]).
QuadPieces assemble_blocks(const CoefficientSet& cs, const TransportFlow& flow, double t, double s,
                           const Vec& x, int n) {
  const int d = cs.d;
  const QuadRule outer = gauss_legendre(n, t, s);

  QuadPieces q;
  q.m1 = x.head(d);
  q.m2 = x.tail(d);
  q.S11 = Mat::Zero(d, d);
  q.S21 = Mat::Zero(d, d);
  q.S22 = Mat::Zero(d, d);
  q.M = Mat::Zero(d, d);

  std::vector<Vec> f1v(n), f2v(n), innerF1(n);
  std::vector<Mat> av(n), Jv(n), R_tr(n);
  for (int i = 0; i < n; ++i) {
    const double r = outer.x[i];
    const Vec th = flow.eval(r);
    f1v[i] = cs.f1(r, th);
    f2v[i] = cs.f2(r, th);
    Jv[i] = cs.d1f2(r, th);
    av[i] = diffusion_a(cs, r, th);
    if (!f1v[i].allFinite() || !f2v[i].allFinite() || !Jv[i].allFinite())
      throw EvaluationError("kernel_params: coefficient evaluated non-finite along the flow");

    const QuadRule inner = gauss_legendre(n, t, r);
    Vec iF1 = Vec::Zero(d);
    Mat iR = Mat::Zero(d, d);
    for (int j = 0; j < n; ++j) {
      const double v = inner.x[j];
      const Vec thv = flow.eval(v);
      iF1 += inner.w[j] * cs.f1(v, thv);
      iR += inner.w[j] * cs.d1f2(v, thv);
    }
    innerF1[i] = iF1;
    R_tr[i] = iR;
  }

  // R_{t,s} with the same outer rule, so R_{r,s} = R_{t,s} - R_{t,r} is
  // internally consistent.
  for (int i = 0; i < n; ++i) q.M += outer.w[i] * Jv[i];

  for (int i = 0; i < n; ++i) {
    const double w = outer.w[i];
    const Vec th = flow.eval(outer.x[i]);
    const Mat Rrs = q.M - R_tr[i];
    q.m1 += w * f1v[i];
    q.m2 += w * (f2v[i] + Jv[i] * (x.head(d) - th.head(d)) + Jv[i] * innerF1[i]);
    q.S11 += w * av[i];
    q.S21 += w * (Rrs * av[i]);
    q.S22 += w * (Rrs * av[i] * Rrs.transpose());
  }
  return q;
}

double rel_dev(const Mat& a, const Mat& b) {
  return (a - b).norm() / std::max(1e-12, b.norm());
}
double rel_dev(const Vec& a, const Vec& b) {
  return (a - b).norm() / std::max(1e-12, b.norm());
}

// Tensor product of the cached 20-node Gauss-Hermite rule over `dims`
// dimensions; node_fn receives the standard-normal node vector, the result is
// the weighted sum (weights of each factor sum to 1).
template <class F>
double tensor_gh(int dims, F&& node_fn) {
  const QuadRule& g = gh20();
  const int m = int(g.x.size());
  std::vector<int> idx(dims, 0);
  Vec z(dims);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (int k = 0; k < dims; ++k) {
      z(k) = g.x[std::size_t(idx[k])];
      w *= g.w[std::size_t(idx[k])];
    }
    total += w * node_fn(z);
    int k = 0;
    while (k < dims) {
      if (++idx[k] < m) break;
      idx[k] = 0;
      ++k;
    }
    if (k == dims) break;
  }
  return total;
}

}  // namespace

Vec GaussianKernelParams::mean() const {
  Vec m(2 * d);
  m.head(d) = mean1;
  m.tail(d) = mean2;
  return m;
}

GaussianKernelParams GaussianKernelParams::shifted(const Vec& dx) const {
  if (dx.size() != 2 * d) throw DomainError("shifted: dx must lie in R^{2d}");
  GaussianKernelParams q = *this;
  q.mean1 += dx.head(d);
  q.mean2 += M * dx.head(d) + dx.tail(d);
  return q;
}

void GaussianKernelParams::finalize() {
  const int n = 2 * d;
  Sigma = Mat(n, n);
  Sigma.topLeftCorner(d, d) = 0.5 * (S11 + S11.transpose());
  Sigma.topRightCorner(d, d) = S12;
  Sigma.bottomLeftCorner(d, d) = S12.transpose();
  Sigma.bottomRightCorner(d, d) = 0.5 * (S22 + S22.transpose());

  Eigen::LLT<Mat> llt(Sigma);
  if (llt.info() != Eigen::Success)
    throw DegeneracyError("kernel covariance not positive definite at s-t=" +
                          std::to_string(s - t));
  L = llt.matrixL();
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += 2.0 * std::log(L(i, i));
  det = std::exp(logdet);
  norm_const = std::exp(-double(d) * std::log(kTwoPi) - 0.5 * logdet);
  P = llt.solve(Mat::Identity(n, n));
}

GaussianKernelParams kernel_params(const CoefficientSet& cs, const TransportFlow& flow, double t,
                                   double s, const Vec& x, bool richardson) {
  const int d = cs.d;
  if (!(s > t)) throw DomainError("kernel_params: requires s > t");
  if (x.size() != 2 * d) throw DomainError("kernel_params: x must lie in R^{2d}");
  if (t < flow.tau - 1e-12 || s > flow.T + 1e-9)
    throw DomainError("kernel_params: flow does not cover [t, s]");

  const QuadPieces q32 = assemble_blocks(cs, flow, t, s, x, 32);

  GaussianKernelParams p;
  p.d = d;
  p.t = t;
  p.s = s;
  p.mean1 = q32.m1;
  p.mean2 = q32.m2;
  p.S11 = q32.S11;
  p.S12 = q32.S21.transpose();
  p.S22 = q32.S22;
  p.M = q32.M;

  if (richardson) {
    const QuadPieces q64 = assemble_blocks(cs, flow, t, s, x, 64);
    double e = 0.0;
    e = std::max(e, rel_dev(q32.m1, q64.m1));
    e = std::max(e, rel_dev(q32.m2, q64.m2));
    e = std::max(e, rel_dev(q32.S11, q64.S11));
    e = std::max(e, rel_dev(q32.S21, q64.S21));
    e = std::max(e, rel_dev(q32.S22, q64.S22));
    e = std::max(e, rel_dev(q32.M, q64.M));
    p.quad_rel_error = e;
  }

  auto flow_ptr = std::make_shared<TransportFlow>(flow);
  auto d1f2 = cs.d1f2;
  p.resolvent = [flow_ptr, d1f2, t, d](double r) -> Mat {
    if (r < t - 1e-12) throw DomainError("resolvent: r must lie in [t, T]");
    Mat R = Mat::Zero(d, d);
    if (r <= t) return R;
    const QuadRule rule = gauss_legendre(32, t, r);
    for (std::size_t j = 0; j < rule.x.size(); ++j)
      R += rule.w[j] * d1f2(rule.x[j], flow_ptr->eval(rule.x[j]));
    return R;
  };

  p.finalize();
  return p;
}

KernelSweep::KernelSweep(const CoefficientSet& cs, double t, const Vec& x, double T, double tol)
    : d_(cs.d), t_(t), T_(T), tol_(tol), x_(x), cs_(cs) {
  const int d = d_, dd = d * d;
  if (x.size() != 2 * d) throw DomainError("KernelSweep: x must lie in R^{2d}");
  if (!(T > t)) throw DomainError("KernelSweep: requires T > t");

  Vec y0 = Vec::Zero(2 * d + 4 * dd);
  y0.head(2 * d) = x;

  auto f1 = cs.f1;
  auto f2 = cs.f2;
  auto sigma = cs.sigma;
  auto d1f2 = cs.d1f2;
  auto rhs = [f1, f2, sigma, d1f2, d, dd](double r, const Vec& y) {
    const Vec th = y.head(2 * d);
    const Mat S11 = unpack_mat(y, 2 * d + dd, d);
    const Mat S21 = unpack_mat(y, 2 * d + 2 * dd, d);
    const Mat J = d1f2(r, th);
    const Mat sig = sigma(r, th);
    const Mat a = sig * sig.transpose();

    Vec f(y.size());
    f.head(d) = f1(r, th);
    f.segment(d, d) = f2(r, th);
    pack_mat(J, f, 2 * d);                                                // R' = D1F2
    pack_mat(a, f, 2 * d + dd);                                           // S11' = a
    pack_mat(J * S11, f, 2 * d + 2 * dd);                                 // S21' = J S11
    pack_mat(J * S21.transpose() + S21 * J.transpose(), f, 2 * d + 3 * dd);  // S22'
    if (!f.allFinite()) throw EvaluationError("KernelSweep: non-finite right-hand side");
    return f;
  };
  sweep_ = std::make_shared<const TransportFlow>(integrate_ode(rhs, t, y0, T, tol));
}

GaussianKernelParams KernelSweep::params_at(double s) const {
  const int d = d_, dd = d * d;
  if (!(s > t_)) throw DomainError("KernelSweep::params_at: requires s > t");
  // Inside the first accepted ODE step the covariance blocks are still tiny
  // (S22 ~ (s-t)^3) and dense-output interpolation error could dominate them,
  // so evaluate those kernels by the direct nested quadrature instead.
  if (sweep_->grid.size() > 1 && s < sweep_->grid[1])
    return kernel_params(cs_, solve_transport(cs_, t_, x_, s, tol_), t_, s, x_, false);
  const Vec y = sweep_->eval(s);

  GaussianKernelParams p;
  p.d = d;
  p.t = t_;
  p.s = s;
  // Diagonal freezing: the Gaussian mean equals the transport flow.
  p.mean1 = y.head(d);
  p.mean2 = y.segment(d, d);
  p.M = unpack_mat(y, 2 * d, d);
  p.S11 = unpack_mat(y, 2 * d + dd, d);
  p.S12 = unpack_mat(y, 2 * d + 2 * dd, d).transpose();
  p.S22 = unpack_mat(y, 2 * d + 3 * dd, d);
  p.quad_rel_error = tol_;
  p.resolvent = [sweep = sweep_, d](double r) -> Mat {
    return unpack_mat(sweep->eval(r), 2 * d, d);
  };
  p.finalize();
  return p;
}

double density(const GaussianKernelParams& p, const Vec& y) {
  if (y.size() != 2 * p.d) throw DomainError("density: y must lie in R^{2d}");
  const Vec w = y - p.mean();
  const Vec z = p.L.template triangularView<Eigen::Lower>().solve(w);
  return p.norm_const * std::exp(-0.5 * z.squaredNorm());
}

std::vector<double> density_derivative(const GaussianKernelParams& p, const Vec& y, int n_x1,
                                       int n_x2, int n_y1) {
  if (n_x1 < 0 || n_x2 < 0 || n_y1 < 0 || n_x1 > 2 || n_x2 > 2 || n_y1 > 2)
    throw UnsupportedOrderError("density_derivative: each order must lie in {0,1,2}");
  if (y.size() != 2 * p.d) throw DomainError("density_derivative: y must lie in R^{2d}");

  const int d = p.d;
  const int total = n_x1 + n_x2 + n_y1;
  const double q = density(p, y);
  if (total == 0) return {q};

  const Vec w = y - p.mean();
  const Vec Pw = p.P * w;

  // Differentiation directions of w = y - m(x) for one component tuple:
  // d w / d x1_i = -(e_i ; M e_i), d w / d x2_j = -(0 ; e_j),
  // d w / d y1_k = (e_k ; 0). The density is exp(-w P w / 2) * const, so each
  // derivative is q times a Gaussian polynomial built by Wick pairing:
  //   G({}) = 1,
  //   G({v1..vn}) = (-v1.Pw) G(rest) + sum_i (-v1.P.vi) G(rest \ {vi}).
  std::vector<int> idx(std::size_t(total), 0);
  std::vector<double> out;
  out.reserve(std::size_t(std::pow(double(d), double(total))));

  std::vector<Vec> dirs(static_cast<std::size_t>(total));
  std::vector<double> dot_w(static_cast<std::size_t>(total));
  std::vector<std::vector<double>> dot_vv(static_cast<std::size_t>(total),
                                          std::vector<double>(static_cast<std::size_t>(total)));
  std::vector<double> memo;
  std::vector<bool> have;

  // Recursive Wick evaluation over the subset bitmask of remaining directions.
  auto wick = [&](auto&& self, unsigned mask) -> double {
    if (mask == 0u) return 1.0;
    if (have[mask]) return memo[mask];
    const int j = std::countr_zero(mask);
    const unsigned rest = mask & (mask - 1u);
    double val = -dot_w[std::size_t(j)] * self(self, rest);
    for (unsigned m = rest; m != 0u; m &= m - 1u) {
      const int i = std::countr_zero(m);
      val += -dot_vv[std::size_t(j)][std::size_t(i)] * self(self, rest & ~(1u << i));
    }
    have[mask] = true;
    memo[mask] = val;
    return val;
  };

  while (true) {
    for (int k = 0; k < total; ++k) {
      Vec v = Vec::Zero(2 * d);
      const int c = idx[std::size_t(k)];
      if (k < n_x1) {
        v(c) = -1.0;
        v.tail(d) = -p.M.col(c);
      } else if (k < n_x1 + n_x2) {
        v(d + c) = -1.0;
      } else {
        v(c) = 1.0;
      }
      dirs[std::size_t(k)] = v;
    }
    for (int k = 0; k < total; ++k) {
      dot_w[std::size_t(k)] = dirs[std::size_t(k)].dot(Pw);
      const Vec Pv = p.P * dirs[std::size_t(k)];
      for (int j = 0; j < total; ++j) dot_vv[std::size_t(k)][std::size_t(j)] = dirs[std::size_t(j)].dot(Pv);
    }
    memo.assign(std::size_t(1u << total), 0.0);
    have.assign(std::size_t(1u << total), false);
    out.push_back(q * wick(wick, (1u << total) - 1u));

    int k = total - 1;  // row-major: last index fastest
    while (k >= 0) {
      if (++idx[std::size_t(k)] < d) break;
      idx[std::size_t(k)] = 0;
      --k;
    }
    if (k < 0) break;
  }
  return out;
}

double DominatingKernel::qhat(const Vec& y) const {
  const double h = s - t;
  const double e1 = (y.head(d) - mean1).squaredNorm() / h;
  const double e2 = (y.tail(d) - mean2).squaredNorm() / (h * h * h);
  return c * std::pow(h, -2.0 * d) * std::exp(-c * (e1 + e2));
}

double DominatingKernel::normalized_density(const Vec& y) const {
  const double h = s - t;
  const double v1 = h / (2.0 * c);
  const double v2 = h * h * h / (2.0 * c);
  double logp = 0.0;
  for (int i = 0; i < d; ++i) {
    const double d1 = y(i) - mean1(i);
    const double d2 = y(d + i) - mean2(i);
    logp += -0.5 * std::log(kTwoPi * v1) - d1 * d1 / (2.0 * v1);
    logp += -0.5 * std::log(kTwoPi * v2) - d2 * d2 / (2.0 * v2);
  }
  return std::exp(logp);
}

DominatingKernel dominating_bound_fit(const CoefficientSet& cs, const TransportFlow& flow,
                                      double t, double s, const Vec& x,
                                      const std::vector<Vec>& grid) {
  if (grid.empty()) throw DomainError("dominating_bound_fit: grid must be nonempty");
  const GaussianKernelParams p = kernel_params(cs, flow, t, s, x);
  const int d = p.d, n = 2 * d;
  const double h = s - t;

  Vec dh_sqrt(n);
  dh_sqrt.head(d).setConstant(std::sqrt(h));
  dh_sqrt.tail(d).setConstant(std::pow(h, 1.5));

  // q / qhat_c is bounded iff P/2 - c Dh^{-1} is positive semidefinite, i.e.
  // c <= lam_min(Dh^{1/2} P Dh^{1/2}) / 2; the supremum is then attained at
  // the common mean and equals norm_const h^{2d} / c.
  Mat B = dh_sqrt.asDiagonal() * p.P * dh_sqrt.asDiagonal();
  B = 0.5 * (B + B.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(B);
  if (es.info() != Eigen::Success)
    throw FitFailureError("dominating_bound_fit: eigensolve failed");
  const double c_star = 0.5 * es.eigenvalues().minCoeff();

  // Fixed geometric ladder of candidates; keep the largest certified one.
  double best = -1.0;
  for (double c = 1e-3; c <= 2.0 + 1e-12; c *= std::pow(2.0, 0.25))
    if (c <= 0.999 * c_star) best = c;
  if (best <= 0.0)
    throw FitFailureError("dominating_bound_fit: no ladder candidate below the PSD threshold " +
                          std::to_string(c_star));

  DominatingKernel dk;
  dk.c = best;
  dk.certified_c_max = c_star;
  dk.d = d;
  dk.t = t;
  dk.s = s;
  dk.mean1 = p.mean1;
  dk.mean2 = p.mean2;

  const double C_exact = p.norm_const * std::pow(h, 2.0 * d) / best;
  double grid_max = 0.0;
  for (const Vec& y : grid) {
    if (y.size() != n) throw DomainError("dominating_bound_fit: grid point dimension mismatch");
    grid_max = std::max(grid_max, density(p, y) / dk.qhat(y));
  }
  if (grid_max > C_exact * (1.0 + 1e-9))
    throw FitFailureError("dominating_bound_fit: certificate violated on the grid");

  // Decreasing-tail check along scaled coordinate rays and the diagonal.
  std::vector<Vec> rays;
  for (int i = 0; i < n; ++i) {
    Vec u = Vec::Zero(n);
    u(i) = 1.0;
    rays.push_back(u);
    rays.push_back(-u);
  }
  rays.push_back(Vec::Ones(n).normalized());
  const Vec m = p.mean();
  for (const Vec& u : rays) {
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 2; k <= 8; ++k) {
      const Vec y = m + double(k) * dh_sqrt.cwiseProduct(u);
      const double r = density(p, y) / dk.qhat(y);
      if (r > prev * (1.0 + 1e-12))
        throw FitFailureError("dominating_bound_fit: density ratio not decreasing along a ray");
      prev = r;
    }
  }

  dk.C = std::max(C_exact, grid_max);
  return dk;
}

std::vector<std::pair<double, double>> smoothing_probe(const CoefficientSet& cs, const Vec& x,
                                                       double gamma, int i,
                                                       const std::vector<double>& times) {
  if (!(gamma > 0.0 && gamma <= 2.0)) throw DomainError("smoothing_probe: gamma must lie in (0,2]");
  if (i != 1 && i != 2) throw DomainError("smoothing_probe: block index must be 1 or 2");
  if (times.empty()) throw DomainError("smoothing_probe: times must be nonempty");
  for (double h : times)
    if (!(h > 0.0)) throw DomainError("smoothing_probe: times must be positive");

  const double t_max = *std::max_element(times.begin(), times.end());
  const KernelSweep sweep(cs, 0.0, x, t_max);

  std::vector<std::pair<double, double>> out;
  out.reserve(times.size());
  for (double h : times) {
    const GaussianKernelParams p = sweep.params_at(h);
    const int d = p.d;
    auto phi = [&](const Vec& y) {
      const double r = (i == 1) ? (y.head(d) - p.mean1).norm() : (y.tail(d) - p.mean2).norm();
      return std::pow(r, gamma);
    };
    out.emplace_back(h, gh_expect(p, phi));
  }
  return out;
}

double gh_expect(const GaussianKernelParams& p, const std::function<double(const Vec&)>& phi,
                 double* mc_stderr) {
  const int n = 2 * p.d;
  if (p.d <= 2) {
    if (mc_stderr) *mc_stderr = 0.0;
    const Vec m = p.mean();
    return tensor_gh(n, [&](const Vec& z) { return phi(m + p.L * z); });
  }
  // Monte Carlo fallback above the tensor-quadrature dimension budget.
  CounterRng rng(0x5eedULL, 0);
  const Vec m = p.mean();
  RunningStat st;
  Vec z(n);
  for (int k = 0; k < 200000; ++k) {
    for (int j = 0; j < n; ++j) z(j) = rng.next_gaussian();
    st.add(phi(m + p.L * z));
  }
  if (mc_stderr) *mc_stderr = st.stderr_of_mean();
  return st.mean;
}

double gh_expect_diag(const Vec& mean, const Vec& sd,
                      const std::function<double(const Vec&)>& phi) {
  const int n = static_cast<int>(mean.size());
  if (sd.size() != n) throw DomainError("gh_expect_diag: mean/sd size mismatch");
  if (n < 1 || n > 4)
    throw UnsupportedDimensionError("gh_expect_diag: tensor quadrature limited to 4 axes");
  for (int k = 0; k < n; ++k)
    if (!(sd(k) > 0.0)) throw DomainError("gh_expect_diag: standard deviations must be positive");
  return tensor_gh(n, [&](const Vec& z) { return phi(mean + sd.cwiseProduct(z)); });
}

double density_integral(const GaussianKernelParams& p, double reference_scale) {
  const int n = 2 * p.d;
  if (p.d > 2)
    throw UnsupportedDimensionError("density_integral: tensor quadrature limited to d <= 2");
  const Vec m = p.mean();
  if (reference_scale == 0.0) {
    // Nodes generated by the kernel itself: checks the internal consistency
    // of norm_const, the Cholesky factor, and the quadratic form.
    return tensor_gh(n, [&](const Vec& z) {
      return density(p, m + p.L * z) * std::exp(0.5 * z.squaredNorm()) / p.norm_const;
    });
  }
  if (!(reference_scale > 0.0))
    throw DomainError("density_integral: reference_scale must be >= 0");
  const Vec sd = (reference_scale * p.Sigma.diagonal()).cwiseSqrt();
  return tensor_gh(n, [&](const Vec& z) {
    const Vec y = m + sd.cwiseProduct(z);
    double log_ref = 0.0;
    for (int k = 0; k < n; ++k)
      log_ref += -0.5 * std::log(kTwoPi) - std::log(sd(k)) - 0.5 * z(k) * z(k);
    return density(p, y) / std::exp(log_ref);
  });
}

}  // namespace hypolab

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "hypolab/kernel.hpp"
#include "hypolab/rng.hpp"

using hypolab::CoefficientSet;
using hypolab::CounterRng;
using hypolab::DegeneracyError;
using hypolab::DominatingKernel;
using hypolab::GaussianKernelParams;
using hypolab::KernelSweep;
using hypolab::Mat;
using hypolab::TransportFlow;
using hypolab::UnsupportedOrderError;
using hypolab::Vec;
using hypolab::builtin_set;
using hypolab::density;
using hypolab::density_derivative;
using hypolab::density_integral;
using hypolab::dominating_bound_fit;
using hypolab::gh_expect;
using hypolab::gh_expect_diag;
using hypolab::kernel_params;
using hypolab::smoothing_probe;
using hypolab::solve_transport;

namespace {
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

GaussianKernelParams frozen(const CoefficientSet& cs, double t, double s, const Vec& x,
                            bool richardson = true) {
  const TransportFlow flow = solve_transport(cs, t, x, s, 1e-12);
  return kernel_params(cs, flow, t, s, x, richardson);
}
}  // namespace

TEST_CASE("constant-chain covariance blocks have the exact closed form") {
  // a = 1, D1F2 = 1: S11 = h, S12 = h^2/2, S22 = h^3/3, M = h,
  // mean = (x1, x2 + h x1), det = h^4/12.
  const CoefficientSet cs = builtin_set("kolmogorov");
  const Vec x = v2(0.7, -0.4);
  for (double h : {0.1, 1.0, 2.0}) {
    const GaussianKernelParams p = frozen(cs, 0.0, h, x);
    CHECK(p.S11(0, 0) == doctest::Approx(h).epsilon(1e-12));
    CHECK(p.S12(0, 0) == doctest::Approx(h * h / 2.0).epsilon(1e-12));
    CHECK(p.S22(0, 0) == doctest::Approx(h * h * h / 3.0).epsilon(1e-12));
    CHECK(p.M(0, 0) == doctest::Approx(h).epsilon(1e-12));
    CHECK(p.mean1(0) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(p.mean2(0) == doctest::Approx(-0.4 + h * 0.7).epsilon(1e-12));
    CHECK(p.det == doctest::Approx(h * h * h * h / 12.0).epsilon(1e-11));
    CHECK(p.norm_const ==
          doctest::Approx(std::sqrt(12.0) / (2.0 * M_PI * h * h)).epsilon(1e-11));
    CHECK(density(p, p.mean()) == doctest::Approx(p.norm_const).epsilon(1e-13));
    CHECK(p.quad_rel_error < 1e-12);
    // resolvent r -> R_{t,r} is (r - t) for the constant chain
    CHECK(p.resolvent(0.5 * h)(0, 0) == doctest::Approx(0.5 * h).epsilon(1e-10));
  }
}

TEST_CASE("finalize assembles consistent Cholesky and inverse factors") {
  const GaussianKernelParams p =
      frozen(builtin_set("heterogeneous-demo"), 0.1, 0.8, v2(0.3, -0.2));
  const Mat sigma_from_blocks = [&] {
    Mat s(2, 2);
    s << p.S11(0, 0), p.S12(0, 0), p.S12(0, 0), p.S22(0, 0);
    return s;
  }();
  CHECK((p.Sigma - sigma_from_blocks).norm() < 1e-14);
  CHECK((p.L * p.L.transpose() - p.Sigma).norm() < 1e-14);
  CHECK((p.Sigma * p.P - Mat::Identity(2, 2)).norm() < 1e-10);
  CHECK(p.det == doctest::Approx(p.Sigma.determinant()).epsilon(1e-10));
}

TEST_CASE("shifted moves the mean through the affine map") {
  const GaussianKernelParams p = frozen(builtin_set("kolmogorov"), 0.0, 0.9, v2(0.2, 0.5));
  const Vec dx = v2(0.05, -0.03);
  const GaussianKernelParams q = p.shifted(dx);
  CHECK(q.mean1(0) == doctest::Approx(p.mean1(0) + 0.05).epsilon(1e-14));
  CHECK(q.mean2(0) ==
        doctest::Approx(p.mean2(0) + p.M(0, 0) * 0.05 - 0.03).epsilon(1e-14));
  CHECK((q.Sigma - p.Sigma).norm() == 0.0);  // covariance untouched
}

TEST_CASE("finalize rejects a non-positive-definite covariance") {
  GaussianKernelParams p = frozen(builtin_set("kolmogorov"), 0.0, 1.0, v2(0.0, 0.0));
  p.S11(0, 0) = 1.0;
  p.S12(0, 0) = 5.0;  // |S12| > sqrt(S11 S22): not a covariance
  p.S22(0, 0) = 1.0;
  CHECK_THROWS_AS(p.finalize(), DegeneracyError);
}

TEST_CASE("density integrates to one under its own Gauss-Hermite frame") {
  for (const char* id : {"kolmogorov", "peano:0.25", "heterogeneous-demo"}) {
    const CoefficientSet cs = builtin_set(id);
    for (double h : {1e-3, 1e-1, 1.0}) {
      const GaussianKernelParams p = frozen(cs, 0.0, h, v2(0.3, -0.2));
      CHECK_MESSAGE(std::abs(density_integral(p) - 1.0) < 1e-12, id << " h=" << h);
    }
  }
}

TEST_CASE("density integrates to one under an independent diagonal frame") {
  // Nodes from N(mean, scale * diag(Sigma)) rather than the kernel's own
  // factorization. The kernel correlation is ~0.87, so the mismatched frame
  // converges slowly: ~4e-5 at 20 nodes unscaled, ~1e-2 with 2x inflation.
  for (const char* id : {"kolmogorov", "heterogeneous-demo"}) {
    const GaussianKernelParams p = frozen(builtin_set(id), 0.0, 0.5, v2(0.3, -0.2));
    CHECK_MESSAGE(std::abs(density_integral(p, 1.0) - 1.0) < 5e-4, id);
    CHECK_MESSAGE(std::abs(density_integral(p, 2.0) - 1.0) < 2e-2, id);
  }
}

TEST_CASE("analytic density derivatives match finite differences") {
  const GaussianKernelParams p =
      frozen(builtin_set("heterogeneous-demo"), 0.2, 0.9, v2(0.3, -0.2));
  const Vec y = v2(p.mean1(0) + 0.31, p.mean2(0) - 0.17);
  const double fd_h = 1e-5;
  auto q_at_shift = [&](double dx1, double dx2) { return density(p.shifted(v2(dx1, dx2)), y); };
  auto q_at_y = [&](double dy1) { return density(p, v2(y(0) + dy1, y(1))); };

  const double d_x1 = density_derivative(p, y, 1, 0, 0)[0];
  const double fd_x1 = (q_at_shift(fd_h, 0) - q_at_shift(-fd_h, 0)) / (2 * fd_h);
  CHECK(d_x1 == doctest::Approx(fd_x1).epsilon(1e-7));

  const double d_x2 = density_derivative(p, y, 0, 1, 0)[0];
  const double fd_x2 = (q_at_shift(0, fd_h) - q_at_shift(0, -fd_h)) / (2 * fd_h);
  CHECK(d_x2 == doctest::Approx(fd_x2).epsilon(1e-7));

  const double d_y1 = density_derivative(p, y, 0, 0, 1)[0];
  const double fd_y1 = (q_at_y(fd_h) - q_at_y(-fd_h)) / (2 * fd_h);
  CHECK(d_y1 == doctest::Approx(fd_y1).epsilon(1e-7));

  const double d_x1x1 = density_derivative(p, y, 2, 0, 0)[0];
  const double fd_x1x1 =
      (q_at_shift(fd_h, 0) - 2 * q_at_shift(0, 0) + q_at_shift(-fd_h, 0)) / (fd_h * fd_h);
  CHECK(d_x1x1 == doctest::Approx(fd_x1x1).epsilon(1e-5));

  const double d_x1x2 = density_derivative(p, y, 1, 1, 0)[0];
  const double fd_x1x2 = (q_at_shift(fd_h, fd_h) - q_at_shift(fd_h, -fd_h) -
                          q_at_shift(-fd_h, fd_h) + q_at_shift(-fd_h, -fd_h)) /
                         (4 * fd_h * fd_h);
  CHECK(d_x1x2 == doctest::Approx(fd_x1x2).epsilon(1e-5));

  CHECK_THROWS_AS(density_derivative(p, y, 3, 0, 0), UnsupportedOrderError);
}

TEST_CASE("x-derivatives differentiate through the mean only") {
  // For the constant chain, d/dx2 q = -d/dy2 q; check against the explicit
  // Gaussian gradient -P (y - mean) in the y2 slot.
  const GaussianKernelParams p = frozen(builtin_set("kolmogorov"), 0.0, 0.7, v2(0.1, 0.2));
  const Vec y = v2(p.mean1(0) + 0.2, p.mean2(0) + 0.1);
  const Vec w = y - p.mean();
  const Vec pw = p.P * w;
  const double q = density(p, y);
  CHECK(density_derivative(p, y, 0, 1, 0)[0] == doctest::Approx(q * pw(1)).epsilon(1e-10));
  // d/dx1 feels both the direct slot and the M-transported slot.
  CHECK(density_derivative(p, y, 1, 0, 0)[0] ==
        doctest::Approx(q * (pw(0) + p.M(0, 0) * pw(1))).epsilon(1e-10));
}

TEST_CASE("kernel sweep reproduces pointwise kernel parameters") {
  const CoefficientSet cs = builtin_set("heterogeneous-demo");
  const Vec x = v2(0.3, -0.2);
  const double t = 0.1, T = 1.0;
  const KernelSweep sweep(cs, t, x, T);
  CHECK(sweep.t0() == t);
  CHECK(sweep.T() == T);
  // includes a point inside the first accepted ODE step (near-t path)
  for (double s : {0.1001, 0.2, 0.55, 1.0}) {
    const GaussianKernelParams a = sweep.params_at(s);
    const GaussianKernelParams b = frozen(cs, t, s, x, false);
    CHECK(a.mean1(0) == doctest::Approx(b.mean1(0)).epsilon(1e-9));
    CHECK(a.mean2(0) == doctest::Approx(b.mean2(0)).epsilon(1e-9));
    CHECK(a.S11(0, 0) == doctest::Approx(b.S11(0, 0)).epsilon(1e-8));
    CHECK(a.S12(0, 0) == doctest::Approx(b.S12(0, 0)).epsilon(1e-8));
    CHECK(a.S22(0, 0) == doctest::Approx(b.S22(0, 0)).epsilon(1e-8));
    CHECK(a.M(0, 0) == doctest::Approx(b.M(0, 0)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(sweep.params_at(t), hypolab::DomainError);   // s must exceed t
  CHECK_THROWS_AS(sweep.params_at(T + 0.1), hypolab::DomainError);
}

TEST_CASE("kernel sweep stays positive definite arbitrarily close to the base time") {
  // At h = 1e-8 the covariance condition number is ~3e16 (S11 ~ h vs
  // S22 ~ h^3/3), so inverting it costs ~10 digits; the self-referenced
  // integral still lands within 1e-5 and the determinant stays positive.
  const KernelSweep sweep(builtin_set("heterogeneous-demo"), 0.0, v2(0.3, -0.2), 1.0);
  for (double s : {1e-8, 1e-6, 1e-4}) {
    const GaussianKernelParams p = sweep.params_at(s);
    CHECK(p.det > 0.0);
    CHECK(std::abs(density_integral(p) - 1.0) < 1e-5);
  }
}

TEST_CASE("gh_expect reproduces Gaussian moments and exponentials") {
  const GaussianKernelParams p = frozen(builtin_set("kolmogorov"), 0.0, 0.8, v2(0.4, -0.1));
  const double m1 = p.mean1(0), m2 = p.mean2(0);
  const double s11 = p.S11(0, 0), s12 = p.S12(0, 0), s22 = p.S22(0, 0);
  auto E = [&](auto phi) { return gh_expect(p, phi); };
  CHECK(E([](const Vec&) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(E([](const Vec& y) { return y(0); }) == doctest::Approx(m1).epsilon(1e-12));
  CHECK(E([](const Vec& y) { return y(1); }) == doctest::Approx(m2).epsilon(1e-12));
  CHECK(E([&](const Vec& y) { return (y(0) - m1) * (y(0) - m1); }) ==
        doctest::Approx(s11).epsilon(1e-12));
  CHECK(E([&](const Vec& y) { return (y(0) - m1) * (y(1) - m2); }) ==
        doctest::Approx(s12).epsilon(1e-12));
  CHECK(E([&](const Vec& y) { return (y(1) - m2) * (y(1) - m2); }) ==
        doctest::Approx(s22).epsilon(1e-12));
  const double a = 0.3, b = 0.2;
  const double want = std::exp(a * m1 + b * m2 +
                               0.5 * (a * a * s11 + 2 * a * b * s12 + b * b * s22));
  CHECK(E([&](const Vec& y) { return std::exp(a * y(0) + b * y(1)); }) ==
        doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("gh_expect_diag matches axis-aligned Gaussian moments") {
  const Vec mean = v2(1.0, -2.0), sd = v2(0.5, 2.0);
  auto E = [&](auto phi) { return gh_expect_diag(mean, sd, phi); };
  CHECK(E([](const Vec&) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(E([](const Vec& z) { return z(0); }) == doctest::Approx(1.0).epsilon(1e-13));
  // E[z1 z2^2] = m1 (m2^2 + s2^2) by independence
  CHECK(E([](const Vec& z) { return z(0) * z(1) * z(1); }) ==
        doctest::Approx(1.0 * (4.0 + 4.0)).epsilon(1e-13));
  // E[z2^4] = m^4 + 6 m^2 s^2 + 3 s^4
  CHECK(E([](const Vec& z) { return std::pow(z(1), 4); }) ==
        doctest::Approx(16.0 + 6.0 * 4.0 * 4.0 + 3.0 * 16.0).epsilon(1e-13));

  Vec m4(4), s4(4);
  m4 << 1.0, 2.0, 3.0, 4.0;
  s4 << 0.1, 0.2, 0.3, 0.4;
  const double got = gh_expect_diag(m4, s4, [](const Vec& z) {
    return z(0) * z(1) * z(2) * z(3);
  });
  CHECK(got == doctest::Approx(24.0).epsilon(1e-12));  // independence: product of means

  Vec bad_sd = v2(0.5, 0.0);
  CHECK_THROWS_AS(gh_expect_diag(mean, bad_sd, [](const Vec&) { return 1.0; }),
                  hypolab::NumericError);
  Vec m5(5), s5(5);
  m5.setZero();
  s5.setOnes();
  CHECK_THROWS_AS(gh_expect_diag(m5, s5, [](const Vec&) { return 1.0; }),
                  hypolab::NumericError);
}

TEST_CASE("smoothing probe has the exact second-moment law on the constant chain") {
  const CoefficientSet cs = builtin_set("kolmogorov");
  const Vec x = v2(0.2, 0.1);
  const std::vector<double> times{0.01, 0.1, 0.5};
  const auto m1 = smoothing_probe(cs, x, 2.0, 1, times);
  const auto m2 = smoothing_probe(cs, x, 2.0, 2, times);
  REQUIRE(m1.size() == times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double h = times[k];
    CHECK(m1[k].first == h);
    CHECK(m1[k].second == doctest::Approx(h).epsilon(1e-10));              // E|Y1-th1|^2 = h
    CHECK(m2[k].second == doctest::Approx(h * h * h / 3.0).epsilon(1e-10));  // = h^3/3
  }
  // gamma = 1: E|Z| = sqrt(2 var / pi), up to the documented ~2% GH |.| error
  // (an h-independent factor, so it cancels out of the log-log slopes).
  const auto a1 = smoothing_probe(cs, x, 1.0, 1, {0.25});
  CHECK(a1[0].second == doctest::Approx(std::sqrt(2.0 * 0.25 / M_PI)).epsilon(0.03));
  CHECK_THROWS_AS(smoothing_probe(cs, x, 3.0, 1, times), hypolab::DomainError);
  CHECK_THROWS_AS(smoothing_probe(cs, x, 1.0, 3, times), hypolab::DomainError);
}

TEST_CASE("dominating fit on the constant chain hits the analytic certificate") {
  // Dh^{1/2} Sigma^{-1} Dh^{1/2} = [[4,-6],[-6,12]] for every h, so the
  // certified threshold is lam_min/2 = 4 - sqrt(13).
  const CoefficientSet cs = builtin_set("kolmogorov");
  const Vec x = v2(0.0, 0.0);
  for (double h : {0.05, 0.5}) {
    const TransportFlow flow = solve_transport(cs, 0.0, x, h, 1e-12);
    std::vector<Vec> grid;
    CounterRng rng(1, 0);
    const GaussianKernelParams p = kernel_params(cs, flow, 0.0, h, x);
    for (int i = 0; i < 200; ++i)
      grid.push_back(v2(p.mean1(0) + 4.0 * std::sqrt(p.S11(0, 0)) * (rng.next_uniform() - 0.5),
                        p.mean2(0) + 4.0 * std::sqrt(p.S22(0, 0)) * (rng.next_uniform() - 0.5)));
    const DominatingKernel dk = dominating_bound_fit(cs, flow, 0.0, h, x, grid);
    CHECK(dk.certified_c_max == doctest::Approx(4.0 - std::sqrt(13.0)).epsilon(1e-9));
    CHECK(dk.c <= dk.certified_c_max + 1e-15);
    CHECK(dk.c > 0.5 * dk.certified_c_max);  // the ladder should get close
    // Under the PSD certificate the ratio q/qhat peaks at the mean.
    CHECK(dk.C ==
          doctest::Approx(std::sqrt(12.0) / (2.0 * M_PI * dk.c)).epsilon(1e-9));
    CHECK(dk.qhat(p.mean()) == doctest::Approx(dk.c / (h * h)).epsilon(1e-12));
  }
}

TEST_CASE("fitted domination holds on a fresh grid") {
  const CoefficientSet cs = builtin_set("heterogeneous-demo");
  const Vec x = v2(0.3, -0.2);
  const double t = 0.1, s = 0.6;
  const TransportFlow flow = solve_transport(cs, t, x, s, 1e-12);
  const GaussianKernelParams p = kernel_params(cs, flow, t, s, x);
  CounterRng rng(3, 0);
  auto draw_grid = [&](int n) {
    std::vector<Vec> g;
    for (int i = 0; i < n; ++i)
      g.push_back(v2(p.mean1(0) + 6.0 * std::sqrt(p.S11(0, 0)) * (rng.next_uniform() - 0.5),
                     p.mean2(0) + 6.0 * std::sqrt(p.S22(0, 0)) * (rng.next_uniform() - 0.5)));
    return g;
  };
  const DominatingKernel dk = dominating_bound_fit(cs, flow, t, s, x, draw_grid(100));
  CHECK(dk.c > 0.0);
  CHECK(dk.C >= 1e-3);
  for (const Vec& y : draw_grid(500))
    CHECK(density(p, y) <= dk.C * dk.qhat(y) * (1.0 + 1e-9));

  // normalized_density is the product Gaussian with variances h/2c, h^3/2c.
  const double h = s - t;
  const double v1 = h / (2.0 * dk.c), v2v = h * h * h / (2.0 * dk.c);
  const Vec y = v2(p.mean1(0) + 0.3, p.mean2(0) - 0.2);
  const double want = std::exp(-0.09 / (2 * v1) - 0.04 / (2 * v2v)) /
                      (2.0 * M_PI * std::sqrt(v1 * v2v));
  CHECK(dk.normalized_density(y) == doctest::Approx(want).epsilon(1e-11));
}

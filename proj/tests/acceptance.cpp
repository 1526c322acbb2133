// Acceptance gate: one pass/fail line per shipped claim, each with its stated
// tolerance and wall-clock budget. Exit code = number of failed criteria.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "hypolab/kernel.hpp"
#include "hypolab/parametrix.hpp"
#include "hypolab/peano.hpp"
#include "hypolab/rng.hpp"
#include "hypolab/sde.hpp"
#include "hypolab/stats.hpp"

using namespace hypolab;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

GaussianKernelParams frozen(const CoefficientSet& cs, double t, double s, const Vec& x) {
  const TransportFlow flow = solve_transport(cs, t, x, s, 1e-10);
  return kernel_params(cs, flow, t, s, x);
}

struct Criterion {
  std::string name;
  double budget_s;
  std::function<bool(std::string&)> run;
};

// ---- 1. closed-form covariance blocks -------------------------------------
bool c1_covariance(std::string& detail) {
  const GaussianKernelParams p = frozen(builtin_set("kolmogorov"), 0.0, 1.0, v2(0.3, -0.2));
  const double e11 = std::abs(p.S11(0, 0) - 1.0) / 1.0;
  const double e21 = std::abs(p.S12(0, 0) - 0.5) / 0.5;
  const double e22 = std::abs(p.S22(0, 0) - 1.0 / 3.0) / (1.0 / 3.0);
  const double worst = std::max({e11, e21, e22});
  char buf[128];
  std::snprintf(buf, sizeof buf, "max rel err %.2e (tol 1e-10)", worst);
  detail = buf;
  return worst <= 1e-10;
}

// ---- 2. density normalization over sets and scales ------------------------
bool c2_normalization(std::string& detail) {
  double worst = 0.0;
  for (const char* id : {"kolmogorov", "peano:0.25", "heterogeneous-demo"}) {
    const CoefficientSet cs = builtin_set(id);
    for (double h : {1e-3, 1e-1, 1.0}) {
      const GaussianKernelParams p = frozen(cs, 0.0, h, v2(0.3, -0.2));
      worst = std::max(worst, std::abs(density_integral(p) - 1.0));
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "max |integral-1| %.2e over 3 sets x 3 scales (tol 1e-8)",
                worst);
  detail = buf;
  return worst <= 1e-8;
}

// ---- 3. absolute-moment smoothing slopes -----------------------------------
bool c3_smoothing(std::string& detail) {
  const CoefficientSet cs = builtin_set("kolmogorov");
  std::vector<double> times;
  for (int k = 2; k <= 10; ++k) times.push_back(std::pow(0.5, k));
  double worst = 0.0;
  for (double gamma : {0.3, 0.5, 1.0}) {
    for (int i : {1, 2}) {
      const auto curve = smoothing_probe(cs, v2(0.3, -0.2), gamma, i, times);
      std::vector<double> hs, ms;
      for (const auto& [h, m] : curve) {
        hs.push_back(h);
        ms.push_back(m);
      }
      const double slope = fit_loglog(hs, ms).slope;
      const double want = (i - 0.5) * gamma;
      worst = std::max(worst, std::abs(slope - want));
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "max slope deviation %.3f from (i-1/2)gamma (tol 0.05)", worst);
  detail = buf;
  return worst <= 0.05;
}

// ---- 4. backward-derivative time singularity -------------------------------
bool c4_singularity(std::string& detail) {
  const CoefficientSet cs = builtin_set("kolmogorov");
  const Vec x = v2(0.3, -0.2);
  std::vector<double> hs, r1s, r2s;
  for (int k = 2; k <= 10; ++k) {
    const double h = std::pow(0.5, k);
    const GaussianKernelParams p = frozen(cs, 0.0, h, x);
    const Vec m = p.mean();
    const Vec sd = p.Sigma.diagonal().cwiseSqrt();
    double r1 = 0.0, r2 = 0.0;
    const int ng = 41;
    Vec y(2);
    for (int i = 0; i < ng; ++i)
      for (int j = 0; j < ng; ++j) {
        y(0) = m(0) + sd(0) * (-4.0 + 8.0 * double(i) / (ng - 1));
        y(1) = m(1) + sd(1) * (-4.0 + 8.0 * double(j) / (ng - 1));
        r1 = std::max(r1, std::abs(density_derivative(p, y, 1, 0, 0)[0]));
        r2 = std::max(r2, std::abs(density_derivative(p, y, 0, 1, 0)[0]));
      }
    hs.push_back(h);
    r1s.push_back(r1 / p.norm_const);
    r2s.push_back(r2 / p.norm_const);
  }
  const double s1 = fit_loglog(hs, r1s).slope;
  const double s2 = fit_loglog(hs, r2s).slope;
  const double worst = std::max(std::abs(s1 + 0.5), std::abs(s2 + 1.5));
  char buf[128];
  std::snprintf(buf, sizeof buf, "slopes %.4f / %.4f vs -1/2, -3/2 (tol 0.05)", s1, s2);
  detail = buf;
  return worst <= 0.05;
}

// ---- 5. certified Gaussian domination --------------------------------------
bool c5_domination(std::string& detail) {
  const CoefficientSet cs = builtin_set("heterogeneous-demo");
  const Vec x = v2(0.3, -0.2);
  double cmin = 1e300, cmax_ratio = 0.0;
  for (double h : {1e-1, 1e-2, 1e-3}) {
    const TransportFlow flow = solve_transport(cs, 0.0, x, h, 1e-10);
    const GaussianKernelParams p = kernel_params(cs, flow, 0.0, h, x);
    const Vec m = p.mean();
    const Vec sd = p.Sigma.diagonal().cwiseSqrt();
    std::vector<Vec> grid;
    grid.reserve(10000);
    for (int i = 0; i < 100; ++i)
      for (int j = 0; j < 100; ++j)
        grid.push_back(v2(m(0) + sd(0) * (-5.0 + 10.0 * i / 99.0),
                          m(1) + sd(1) * (-5.0 + 10.0 * j / 99.0)));
    const DominatingKernel dk = dominating_bound_fit(cs, flow, 0.0, h, x, grid);
    if (!(dk.c > 0.0 && dk.C > 0.0 && dk.c <= dk.certified_c_max)) {
      detail = "fit failed to certify at h=" + std::to_string(h);
      return false;
    }
    cmin = std::min(cmin, dk.c);
    cmax_ratio = std::max(cmax_ratio, dk.C);
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "certified on 10^4-point grids, c >= %.3f, C <= %.3f", cmin,
                cmax_ratio);
  detail = buf;
  return true;
}

// ---- 6. selection probability clears the certified target ------------------
bool c6_selection(std::string& detail) {
  const EnvelopeParams env = envelope_params(0.2, 0.5);
  const NoiseModel m = noise_model("integrated_brownian");
  const double rho = lemma_rho(env, m.gamma, m.abs_moment, 0.75);
  const McEstimate est =
      selection_probability(0.2, 0.5, m, 0.01, rho, 10000, 65536, 20260815, 0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "P(stay above envelope to rho=%.3e) = %.4f +- %.4f (need >= 0.70)",
                rho, est.estimate, est.stderr_of_mean);
  detail = buf;
  return est.estimate >= 0.70;
}

// ---- 7. persistence-vs-averaging dichotomy ---------------------------------
bool c7_dichotomy(std::string& detail) {
  const NoiseModel m = noise_model("integrated_brownian");
  const std::vector<long> ns{4, 16, 64, 256};
  const DichotomyTable tab =
      dichotomy_experiment({0.2, 0.45}, m, ns, 1.0, 10000, 4096, 20260815, 0);
  bool ok = true;
  std::string why;
  // below threshold: every cell keeps probability >= 0.7
  for (std::size_t k = 0; k < ns.size(); ++k) {
    const double e = tab.cells[k].est.estimate;
    if (e < 0.7) {
      ok = false;
      why += " low cell a=0.2 n=" + std::to_string(ns[k]);
    }
  }
  // above threshold: estimates decrease in n (2 se slack) and end <= 0.6
  for (std::size_t k = 1; k < ns.size(); ++k) {
    const auto& prev = tab.cells[ns.size() + k - 1].est;
    const auto& cur = tab.cells[ns.size() + k].est;
    if (cur.estimate > prev.estimate + 2.0 * (prev.stderr_of_mean + cur.stderr_of_mean)) {
      ok = false;
      why += " non-decreasing a=0.45 n=" + std::to_string(ns[k]);
    }
  }
  const double final45 = tab.cells[2 * ns.size() - 1].est.estimate;
  if (final45 > 0.6) {
    ok = false;
    why += " final a=0.45 too high";
  }
  // symmetry controls sit at 1/2 within 3 se
  for (const auto& ctrl : tab.controls)
    if (std::abs(ctrl.est.estimate - 0.5) > 3.0 * ctrl.est.stderr_of_mean) {
      ok = false;
      why += " control off-half a=" + std::to_string(ctrl.alpha);
    }
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "s(0.2,n) in [%.3f,%.3f]; s(0.45,256)=%.3f; controls %.3f/%.3f%s",
                tab.cells[3].est.estimate, tab.cells[0].est.estimate, final45,
                tab.controls[0].est.estimate, tab.controls[1].est.estimate, why.c_str());
  detail = buf;
  return ok;
}

// ---- 8. martingale property of the parametrix solution ---------------------
bool c8_martingale(std::string& detail) {
  const CoefficientSet cs = builtin_set("kolmogorov");
  const MartingaleTable tab = martingale_check(cs, source_x2(), 1.0, v2(0.3, -0.2), 100000,
                                               2048, {0.25, 0.5, 1.0}, 20260815, 0);
  bool ok = true;
  double worst_z = 0.0;
  for (const auto& row : tab.rows) {
    const double z = std::abs(row.deviation) / row.stderr_of_mean;
    worst_z = std::max(worst_z, z);
    ok = ok && z <= 3.0;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "max |deviation|/se = %.2f over t in {T/4,T/2,T} (need <= 3)",
                worst_z);
  detail = buf;
  return ok;
}

// ---- 9. small-time decay exponents ------------------------------------------
bool c9_smalltime(std::string& detail) {
  std::vector<double> Ts;
  for (int k = 1; k <= 6; ++k) Ts.push_back(std::pow(0.5, k));
  const std::array<std::pair<double, double>, 2> box{{{-0.5, 0.5}, {-0.5, 0.5}}};

  const SmalltimeReport kol =
      smalltime_decay_probe(builtin_set("kolmogorov"), source_x2(), Ts, box, 0);
  const double ed1 = std::abs(kol.slope_d1.slope - 2.0);
  const double ed2 = std::abs(kol.slope_d2.slope - 1.0);

  const SmalltimeReport het =
      smalltime_decay_probe(builtin_set("heterogeneous-demo"), source_x2(), Ts, box, 0);
  const bool het_pos = het.slope_d1.slope > 0.0 && het.slope_d2.slope > 0.0 &&
                       het.slope_d11.slope > 0.0 && het.slope_nu.slope > 0.0;

  char buf[200];
  std::snprintf(buf, sizeof buf,
                "chain slopes %.4f/%.4f vs 2/1 (tol 0.02); smooth-set slopes %.2f/%.2f/%.2f/%.2f > 0",
                kol.slope_d1.slope, kol.slope_d2.slope, het.slope_d1.slope, het.slope_d2.slope,
                het.slope_d11.slope, het.slope_nu.slope);
  detail = buf;
  return ed1 <= 0.02 && ed2 <= 0.02 && het_pos;
}

// ---- 10. simulated law vs exact Gaussian law --------------------------------
bool c10_ks(std::string& detail) {
  const CoefficientSet cs = builtin_set("kolmogorov");
  const Vec x0 = v2(0.3, -0.2);
  const double T = 1.0;
  const long steps = 1000, n = 100000;
  std::vector<double> sim1(n), sim2(n), ex1(n), ex2(n);
  for (long i = 0; i < n; ++i) {
    CounterRng rng(20260815, std::uint64_t(i));
    const Path p = simulate_system(cs, x0, T, steps, rng);
    sim1[i] = p.values(0, steps);
    sim2[i] = p.values(1, steps);
  }
  // Exact terminal law: X1 ~ N(x1, T), X2 ~ N(x2 + T x1, T^3/3) marginally.
  for (long i = 0; i < n; ++i) {
    CounterRng rng(777, std::uint64_t(i));
    ex1[i] = 0.3 + std::sqrt(T) * rng.next_gaussian();
    ex2[i] = -0.2 + T * 0.3 + std::sqrt(T * T * T / 3.0) * rng.next_gaussian();
  }
  const KsResult k1 = ks_two_sample(sim1, ex1);
  const KsResult k2 = ks_two_sample(sim2, ex2);
  char buf[160];
  std::snprintf(buf, sizeof buf, "KS x1 %.4f (flag %d), x2 %.4f (flag %d) (need <= 0.01, no flag)",
                k1.statistic, int(k1.exceeds_99), k2.statistic, int(k2.exceeds_99));
  detail = buf;
  return k1.statistic <= 0.01 && k2.statistic <= 0.01 && !k1.exceeds_99 && !k2.exceeds_99;
}

}  // namespace

int main() {
  std::vector<Criterion> cs{
      {"frozen-kernel covariance blocks (closed form)", 1.0, c1_covariance},
      {"transition density normalization", 10.0, c2_normalization},
      {"absolute-moment smoothing slopes", 30.0, c3_smoothing},
      {"backward-derivative time singularity", 30.0, c4_singularity},
      {"certified Gaussian domination fit", 30.0, c5_domination},
      {"envelope selection probability", 300.0, c6_selection},
      {"persistence-vs-averaging dichotomy", 900.0, c7_dichotomy},
      {"parametrix martingale deviation", 120.0, c8_martingale},
      {"small-time derivative decay exponents", 120.0, c9_smalltime},
      {"simulated vs exact terminal law (KS)", 120.0, c10_ks},
  };
  int fails = 0;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = cs[i].run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
      ok = false;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs <= cs[i].budget_s;
    if (!in_budget) detail += " [over budget]";
    const bool pass = ok && in_budget;
    std::printf("[%s] %2zu. %s: %s (%.1fs / %.0fs)\n", pass ? "PASS" : "FAIL", i + 1,
                cs[i].name.c_str(), detail.c_str(), secs, cs[i].budget_s);
    std::fflush(stdout);
    if (!pass) ++fails;
  }
  if (fails == 0)
    std::printf("all %zu acceptance criteria passed\n", cs.size());
  else
    std::printf("%d of %zu acceptance criteria FAILED\n", fails, cs.size());
  return fails;
}

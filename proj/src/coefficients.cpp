#include "hypolab/coefficients.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "hypolab/quadrature.hpp"

namespace hypolab {

namespace {

std::string probe_str(double t, const Vec& x) {
  std::ostringstream os;
  os << "t=" << t << " x=(";
  for (int i = 0; i < x.size(); ++i) os << (i ? "," : "") << x(i);
  os << ")";
  return os.str();
}

void require_finite(const char* what, double t, const Vec& x, const Mat& v) {
  if (!v.allFinite())
    throw EvaluationError(std::string(what) + " evaluated non-finite at probe " + probe_str(t, x));
}

double halton(std::uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * double(i % base);
    i /= base;
  }
  return r;
}

}  // namespace

const CheckResult* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

std::vector<Probe> halton_probes(int n, double T,
                                 const std::vector<std::pair<double, double>>& box) {
  static const int bases[] = {2, 3, 5, 7, 11, 13, 17};
  std::vector<Probe> out;
  out.reserve(n);
  const int dim = int(box.size());
  for (int k = 1; k <= n; ++k) {
    Probe p;
    p.t = T * halton(k, bases[0]);
    p.x = Vec(dim);
    for (int j = 0; j < dim; ++j) {
      const double u = halton(k, bases[(j + 1) % 7]);
      p.x(j) = box[j].first + u * (box[j].second - box[j].first);
    }
    out.push_back(std::move(p));
  }
  return out;
}

ValidationReport validate(const CoefficientSet& cs, const std::vector<Probe>& probes) {
  if (probes.empty()) throw DomainError("validate: probe list must be nonempty");
  const int d = cs.d;
  const double C = cs.holder_bound;
  const double lam = cs.ellipticity, lam_bar = cs.hypo_ellipticity;

  ValidationReport rep;
  auto add = [&rep](CheckResult c) {
    rep.all_pass = rep.all_pass && c.pass;
    rep.checks.push_back(std::move(c));
  };

  // Exponent domains, including the 1/3 threshold when claimed.
  {
    const auto& e = cs.exponents;
    CheckResult c{"(H1) exponent domains", true, 0.0, ""};
    auto in01 = [](double b) { return b > 0.0 && b <= 1.0; };
    c.pass = in01(e.beta11) && in01(e.beta12) && in01(e.beta22) && in01(e.eta);
    if (e.claims_threshold && !(e.beta12 > 1.0 / 3.0 && e.beta22 > 1.0 / 3.0)) c.pass = false;
    add(std::move(c));
  }

  // Evaluate everything once, failing loudly on non-finite values.
  struct Evals {
    Vec f1, f2;
    Mat sig, m;
  };
  std::vector<Evals> ev(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& p = probes[i];
    ev[i].f1 = cs.f1(p.t, p.x);
    ev[i].f2 = cs.f2(p.t, p.x);
    ev[i].sig = cs.sigma(p.t, p.x);
    ev[i].m = cs.d1f2(p.t, p.x);
    require_finite("F1", p.t, p.x, ev[i].f1);
    require_finite("F2", p.t, p.x, ev[i].f2);
    require_finite("sigma", p.t, p.x, ev[i].sig);
    require_finite("D1F2", p.t, p.x, ev[i].m);
  }

  // Sampled Holder ratio checks over probe pairs at a common time.
  CheckResult h1f1{"(H1) F1 Holder ratio", true, 0.0, ""};
  CheckResult h1f2{"(H1) F2 Holder ratio", true, 0.0, ""};
  CheckResult h1sg{"(H1) sigma Lipschitz ratio", true, 0.0, ""};
  CheckResult h3a{"(H3-a) D1F2 Holder ratio in x1", true, 0.0, ""};
  for (std::size_t i = 0; i < probes.size(); ++i) {
    for (std::size_t j = i + 1; j < probes.size(); ++j) {
      const double t = probes[i].t;
      const Vec &x = probes[i].x, &y = probes[j].x;
      const double d1 = (x.head(d) - y.head(d)).norm();
      const double d2 = (x.tail(d) - y.tail(d)).norm();
      if (d1 + d2 < 1e-12) continue;
      const Vec f1x = cs.f1(t, x), f1y = cs.f1(t, y);
      const Vec f2x = cs.f2(t, x), f2y = cs.f2(t, y);
      const Mat sgx = cs.sigma(t, x), sgy = cs.sigma(t, y);
      const auto& e = cs.exponents;
      const double r1 =
          (f1x - f1y).norm() / (std::pow(d1, e.beta11) + std::pow(d2, e.beta12));
      const double r2 = (f2x - f2y).norm() / (d1 + std::pow(d2, e.beta22));
      const double rs = (sgx - sgy).norm() / (d1 + d2);
      auto upd = [&](CheckResult& c, double r) {
        if (r > c.worst) {
          c.worst = r;
          c.worst_probe = probe_str(t, x) + " vs " + probe_str(t, y);
        }
        if (r > C) c.pass = false;
      };
      upd(h1f1, r1);
      upd(h1f2, r2);
      upd(h1sg, rs);
      // (H3-a) compares D1F2 across x1 at the same x2.
      if (d1 > 1e-12) {
        Vec y1same = x;
        y1same.head(d) = y.head(d);
        const Mat mx = cs.d1f2(t, x), my = cs.d1f2(t, y1same);
        upd(h3a, (mx - my).norm() / std::pow(d1, e.eta));
      }
    }
  }
  add(std::move(h1f1));
  add(std::move(h1f2));
  add(std::move(h1sg));
  add(std::move(h3a));

  // Spectral two-sided bounds at every probe: worst = smallest margin.
  auto spectral = [&](const char* name, auto matrix_of, double bound) {
    CheckResult c{name, true, 1e300, ""};
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const Mat a = matrix_of(i);
      Eigen::SelfAdjointEigenSolver<Mat> es(a);
      const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
      const double margin = std::min(lo - 1.0 / bound, bound - hi);
      if (margin < c.worst) {
        c.worst = margin;
        c.worst_probe = probe_str(probes[i].t, probes[i].x);
      }
    }
    c.pass = c.worst >= -1e-9;
    add(std::move(c));
  };
  spectral("(H2) ellipticity of sigma sigma*",
           [&](std::size_t i) { return Mat(ev[i].sig * ev[i].sig.transpose()); }, lam);
  spectral("(H3-b) non-degeneracy of (D1F2)(D1F2)*",
           [&](std::size_t i) { return Mat(ev[i].m * ev[i].m.transpose()); }, lam_bar);

  // Analytic d1f2 must match a central finite difference of f2 in x1.
  {
    CheckResult c{"d1f2 finite-difference consistency", true, 0.0, ""};
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const auto& p = probes[i];
      for (int k = 0; k < d; ++k) {
        const double h = 1e-5 * std::max(1.0, std::abs(p.x(k)));
        Vec xp = p.x, xm = p.x;
        xp(k) += h;
        xm(k) -= h;
        const Vec fd = (cs.f2(p.t, xp) - cs.f2(p.t, xm)) / (2.0 * h);
        const Vec an = ev[i].m.col(k);
        const double rel = (fd - an).norm() / std::max(1.0, an.norm());
        if (rel > c.worst) {
          c.worst = rel;
          c.worst_probe = probe_str(p.t, p.x);
        }
      }
    }
    c.pass = c.worst <= 1e-6;
    add(std::move(c));
  }

  return rep;
}

CoefficientSet mollify(const CoefficientSet& cs, int n) {
  if (n < 1) throw DomainError("mollify: n must be >= 1");
  struct MollData {
    int dim;
    double width;
    std::vector<double> node, weight;  // self-normalized bump quadrature on [-1,1]
  };
  auto data = std::make_shared<MollData>();
  data->dim = 2 * cs.d;
  data->width = 1.0 / double(n);
  {
    const QuadRule gl = gauss_legendre(64);
    double z = 0.0;
    for (std::size_t i = 0; i < gl.x.size(); ++i) {
      const double u = gl.x[i];
      const double b = std::exp(-1.0 / (1.0 - u * u));
      data->node.push_back(u);
      data->weight.push_back(gl.w[i] * b);
      z += gl.w[i] * b;
    }
    for (double& w : data->weight) w /= z;
  }

  // Tensorized convolution: iterate the multi-index odometer over all state
  // dimensions (64 nodes each), shifting the state by width * node.
  auto convolve = [data](auto g) {
    return [data, g](double t, const Vec& x) {
      const int D = data->dim;
      const int N = int(data->node.size());
      std::vector<int> idx(D, 0);
      Vec shifted(D);
      auto acc = g(t, x);  // sets the result shape
      acc.setZero();
      while (true) {
        double w = 1.0;
        for (int k = 0; k < D; ++k) {
          w *= data->weight[idx[k]];
          shifted(k) = x(k) - data->width * data->node[idx[k]];
        }
        acc += w * g(t, shifted);
        int k = 0;
        while (k < D && ++idx[k] == N) idx[k++] = 0;
        if (k == D) break;
      }
      return acc;
    };
  };

  CoefficientSet out = cs;
  out.id = cs.id + ":mollified:" + std::to_string(n);
  out.f1 = convolve(cs.f1);
  out.f2 = convolve(cs.f2);
  out.sigma = convolve(cs.sigma);
  out.d1f2 = convolve(cs.d1f2);  // convolution commutes with differentiation
  return out;
}

PeanoDrift::PeanoDrift(double a) : alpha(a) {
  if (!(a > -1.0 && a < 1.0)) throw DomainError("PeanoDrift: alpha must lie in (-1, 1)");
}

double PeanoDrift::operator()(double x) const {
  if (x == 0.0) return 0.0;
  return (x > 0.0 ? 1.0 : -1.0) * std::pow(std::abs(x), alpha);
}

CoefficientSet builtin_set(const std::string& id) {
  CoefficientSet cs;
  cs.d = 1;
  if (id == "kolmogorov") {
    cs.id = id;
    cs.f1 = [](double, const Vec&) { return Vec::Zero(1).eval(); };
    cs.f2 = [](double, const Vec& x) { return x.head(1).eval(); };
    cs.sigma = [](double, const Vec&) { return Mat::Identity(1, 1).eval(); };
    cs.d1f2 = [](double, const Vec&) { return Mat::Identity(1, 1).eval(); };
    cs.exponents = HolderExponents{1.0, 1.0, 1.0, 1.0, true};
    cs.ellipticity = 1.5;
    cs.hypo_ellipticity = 1.5;
    return cs;
  }
  if (id.rfind("peano:", 0) == 0) {
    double alpha = 0.0;
    try {
      alpha = std::stod(id.substr(6));
    } catch (const std::exception&) {
      throw ConfigError("builtin_set: cannot parse alpha in '" + id + "'");
    }
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ConfigError("builtin_set: peano alpha must lie in (0, 1)");
    PeanoDrift drift(alpha);
    cs.id = id;
    cs.f1 = [](double, const Vec&) { return Vec::Zero(1).eval(); };
    cs.f2 = [drift](double, const Vec& x) {
      Vec v(1);
      v(0) = x(0) + drift(x(1));
      return v;
    };
    cs.sigma = [](double, const Vec&) { return Mat::Identity(1, 1).eval(); };
    cs.d1f2 = [](double, const Vec&) { return Mat::Identity(1, 1).eval(); };
    cs.exponents = HolderExponents{1.0, 1.0, alpha, 1.0, alpha > 1.0 / 3.0};
    cs.ellipticity = 1.5;
    cs.hypo_ellipticity = 1.5;
    return cs;
  }
  if (id == "heterogeneous-demo") {
    cs.id = id;
    cs.f1 = [](double t, const Vec& x) {
      Vec v(1);
      v(0) = 0.2 * std::sin(x(0) + x(1)) + 0.1 * std::sin(t);
      return v;
    };
    cs.f2 = [](double, const Vec& x) {
      Vec v(1);
      v(0) = x(0) + 0.3 * std::sin(x(0)) + 0.4 * std::sin(x(1));
      return v;
    };
    cs.sigma = [](double, const Vec& x) {
      Mat m(1, 1);
      m(0, 0) = 1.0 + 0.25 * std::sin(x(0) + 2.0 * x(1));
      return m;
    };
    cs.d1f2 = [](double, const Vec& x) {
      Mat m(1, 1);
      m(0, 0) = 1.0 + 0.3 * std::cos(x(0));
      return m;
    };
    cs.exponents = HolderExponents{0.6, 0.6, 0.6, 0.8, true};
    cs.ellipticity = 1.8;
    cs.hypo_ellipticity = 2.1;
    return cs;
  }
  throw ConfigError("builtin_set: unknown coefficient set '" + id + "'");
}

std::vector<std::string> builtin_set_names() {
  return {"kolmogorov", "peano:<alpha>", "heterogeneous-demo"};
}

}  // namespace hypolab

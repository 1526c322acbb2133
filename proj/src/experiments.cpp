#include "hypolab/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "hypolab/coefficients.hpp"
#include "hypolab/csv.hpp"
#include "hypolab/kernel.hpp"
#include "hypolab/parametrix.hpp"
#include "hypolab/peano.hpp"
#include "hypolab/stats.hpp"

namespace hypolab {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Open a CSV under the run directory; finish() records its content hash.
class Emitter {
 public:
  explicit Emitter(RunArtifacts& arts) : arts_(arts) {}
  CsvWriter& open(const std::string& name, const std::vector<std::string>& header) {
    writers_.push_back(std::make_unique<CsvWriter>(arts_.out_dir + "/" + name, header));
    return *writers_.back();
  }
  void finish() {
    for (auto& w : writers_) {
      w->close();
      arts_.files.emplace_back(w->path(), w->content_hash());
    }
  }

 private:
  RunArtifacts& arts_;
  std::vector<std::unique_ptr<CsvWriter>> writers_;
};

NoiseModel model_from_gamma(double g) {
  if (std::abs(g - 1.5) < 1e-12) return noise_model("integrated_brownian");
  if (std::abs(g - 0.5) < 1e-12) return noise_model("brownian");
  throw ConfigError(
      "config: path experiments support gamma = 0.5 (Brownian) or 1.5 (integrated Brownian)");
}

Vec system_start(const ExperimentConfig& cfg) {
  Vec x(2);
  x << cfg.x0_1, cfg.x0_2;
  return x;
}

// ---------------------------------------------------------------- drivers

void run_kernel_validate(const ExperimentConfig& cfg, Emitter& em) {
  CsvWriter& checks =
      em.open("kernel_checks.csv", {"check", "param", "value", "reference", "abs_error"});

  // Closed-form covariance of the constant-coefficient flow on [0, 1]:
  // S11 = h, S21 = h^2/2, S22 = h^3/3, M = h.
  {
    const CoefficientSet kol = builtin_set("kolmogorov");
    Vec x(2);
    x << cfg.x0_1, cfg.x0_2;
    const TransportFlow flow = solve_transport(kol, 0.0, x, 1.0, 1e-10);
    const GaussianKernelParams p = kernel_params(kol, flow, 0.0, 1.0, x);
    const auto put = [&](const std::string& name, double v, double ref) {
      checks.row({"covariance_closed_form", name, fmt_g17(v), fmt_g17(ref),
                  fmt_g17(std::abs(v - ref))});
    };
    put("S11", p.S11(0, 0), 1.0);
    put("S21", p.S12(0, 0), 0.5);
    put("S22", p.S22(0, 0), 1.0 / 3.0);
    put("M", p.M(0, 0), 1.0);
  }

  // Density normalization on the shipped sets across time scales.
  for (const std::string& id : {std::string("kolmogorov"), std::string("peano:0.25"),
                                std::string("heterogeneous-demo")}) {
    const CoefficientSet cs = builtin_set(id);
    Vec x(2);
    x << cfg.x0_1, cfg.x0_2;
    for (double h : {1e-3, 1e-1, 1.0}) {
      const TransportFlow flow = solve_transport(cs, 0.0, x, h, 1e-10);
      const GaussianKernelParams p = kernel_params(cs, flow, 0.0, h, x);
      const double integral = density_integral(p);
      checks.row({"density_normalization", id + " h=" + fmt_g17(h), fmt_g17(integral), "1",
                  fmt_g17(std::abs(integral - 1.0))});
    }
  }

  // Derivative time-singularity: grid suprema of the backward-derivative
  // magnitudes, normalized by sup q = q(mean), regress to -1/2 (x1) and
  // -3/2 (x2) in log-log across dyadic scales.
  {
    const CoefficientSet cs = builtin_set(cfg.set);
    Vec x = system_start(cfg);
    CsvWriter& curve = em.open("kernel_singularity.csv", {"h", "sup_ratio_dx1", "sup_ratio_dx2"});
    std::vector<double> hs, r1s, r2s;
    for (int k = 2; k <= 10; ++k) {
      const double h = std::pow(0.5, k);
      const TransportFlow flow = solve_transport(cs, 0.0, x, h, 1e-10);
      const GaussianKernelParams p = kernel_params(cs, flow, 0.0, h, x);
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
      r1 /= p.norm_const;
      r2 /= p.norm_const;
      curve.row({fmt_g17(h), fmt_g17(r1), fmt_g17(r2)});
      hs.push_back(h);
      r1s.push_back(r1);
      r2s.push_back(r2);
    }
    const SlopeFit f1 = fit_loglog(hs, r1s);
    const SlopeFit f2 = fit_loglog(hs, r2s);
    checks.row({"derivative_singularity", "dx1_slope", fmt_g17(f1.slope), fmt_g17(-0.5),
                fmt_g17(std::abs(f1.slope + 0.5))});
    checks.row({"derivative_singularity", "dx2_slope", fmt_g17(f2.slope), fmt_g17(-1.5),
                fmt_g17(std::abs(f2.slope + 1.5))});
  }
}

void run_smoothing_slopes(const ExperimentConfig& cfg, Emitter& em) {
  const CoefficientSet cs = builtin_set(cfg.set);
  const Vec x = system_start(cfg);
  std::vector<double> times = cfg.t_list;
  CsvWriter& curve = em.open("smoothing_curve.csv", {"gamma", "i", "h", "moment"});
  CsvWriter& slopes = em.open("smoothing_slopes.csv", {"gamma", "i", "slope", "expected", "r2"});
  for (double g : {0.3, 0.5, 1.0})
    for (int i : {1, 2}) {
      const auto pts = smoothing_probe(cs, x, g, i, times);
      std::vector<double> hs, ms;
      for (const auto& [h, mom] : pts) {
        curve.row({fmt_g17(g), std::to_string(i), fmt_g17(h), fmt_g17(mom)});
        hs.push_back(h);
        ms.push_back(mom);
      }
      const SlopeFit fit = fit_loglog(hs, ms);
      const double expected = (double(i) - 0.5) * g;
      slopes.row({fmt_g17(g), std::to_string(i), fmt_g17(fit.slope), fmt_g17(expected),
                  fmt_g17(fit.r2)});
    }
}

void run_aronson_fit(const ExperimentConfig& cfg, Emitter& em) {
  const CoefficientSet cs = builtin_set(cfg.set);
  const Vec x = system_start(cfg);
  CsvWriter& out = em.open("aronson_fit.csv", {"h", "c", "certified_c_max", "C", "grid_points"});
  for (double h : cfg.t_list) {
    const TransportFlow flow = solve_transport(cs, 0.0, x, h, 1e-10);
    const GaussianKernelParams p = kernel_params(cs, flow, 0.0, h, x);
    const Vec m = p.mean();
    const Vec sd = p.Sigma.diagonal().cwiseSqrt();
    std::vector<Vec> grid;
    grid.reserve(10000);
    Vec y(2);
    for (int i = 0; i < 100; ++i)
      for (int j = 0; j < 100; ++j) {
        y(0) = m(0) + sd(0) * (-5.0 + 10.0 * double(i) / 99.0);
        y(1) = m(1) + sd(1) * (-5.0 + 10.0 * double(j) / 99.0);
        grid.push_back(y);
      }
    const DominatingKernel dk = dominating_bound_fit(cs, flow, 0.0, h, x, grid);
    out.row({fmt_g17(h), fmt_g17(dk.c), fmt_g17(dk.certified_c_max), fmt_g17(dk.C),
             std::to_string(grid.size())});
  }
}

void run_selection_probability(const ExperimentConfig& cfg, Emitter& em) {
  const NoiseModel model = model_from_gamma(cfg.gamma);
  const EnvelopeParams env = envelope_params(cfg.alpha, cfg.beta);
  const double rho = lemma_rho(env, cfg.gamma, model.abs_moment, cfg.target);
  const McEstimate est = selection_probability(cfg.alpha, cfg.beta, model, cfg.x0, rho,
                                               cfg.n_paths, cfg.steps, cfg.seed, cfg.workers);
  CsvWriter& out = em.open(
      "selection_probability.csv",
      {"alpha", "beta", "gamma", "c_alpha", "eta", "c_tilde", "delta", "rho", "x0", "target",
       "n_paths", "steps", "seed", "estimate", "stderr"});
  out.row({fmt_g17(cfg.alpha), fmt_g17(cfg.beta), fmt_g17(cfg.gamma), fmt_g17(env.c_alpha),
           fmt_g17(env.eta), fmt_g17(env.c_tilde), fmt_g17(delta_exponent(cfg.gamma, cfg.alpha)),
           fmt_g17(rho), fmt_g17(cfg.x0), fmt_g17(cfg.target), std::to_string(est.n_paths),
           std::to_string(cfg.steps), std::to_string(est.seed), fmt_g17(est.estimate),
           fmt_g17(est.stderr_of_mean)});
}

void run_dichotomy(const ExperimentConfig& cfg, Emitter& em) {
  const NoiseModel model = model_from_gamma(cfg.gamma);
  const DichotomyTable tb = dichotomy_experiment(cfg.alphas, model, cfg.n_list, cfg.T,
                                                 cfg.n_paths, cfg.steps, cfg.seed, cfg.workers);
  CsvWriter& cells = em.open(
      "dichotomy.csv", {"kind", "alpha", "n", "x0", "steps", "estimate", "stderr", "n_paths"});
  std::size_t c = 0;
  for (double a : cfg.alphas)
    for (long n : cfg.n_list) {
      const DichotomyCell& cell = tb.cells.at(c++);
      cells.row({"cell", fmt_g17(a), std::to_string(n), fmt_g17(cell.x0),
                 std::to_string(cell.steps), fmt_g17(cell.est.estimate),
                 fmt_g17(cell.est.stderr_of_mean), std::to_string(cell.est.n_paths)});
    }
  for (const DichotomyCell& ctl : tb.controls)
    cells.row({"control", fmt_g17(ctl.alpha), "0", fmt_g17(ctl.x0), std::to_string(ctl.steps),
               fmt_g17(ctl.est.estimate), fmt_g17(ctl.est.stderr_of_mean),
               std::to_string(ctl.est.n_paths)});
  CsvWriter& trends = em.open("dichotomy_trends.csv", {"alpha", "first", "last", "label"});
  for (const DichotomyTrend& tr : tb.trends)
    trends.row({fmt_g17(tr.alpha), fmt_g17(tr.first), fmt_g17(tr.last), tr.label});
}

void run_martingale_check(const ExperimentConfig& cfg, Emitter& em) {
  const CoefficientSet cs = builtin_set(cfg.set);
  const SourceTerm f = source_x2();
  std::vector<double> times = cfg.times;
  if (times.empty()) times = {cfg.T / 4.0, cfg.T / 2.0, cfg.T};
  const MartingaleTable tb = martingale_check(cs, f, cfg.T, system_start(cfg), cfg.n_paths,
                                              cfg.steps, times, cfg.seed, cfg.workers);
  CsvWriter& out =
      em.open("martingale.csv", {"t", "deviation", "stderr", "n_paths", "u00", "seed"});
  for (const MartingaleRow& r : tb.rows)
    out.row({fmt_g17(r.t), fmt_g17(r.deviation), fmt_g17(r.stderr_of_mean),
             std::to_string(r.n_paths), fmt_g17(tb.u00), std::to_string(tb.seed)});
}

void run_smalltime_decay(const ExperimentConfig& cfg, Emitter& em) {
  const CoefficientSet cs = builtin_set(cfg.set);
  const SourceTerm f = source_x2();
  const std::array<std::pair<double, double>, 2> box{
      {{-cfg.box_halfwidth, cfg.box_halfwidth}, {-cfg.box_halfwidth, cfg.box_halfwidth}}};
  const SmalltimeReport rep = smalltime_decay_probe(cs, f, cfg.t_list, box, cfg.workers);
  CsvWriter& rows =
      em.open("smalltime.csv", {"T", "sup_d1", "sup_d2", "sup_d11", "seminorm_nu"});
  for (const SmalltimeRow& r : rep.rows)
    rows.row({fmt_g17(r.T), fmt_g17(r.sup_d1), fmt_g17(r.sup_d2), fmt_g17(r.sup_d11),
              fmt_g17(r.seminorm_nu)});
  CsvWriter& slopes = em.open("smalltime_slopes.csv", {"quantity", "slope", "r2", "nu"});
  const auto put = [&](const std::string& q, const SlopeFit& s) {
    slopes.row({q, fmt_g17(s.slope), fmt_g17(s.r2), fmt_g17(rep.nu)});
  };
  put("sup_d1", rep.slope_d1);
  put("sup_d2", rep.slope_d2);
  put("sup_d11", rep.slope_d11);
  put("seminorm_nu", rep.slope_nu);
}

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  // Reject a bad coefficient-set id before anything touches the filesystem.
  if (cfg.experiment != "selection-probability" && cfg.experiment != "dichotomy")
    (void)builtin_set(cfg.set);
  else
    (void)model_from_gamma(cfg.gamma);

  RunArtifacts arts;
  arts.out_dir = cfg.out.empty() ? "runs/" + cfg.experiment : cfg.out;
  std::error_code ec;
  std::filesystem::create_directories(arts.out_dir, ec);
  if (ec)
    throw IoError("run: cannot create output directory '" + arts.out_dir + "': " + ec.message());

  // Experiments with an empty t_list pick up their per-experiment default.
  ExperimentConfig eff = cfg;
  eff.out = arts.out_dir;
  if (eff.t_list.empty()) eff.t_list = config_defaults(eff.experiment).t_list;

  Emitter em(arts);
  if (eff.experiment == "kernel-validate")
    run_kernel_validate(eff, em);
  else if (eff.experiment == "smoothing-slopes")
    run_smoothing_slopes(eff, em);
  else if (eff.experiment == "aronson-fit")
    run_aronson_fit(eff, em);
  else if (eff.experiment == "selection-probability")
    run_selection_probability(eff, em);
  else if (eff.experiment == "dichotomy")
    run_dichotomy(eff, em);
  else if (eff.experiment == "martingale-check")
    run_martingale_check(eff, em);
  else if (eff.experiment == "smalltime-decay")
    run_smalltime_decay(eff, em);
  else
    throw ConfigError("run: unknown experiment '" + eff.experiment + "'");
  em.finish();

  // Manifest: effective config echo, RNG algorithm, input hash, output hashes.
  const std::string canon = eff.canonical();
  std::string m = "# run manifest\n" + canon + "rng = philox4x32-10\n";
  m += "config_hash = " + hex64(fnv1a64(canon)) + "\n";
  for (const auto& [path, hash] : arts.files) {
    const std::string name = std::filesystem::path(path).filename().string();
    m += "output = " + name + " fnv1a64 " + hex64(hash) + "\n";
  }
  arts.manifest_path = arts.out_dir + "/manifest.txt";
  std::ofstream mf(arts.manifest_path, std::ios::binary);
  if (!mf) throw IoError("run: cannot write manifest '" + arts.manifest_path + "'");
  mf.write(m.data(), std::streamsize(m.size()));
  mf.flush();
  if (!mf) throw IoError("run: manifest write failed on '" + arts.manifest_path + "'");
  return arts;
}

}  // namespace hypolab

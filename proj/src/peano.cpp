#include "hypolab/peano.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hypolab/parallel.hpp"

namespace hypolab {

namespace {

constexpr double kFreezeBox = 1e6;

double binomial_stderr(double p, long n) {
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / double(n));
}

// Streaming Euler run of the perturbed rough-drift equation for one path;
// returns the endpoint. If `envelope` is non-null (size steps-1, value at
// grid index k+1), the run also reports whether the path fell to or below it
// strictly before the final time.
double run_peano_path(double alpha, double x0, const NoiseModel& model, double h, long steps,
                      CounterRng& rng, const std::vector<double>* envelope, bool* hit_before_end) {
  NoiseStepper stepper(model);
  double y = x0;
  bool frozen = false;
  bool hit = false;
  for (long k = 1; k <= steps; ++k) {
    if (!frozen) {
      const double drift = (y == 0.0) ? 0.0 : (y > 0.0 ? 1.0 : -1.0) * std::pow(std::abs(y), alpha);
      y += h * drift + stepper.increment(h, rng);
      if (!std::isfinite(y))
        throw BlowUpError("peano path blew up at step " + std::to_string(k) + ", component 0");
      if (std::abs(y) > kFreezeBox) frozen = true;
    }
    if (envelope && k < steps && y <= (*envelope)[std::size_t(k - 1)]) {
      hit = true;
      break;
    }
  }
  if (hit_before_end) *hit_before_end = hit;
  return y;
}

}  // namespace

EnvelopeParams envelope_params(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("envelope_params: alpha must lie in (0,1)");
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("envelope_params: beta must lie in (0,1)");
  EnvelopeParams e;
  e.alpha = alpha;
  e.beta = beta;
  e.c_alpha = std::pow(1.0 - alpha, 1.0 / (1.0 - alpha));
  e.eta = 1.0 - 0.5 * (std::pow(1.0 - beta, alpha) + (1.0 - beta));
  e.c_tilde = (beta - e.eta) * e.c_alpha;
  return e;
}

double extremal(double alpha, double t) {
  if (!(alpha < 1.0)) throw DomainError("extremal: requires alpha < 1");
  if (t < 0.0) throw DomainError("extremal: requires t >= 0");
  if (t == 0.0) return 0.0;
  return std::pow(1.0 - alpha, 1.0 / (1.0 - alpha)) * std::pow(t, 1.0 / (1.0 - alpha));
}

TauResult tau_hit(const Path& path, const EnvelopeParams& env) {
  if (path.values.rows() != 1) throw DomainError("tau_hit: path must be scalar");
  if (!(path.values(0, 0) > 0.0)) throw DomainError("tau_hit: requires a start x0 > 0");

  TauResult r;
  for (std::size_t k = 1; k < path.grid.size(); ++k)
    r.grid_step = std::max(r.grid_step, path.grid[k] - path.grid[k - 1]);
  const double lo_frac = 1.0 - env.beta;
  for (std::size_t k = 1; k < path.grid.size(); ++k) {
    const double t = path.grid[k];
    if (path.values(0, long(k)) <= lo_frac * extremal(env.alpha, t)) {
      r.tau = t;
      r.hit = true;
      return r;
    }
  }
  r.tau = std::numeric_limits<double>::infinity();
  r.hit = false;
  return r;
}

double alpha_star(double gamma) {
  if (gamma == 0.0) throw DomainError("alpha_star: gamma must be nonzero");
  return 1.0 - 1.0 / gamma;
}

double delta_exponent(double gamma, double alpha) {
  if (!(alpha < 1.0)) throw DomainError("delta_exponent: requires alpha < 1");
  return gamma - 1.0 / (1.0 - alpha);
}

ThresholdReport threshold_report(double gamma, const std::vector<double>& alphas) {
  ThresholdReport r;
  r.gamma = gamma;
  r.alpha_star = alpha_star(gamma);
  for (double a : alphas) {
    ThresholdEntry e;
    e.alpha = a;
    e.delta = delta_exponent(gamma, a);
    e.verdict = e.delta > 0.0 ? "below_threshold" : "above_threshold";
    r.entries.push_back(e);
  }
  return r;
}

double lemma_rho(const EnvelopeParams& env, double gamma, double abs_moment, double target_prob) {
  if (!(target_prob > 0.0 && target_prob < 1.0))
    throw DomainError("lemma_rho: target_prob must lie in (0,1)");
  if (!(abs_moment > 0.0)) throw DomainError("lemma_rho: abs_moment must be positive");
  const double delta = delta_exponent(gamma, env.alpha);
  if (!(delta > 0.0))
    throw AboveThresholdError("lemma_rho: requires gamma - 1/(1-alpha) > 0, got delta=" +
                              std::to_string(delta));
  return std::pow(env.c_tilde * (1.0 - target_prob) / abs_moment, 1.0 / delta);
}

McEstimate selection_probability(double alpha, double beta, const NoiseModel& model, double x0,
                                 double rho, long n_paths, long steps, std::uint64_t seed,
                                 int workers) {
  if (!(x0 > 0.0)) throw DomainError("selection_probability: requires x0 > 0");
  if (!(rho > 0.0)) throw DomainError("selection_probability: requires rho > 0");
  if (steps < 1) throw DomainError("selection_probability: steps must be >= 1");
  if (n_paths < 2) throw DomainError("selection_probability: n_paths must be >= 2");
  const EnvelopeParams env = envelope_params(alpha, beta);

  const double h = rho / double(steps);
  // Envelope values at interior grid times, shared across paths.
  std::vector<double> envelope(std::size_t(steps - 1));
  const double lo_frac = 1.0 - env.beta;
  for (long k = 1; k < steps; ++k)
    envelope[std::size_t(k - 1)] = lo_frac * extremal(alpha, double(k) * h);

  const long block = 64;
  const long n_blocks = (n_paths + block - 1) / block;
  std::vector<long> survived(std::size_t(n_blocks), 0);
  parallel_blocks(n_blocks, workers, [&](long b) {
    long count = 0;
    const long lo = b * block, hi = std::min(n_paths, lo + block);
    for (long i = lo; i < hi; ++i) {
      CounterRng rng(seed, std::uint64_t(i));
      bool hit = false;
      run_peano_path(alpha, x0, model, h, steps, rng, &envelope, &hit);
      if (!hit) ++count;
    }
    survived[std::size_t(b)] = count;
  });

  long total = 0;
  for (long c : survived) total += c;
  McEstimate est;
  est.estimate = double(total) / double(n_paths);
  est.stderr_of_mean = binomial_stderr(est.estimate, n_paths);
  est.n_paths = n_paths;
  est.seed = seed;
  return est;
}

DichotomyTable dichotomy_experiment(const std::vector<double>& alpha_list, const NoiseModel& model,
                                    const std::vector<long>& n_list, double T, long n_paths,
                                    long steps, std::uint64_t seed, int workers) {
  if (alpha_list.empty() || n_list.empty())
    throw DomainError("dichotomy_experiment: alpha_list and n_list must be nonempty");
  if (!(T > 0.0)) throw DomainError("dichotomy_experiment: T must be positive");
  if (steps < 1 || n_paths < 2) throw DomainError("dichotomy_experiment: bad path parameters");
  for (long n : n_list)
    if (n < 1) throw DomainError("dichotomy_experiment: n values must be >= 1");

  DichotomyTable table;
  table.gamma = model.gamma;
  table.T = T;
  const double h = T / double(steps);
  const long block = 64;
  const long n_blocks = (n_paths + block - 1) / block;

  std::uint64_t cell_id = 0;
  auto run_cell = [&](double alpha, double x0) {
    std::vector<long> positive(std::size_t(n_blocks), 0);
    const std::uint64_t stream_base = cell_id << 32;
    ++cell_id;
    parallel_blocks(n_blocks, workers, [&](long b) {
      long count = 0;
      const long lo = b * block, hi = std::min(n_paths, lo + block);
      for (long i = lo; i < hi; ++i) {
        CounterRng rng(seed, stream_base | std::uint64_t(i));
        if (run_peano_path(alpha, x0, model, h, steps, rng, nullptr, nullptr) > 0.0) ++count;
      }
      positive[std::size_t(b)] = count;
    });
    long total = 0;
    for (long c : positive) total += c;
    DichotomyCell cell;
    cell.alpha = alpha;
    cell.gamma = model.gamma;
    cell.x0 = x0;
    cell.steps = steps;
    cell.est.estimate = double(total) / double(n_paths);
    cell.est.stderr_of_mean = binomial_stderr(cell.est.estimate, n_paths);
    cell.est.n_paths = n_paths;
    cell.est.seed = seed;
    return cell;
  };

  for (double alpha : alpha_list) {
    std::vector<DichotomyCell> row;
    for (long n : n_list) row.push_back(run_cell(alpha, 1.0 / double(n)));
    table.controls.push_back(run_cell(alpha, 0.0));

    DichotomyTrend trend;
    trend.alpha = alpha;
    trend.first = row.front().est.estimate;
    trend.last = row.back().est.estimate;
    // The dichotomy is about where s(alpha, n) settles as x0 -> 0: staying
    // bounded well away from 1/2 is the selection signature, approaching 1/2
    // is the uniqueness signature.
    const double se_last = row.back().est.stderr_of_mean;
    if (trend.last - 3.0 * se_last >= 0.7)
      trend.label = "persistent";
    else if (trend.last + 3.0 * se_last <= 0.6)
      trend.label = "decaying-to-half";
    else
      trend.label = "inconclusive";
    table.trends.push_back(trend);
    for (auto& c : row) table.cells.push_back(std::move(c));
  }
  return table;
}

}  // namespace hypolab

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypolab/sde.hpp"

namespace hypolab {

// Envelope constants of the persistence argument: extremal prefactor
// c_alpha = (1-alpha)^{1/(1-alpha)}, the intermediate eta defined by
// (1-eta) = [(1-beta)^alpha + (1-beta)]/2, and c_tilde = (beta - eta) c_alpha.
struct EnvelopeParams {
  double alpha = 0.0;
  double beta = 0.5;
  double c_alpha = 0.0;
  double eta = 0.0;
  double c_tilde = 0.0;
};

EnvelopeParams envelope_params(double alpha, double beta);

// Extremal solution c_alpha t^{1/(1-alpha)} of dX = sign(X)|X|^alpha dt from 0.
double extremal(double alpha, double t);

// First grid time strictly after 0 at which the (scalar) path falls to or
// below the fraction (1-beta) of the extremal envelope; hit=false means the
// envelope was never crossed on the grid. grid_step records the detection
// resolution (crossings are reported at the first grid point past them).
struct TauResult {
  double tau = 0.0;
  bool hit = false;
  double grid_step = 0.0;
};

TauResult tau_hit(const Path& path, const EnvelopeParams& env);

// Threshold bookkeeping: alpha* = 1 - 1/gamma, delta(alpha) = gamma - 1/(1-alpha).
double alpha_star(double gamma);
double delta_exponent(double gamma, double alpha);

struct ThresholdEntry {
  double alpha = 0.0;
  double delta = 0.0;
  std::string verdict;  // "below_threshold" | "above_threshold"
};

struct ThresholdReport {
  double gamma = 0.0;
  double alpha_star = 0.0;
  std::vector<ThresholdEntry> entries;
};

ThresholdReport threshold_report(double gamma, const std::vector<double>& alphas);

// Largest rho certified by the Markov bound P(tau < rho) <= E|W_1| rho^delta
// / c_tilde, i.e. rho = (c_tilde (1 - target_prob) / E|W_1|)^{1/delta}.
// Requires delta = gamma - 1/(1-alpha) > 0 (AboveThresholdError otherwise).
double lemma_rho(const EnvelopeParams& env, double gamma, double abs_moment, double target_prob);

// Monte Carlo estimate of P(tau >= rho) for the perturbed rough-drift
// equation started at x0 > 0, simulated on [0, rho] with `steps` steps.
// Per-path RNG stream = path index under the master seed; block-deterministic
// reduction, so the result is independent of the worker count.
McEstimate selection_probability(double alpha, double beta, const NoiseModel& model, double x0,
                                 double rho, long n_paths, long steps, std::uint64_t seed,
                                 int workers = 0);

// One cell of the dichotomy table: P(X_T > 0) from x0.
struct DichotomyCell {
  double alpha = 0.0;
  double gamma = 0.0;
  double x0 = 0.0;
  McEstimate est;
  long steps = 0;
};

struct DichotomyTrend {
  double alpha = 0.0;
  double first = 0.0;  // estimate at the first n in the list
  double last = 0.0;   // estimate at the last n in the list
  std::string label;   // "persistent" | "decaying-to-half" | "inconclusive"
};

struct DichotomyTable {
  double gamma = 0.0;
  double T = 0.0;
  std::vector<DichotomyCell> cells;     // one per (alpha, 1/n)
  std::vector<DichotomyCell> controls;  // x0 = 0 symmetry controls, one per alpha
  std::vector<DichotomyTrend> trends;   // one per alpha
};

// For each alpha and each x0 = 1/n, estimates s(alpha, n) = P(X_T > 0), plus
// an x0 = 0 symmetry control per alpha. Persistence of s near 1 as n grows is
// the non-uniqueness signature below the threshold; decay toward 1/2 is the
// uniqueness signature above it. Each (alpha, x0) cell draws from its own
// stream range (cell index in the high stream bits), so cells are independent.
DichotomyTable dichotomy_experiment(const std::vector<double>& alpha_list, const NoiseModel& model,
                                    const std::vector<long>& n_list, double T, long n_paths,
                                    long steps, std::uint64_t seed, int workers = 0);

}  // namespace hypolab

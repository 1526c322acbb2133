#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypolab/coefficients.hpp"
#include "hypolab/rng.hpp"
#include "hypolab/stats.hpp"

namespace hypolab {

// Self-similar driving noise W with scaling W_t ~ t^gamma W_1.
struct NoiseModel {
  std::string kind;        // "brownian" | "integrated_brownian" | "scaled_brownian"
  double gamma = 0.5;      // self-similarity exponent
  double abs_moment = 0.0; // E|W_1| (analytic where known)
  double epsilon = 1.0;    // amplitude for scaled_brownian (0 = zero noise)
};

// Factory with the analytic metadata: brownian -> (1/2, sqrt(2/pi)),
// integrated_brownian -> (3/2, sqrt(2/(3 pi))), scaled_brownian(eps) ->
// (1/2, eps sqrt(2/pi)). Unknown kind -> ConfigError.
NoiseModel noise_model(const std::string& kind, double epsilon = 1.0);

// Simulated path on a time grid. values is (state dimension) x (grid size);
// column k is the state at grid[k]. values.col(0) is the initial condition
// exactly.
struct Path {
  std::vector<double> grid;
  Mat values;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  double dt = 0.0;  // uniform step, 0 if the grid is non-uniform
  std::string scheme;
};

// Per-step noise increment generator. For integrated Brownian motion each
// step draws the exact joint Gaussian of (dB, int (B_s - B_t) ds) — Var h and
// h^3/3, covariance h^2/2 — and accumulates the underlying B, so the sampled
// W = int B has no discretization bias. Draw order per step: xi1 (dB), then
// xi2 (conditional integral residual).
class NoiseStepper {
 public:
  explicit NoiseStepper(const NoiseModel& m);
  double increment(double h, CounterRng& rng);

 private:
  enum class Kind { Brownian, IntegratedBrownian, ScaledBrownian } kind_;
  double eps_ = 1.0;
  double b_ = 0.0;  // running Brownian level for the integrated model
};

// Exact-Gaussian sampling of the noise path W on the given grid (starts at 0).
Path sample_noise(const NoiseModel& model, const std::vector<double>& grid, CounterRng& rng);

// Euler-Maruyama on the two-block system: X1 gets F1 h + sigma dB, X2 gets
// F2 h. Uniform grid with `steps` steps on [0, T]. Paths leaving the box
// |x|_inf <= 1e6 are frozen at their last value; a non-finite state throws
// BlowUpError naming the first bad index.
Path simulate_system(const CoefficientSet& cs, const Vec& x0, double T, long steps,
                     CounterRng& rng);

// Explicit Euler for the perturbed rough-drift equation
//   X_t = x0 + int_0^t sign(X_s)|X_s|^alpha ds + W_t
// with the exact per-step noise increment from NoiseStepper.
Path simulate_peano(double alpha, double x0, const NoiseModel& model, double T, long steps,
                    CounterRng& rng);

}  // namespace hypolab

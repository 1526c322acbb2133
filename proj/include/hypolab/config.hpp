#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hypolab/errors.hpp"

namespace hypolab {

// Experiment identifiers accepted by the runner (one CLI subcommand each).
const std::vector<std::string>& experiment_names();

// Flat configuration of one experiment run. Every knob is a key in the
// key=value config file; unknown keys are rejected. The Gauss quadrature
// orders of the kernel integrals are compile-time Richardson pairs (32/64
// Legendre, 20 Hermite) and deliberately not configurable; the tunable
// discretization orders exposed here are the parametrix lattice (n_t, n_x)
// and the simulation sizes.
struct ExperimentConfig {
  std::string experiment;
  std::string set = "kolmogorov";  // coefficient-set id

  double alpha = 0.2;
  double beta = 0.5;
  double gamma = 1.5;
  double T = 1.0;
  long steps = 4096;
  long n_paths = 10000;
  std::uint64_t seed = 20260815;
  std::string out;  // output directory; empty = "runs/<experiment>"
  int workers = 0;  // 0 = hardware concurrency

  int n_t = 7;   // parametrix lattice: time slabs
  int n_x = 13;  // parametrix lattice: nodes per space axis

  double x0 = 0.01;   // scalar initial value (rough-drift experiments)
  double x0_1 = 0.3;  // system initial state, first block
  double x0_2 = -0.2;
  double target = 0.75;        // selection probability target
  double box_halfwidth = 0.5;  // spatial box for decay probes

  std::vector<double> alphas{0.2, 0.45};            // dichotomy drift exponents
  std::vector<long> n_list{4, 16, 64, 256};         // dichotomy start levels 1/n
  std::vector<double> t_list;                       // probe scales; empty = per-experiment default
  std::vector<double> times;                        // martingale probe times; empty = {T/4, T/2, T}

  // Assign one key from its textual value; ConfigError on unknown key or
  // unparsable value. `source` names the file/flag for error messages.
  void set_key(const std::string& key, const std::string& value, const std::string& source);
  // Domain validation (including experiment-specific requirements).
  void validate() const;
  // Canonical serialization: every key, fixed order, 17-digit floats. The
  // manifest hash is taken over this string.
  std::string canonical() const;
};

// Per-experiment defaults (the acceptance-criteria parameters).
ExperimentConfig config_defaults(const std::string& experiment);

// key=value lines in file order; '#' comments and blank lines skipped;
// duplicate keys rejected (silent last-wins corrupts sweeps).
std::vector<std::pair<std::string, std::string>> parse_kv_file(const std::string& path);

// Parse helpers shared with the CLI (ConfigError with `what` on failure).
double parse_double(const std::string& v, const std::string& what);
long parse_long(const std::string& v, const std::string& what);
std::uint64_t parse_u64(const std::string& v, const std::string& what);
std::vector<double> parse_double_list(const std::string& v, const std::string& what);
std::vector<long> parse_long_list(const std::string& v, const std::string& what);

}  // namespace hypolab

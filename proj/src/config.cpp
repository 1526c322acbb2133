#include "hypolab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "hypolab/csv.hpp"

namespace hypolab {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, double>)
      out += fmt_g17(v[i]);
    else
      out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "kernel-validate",       "smoothing-slopes", "aronson-fit",    "selection-probability",
      "dichotomy",             "martingale-check", "smalltime-decay"};
  return names;
}

double parse_double(const std::string& v, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(what + ": cannot parse '" + v + "' as a real number");
  }
}

long parse_long(const std::string& v, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(what + ": cannot parse '" + v + "' as an integer");
  }
}

std::uint64_t parse_u64(const std::string& v, const std::string& what) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return std::uint64_t(x);
  } catch (const std::exception&) {
    throw ConfigError(what + ": cannot parse '" + v + "' as an unsigned integer");
  }
}

std::vector<double> parse_double_list(const std::string& v, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), what));
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

std::vector<long> parse_long_list(const std::string& v, const std::string& what) {
  std::vector<long> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_long(trim(item), what));
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

void ExperimentConfig::set_key(const std::string& key, const std::string& value,
                               const std::string& source) {
  const std::string what = source + " key '" + key + "'";
  if (key == "experiment") {
    if (!experiment.empty() && experiment != value)
      throw ConfigError(what + ": conflicts with experiment '" + experiment + "'");
    experiment = value;
  } else if (key == "set")
    set = value;
  else if (key == "alpha")
    alpha = parse_double(value, what);
  else if (key == "beta")
    beta = parse_double(value, what);
  else if (key == "gamma")
    gamma = parse_double(value, what);
  else if (key == "T")
    T = parse_double(value, what);
  else if (key == "steps")
    steps = parse_long(value, what);
  else if (key == "n_paths")
    n_paths = parse_long(value, what);
  else if (key == "seed")
    seed = parse_u64(value, what);
  else if (key == "out")
    out = value;
  else if (key == "workers")
    workers = int(parse_long(value, what));
  else if (key == "n_t")
    n_t = int(parse_long(value, what));
  else if (key == "n_x")
    n_x = int(parse_long(value, what));
  else if (key == "x0")
    x0 = parse_double(value, what);
  else if (key == "x0_1")
    x0_1 = parse_double(value, what);
  else if (key == "x0_2")
    x0_2 = parse_double(value, what);
  else if (key == "target")
    target = parse_double(value, what);
  else if (key == "box_halfwidth")
    box_halfwidth = parse_double(value, what);
  else if (key == "alphas")
    alphas = parse_double_list(value, what);
  else if (key == "n_list")
    n_list = parse_long_list(value, what);
  else if (key == "t_list")
    t_list = parse_double_list(value, what);
  else if (key == "times")
    times = parse_double_list(value, what);
  else
    throw ConfigError(source + ": unknown key '" + key + "'");
}

void ExperimentConfig::validate() const {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), experiment) == names.end())
    throw ConfigError("config: unknown experiment '" + experiment + "'");
  if (set.empty()) throw ConfigError("config: empty coefficient-set id");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("config: alpha must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("config: beta must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 2.0)) throw ConfigError("config: gamma must lie in (0, 2]");
  if (!(T > 0.0)) throw ConfigError("config: T must be positive");
  if (steps < 1) throw ConfigError("config: steps must be >= 1");
  if (n_paths < 2) throw ConfigError("config: n_paths must be >= 2");
  if (workers < 0) throw ConfigError("config: workers must be >= 0");
  if (n_t < 2 || n_x < 2) throw ConfigError("config: lattice orders n_t, n_x must be >= 2");
  if (!(target > 0.0 && target < 1.0)) throw ConfigError("config: target must lie in (0, 1)");
  if (!(box_halfwidth > 0.0)) throw ConfigError("config: box_halfwidth must be positive");
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("config: alphas entries must lie in (0, 1)");
  for (long n : n_list)
    if (n < 1) throw ConfigError("config: n_list entries must be >= 1");
  for (std::size_t k = 0; k < t_list.size(); ++k) {
    if (!(t_list[k] > 0.0)) throw ConfigError("config: t_list entries must be positive");
    if (k > 0 && !(t_list[k] < t_list[k - 1]))
      throw ConfigError("config: t_list must decrease strictly");
  }
  for (double tv : times)
    if (!(tv > 0.0 && tv <= T)) throw ConfigError("config: times must lie in (0, T]");
  if (experiment == "selection-probability" && !(x0 > 0.0))
    throw ConfigError("config: selection-probability requires x0 > 0");
}

std::string ExperimentConfig::canonical() const {
  std::string s;
  const auto add = [&](const std::string& k, const std::string& v) { s += k + " = " + v + "\n"; };
  add("experiment", experiment);
  add("set", set);
  add("alpha", fmt_g17(alpha));
  add("alphas", join(alphas));
  add("beta", fmt_g17(beta));
  add("box_halfwidth", fmt_g17(box_halfwidth));
  add("gamma", fmt_g17(gamma));
  add("n_list", join(n_list));
  add("n_paths", std::to_string(n_paths));
  add("n_t", std::to_string(n_t));
  add("n_x", std::to_string(n_x));
  add("out", out);
  add("seed", std::to_string(seed));
  add("steps", std::to_string(steps));
  add("T", fmt_g17(T));
  add("t_list", join(t_list));
  add("target", fmt_g17(target));
  add("times", join(times));
  add("workers", std::to_string(workers));
  add("x0", fmt_g17(x0));
  add("x0_1", fmt_g17(x0_1));
  add("x0_2", fmt_g17(x0_2));
  return s;
}

ExperimentConfig config_defaults(const std::string& experiment) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), experiment) == names.end())
    throw ConfigError("config: unknown experiment '" + experiment + "'");
  ExperimentConfig c;
  c.experiment = experiment;
  c.out = "runs/" + experiment;
  if (experiment == "smoothing-slopes") {
    for (int k = 2; k <= 10; ++k) c.t_list.push_back(std::pow(0.5, k));
  } else if (experiment == "aronson-fit") {
    c.set = "heterogeneous-demo";
    c.t_list = {1e-1, 1e-2, 1e-3};
  } else if (experiment == "selection-probability") {
    c.steps = 65536;
  } else if (experiment == "martingale-check") {
    c.steps = 2048;
    c.n_paths = 100000;
  } else if (experiment == "smalltime-decay") {
    for (int k = 1; k <= 6; ++k) c.t_list.push_back(std::pow(0.5, k));
  }
  return c;
}

std::vector<std::pair<std::string, std::string>> parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open '" + path + "'");
  std::vector<std::pair<std::string, std::string>> kv;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    if (!seen.insert(key).second)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv.emplace_back(key, value);
  }
  return kv;
}

}  // namespace hypolab

#include "hypolab/sde.hpp"

#include <cmath>

namespace hypolab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFreezeBox = 1e6;

void check_finite(const Vec& x, long step) {
  for (int i = 0; i < x.size(); ++i)
    if (!std::isfinite(x(i)))
      throw BlowUpError("simulation blew up at step " + std::to_string(step) +
                        ", component " + std::to_string(i));
}

}  // namespace

NoiseModel noise_model(const std::string& kind, double epsilon) {
  NoiseModel m;
  m.kind = kind;
  m.epsilon = epsilon;
  if (kind == "brownian") {
    m.gamma = 0.5;
    m.abs_moment = std::sqrt(2.0 / kPi);
  } else if (kind == "integrated_brownian") {
    m.gamma = 1.5;
    m.abs_moment = std::sqrt(2.0 / (3.0 * kPi));
  } else if (kind == "scaled_brownian") {
    m.gamma = 0.5;
    m.abs_moment = std::abs(epsilon) * std::sqrt(2.0 / kPi);
  } else {
    throw ConfigError("unknown noise model '" + kind + "'");
  }
  return m;
}

NoiseStepper::NoiseStepper(const NoiseModel& m) : eps_(m.epsilon) {
  if (m.kind == "brownian")
    kind_ = Kind::Brownian;
  else if (m.kind == "integrated_brownian")
    kind_ = Kind::IntegratedBrownian;
  else if (m.kind == "scaled_brownian")
    kind_ = Kind::ScaledBrownian;
  else
    throw ConfigError("unknown noise model '" + m.kind + "'");
}

double NoiseStepper::increment(double h, CounterRng& rng) {
  switch (kind_) {
    case Kind::Brownian:
      return std::sqrt(h) * rng.next_gaussian();
    case Kind::ScaledBrownian:
      return eps_ * std::sqrt(h) * rng.next_gaussian();
    case Kind::IntegratedBrownian: {
      const double db = std::sqrt(h) * rng.next_gaussian();
      const double di = 0.5 * h * db + std::sqrt(h * h * h / 12.0) * rng.next_gaussian();
      const double dw = b_ * h + di;
      b_ += db;
      return dw;
    }
  }
  return 0.0;  // unreachable
}

Path sample_noise(const NoiseModel& model, const std::vector<double>& grid, CounterRng& rng) {
  if (grid.size() < 2) throw GridError("sample_noise: grid needs at least two points");
  if (grid.front() != 0.0) throw GridError("sample_noise: grid must start at 0");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw GridError("sample_noise: grid must be increasing");

  Path p;
  p.grid = grid;
  p.values = Mat::Zero(1, long(grid.size()));
  p.seed = rng.seed();
  p.stream = rng.stream();
  p.scheme = "exact-gaussian:" + model.kind;

  NoiseStepper stepper(model);
  double w = 0.0;
  bool uniform = true;
  const double h0 = grid[1] - grid[0];
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double h = grid[k] - grid[k - 1];
    if (std::abs(h - h0) > 1e-12 * std::max(1.0, std::abs(h0))) uniform = false;
    w += stepper.increment(h, rng);
    p.values(0, long(k)) = w;
  }
  p.dt = uniform ? h0 : 0.0;
  return p;
}

Path simulate_system(const CoefficientSet& cs, const Vec& x0, double T, long steps,
                     CounterRng& rng) {
  const int d = cs.d;
  if (x0.size() != 2 * d) throw DomainError("simulate_system: x0 must lie in R^{2d}");
  if (steps < 1) throw DomainError("simulate_system: steps must be >= 1");
  if (!(T > 0.0)) throw DomainError("simulate_system: T must be positive");

  Path p;
  p.grid.resize(std::size_t(steps) + 1);
  p.values = Mat(2 * d, steps + 1);
  p.seed = rng.seed();
  p.stream = rng.stream();
  p.dt = T / double(steps);
  p.scheme = "euler-maruyama";

  const double h = p.dt;
  const double sqh = std::sqrt(h);
  Vec x = x0;
  Vec db(d);
  p.grid[0] = 0.0;
  p.values.col(0) = x;
  bool frozen = false;
  for (long k = 1; k <= steps; ++k) {
    const double t = double(k - 1) * h;
    if (!frozen) {
      for (int i = 0; i < d; ++i) db(i) = sqh * rng.next_gaussian();
      Vec xn(2 * d);
      xn.head(d) = x.head(d) + h * cs.f1(t, x) + cs.sigma(t, x) * db;
      xn.tail(d) = x.tail(d) + h * cs.f2(t, x);
      check_finite(xn, k);
      x = xn;
      if (x.cwiseAbs().maxCoeff() > kFreezeBox) frozen = true;
    }
    p.grid[std::size_t(k)] = double(k) * h;
    p.values.col(k) = x;
  }
  return p;
}

Path simulate_peano(double alpha, double x0, const NoiseModel& model, double T, long steps,
                    CounterRng& rng) {
  if (!(alpha < 1.0)) throw DomainError("simulate_peano: requires alpha < 1");
  if (steps < 1) throw DomainError("simulate_peano: steps must be >= 1");
  if (!(T > 0.0)) throw DomainError("simulate_peano: T must be positive");

  Path p;
  p.grid.resize(std::size_t(steps) + 1);
  p.values = Mat(1, steps + 1);
  p.seed = rng.seed();
  p.stream = rng.stream();
  p.dt = T / double(steps);
  p.scheme = "euler-exact-noise:" + model.kind;

  NoiseStepper stepper(model);
  const double h = p.dt;
  double y = x0;
  p.grid[0] = 0.0;
  p.values(0, 0) = y;
  bool frozen = false;
  for (long k = 1; k <= steps; ++k) {
    if (!frozen) {
      const double drift = (y == 0.0) ? 0.0 : (y > 0.0 ? 1.0 : -1.0) * std::pow(std::abs(y), alpha);
      y += h * drift + stepper.increment(h, rng);
      if (!std::isfinite(y))
        throw BlowUpError("simulate_peano blew up at step " + std::to_string(k) + ", component 0");
      if (std::abs(y) > kFreezeBox) frozen = true;
    }
    p.grid[std::size_t(k)] = double(k) * h;
    p.values(0, k) = y;
  }
  return p;
}

}  // namespace hypolab

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "hypolab/coefficients.hpp"

using hypolab::CoefficientSet;
using hypolab::ConfigError;
using hypolab::EvaluationError;
using hypolab::Mat;
using hypolab::PeanoDrift;
using hypolab::Probe;
using hypolab::ValidationReport;
using hypolab::Vec;
using hypolab::builtin_set;
using hypolab::builtin_set_names;
using hypolab::halton_probes;
using hypolab::mollify;
using hypolab::validate;

namespace {
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST_CASE("kolmogorov set is the constant-coefficient chain") {
  const CoefficientSet cs = builtin_set("kolmogorov");
  CHECK(cs.d == 1);
  const Vec x = v2(0.7, -1.3);
  CHECK(cs.f1(0.2, x)(0) == 0.0);
  CHECK(cs.f2(0.2, x)(0) == doctest::Approx(0.7));
  CHECK(cs.sigma(0.2, x)(0, 0) == 1.0);
  CHECK(cs.d1f2(0.2, x)(0, 0) == 1.0);
  CHECK(cs.exponents.claims_threshold);
  CHECK(cs.x1_of(x)(0) == 0.7);
  CHECK(cs.x2_of(x)(0) == -1.3);
}

TEST_CASE("peano sets parse the drift exponent") {
  const CoefficientSet cs = builtin_set("peano:0.25");
  const Vec x = v2(0.5, 0.0625);  // |x2|^{1/4} = 0.5
  CHECK(cs.f2(0.0, x)(0) == doctest::Approx(0.5 + 0.5).epsilon(1e-14));
  const Vec xn = v2(0.0, -0.0625);
  CHECK(cs.f2(0.0, xn)(0) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(cs.exponents.beta22 == doctest::Approx(0.25));
  // 0.25 sits below the 1/3 regularity threshold; 0.45 sits above it.
  CHECK_FALSE(cs.exponents.claims_threshold);
  CHECK(builtin_set("peano:0.45").exponents.claims_threshold);
}

TEST_CASE("builtin_set rejects malformed ids") {
  CHECK_THROWS_AS(builtin_set("nosuch"), ConfigError);
  CHECK_THROWS_AS(builtin_set("peano:junk"), ConfigError);
  CHECK_THROWS_AS(builtin_set("peano:1.5"), ConfigError);
  CHECK_THROWS_AS(builtin_set("peano:0"), ConfigError);
  CHECK(builtin_set_names().size() == 3);
}

TEST_CASE("PeanoDrift is the signed power") {
  CHECK_THROWS_AS(PeanoDrift(1.0), hypolab::NumericError);
  CHECK_THROWS_AS(PeanoDrift(-1.0), hypolab::NumericError);
  const PeanoDrift d(0.2);
  CHECK(d(0.0) == 0.0);
  CHECK(d(32.0) == doctest::Approx(std::pow(32.0, 0.2)).epsilon(1e-15));
  CHECK(d(-32.0) == doctest::Approx(-std::pow(32.0, 0.2)).epsilon(1e-15));
}

TEST_CASE("halton probes cover the requested box") {
  const std::vector<std::pair<double, double>> box{{-1.0, 2.0}, {0.5, 0.75}};
  const auto probes = halton_probes(200, 3.0, box);
  REQUIRE(probes.size() == 200);
  double tmin = 1e300, tmax = -1e300;
  for (const Probe& p : probes) {
    REQUIRE(p.x.size() == 2);
    CHECK(p.t >= 0.0);
    CHECK(p.t <= 3.0);
    CHECK(p.x(0) >= -1.0);
    CHECK(p.x(0) <= 2.0);
    CHECK(p.x(1) >= 0.5);
    CHECK(p.x(1) <= 0.75);
    tmin = std::min(tmin, p.t);
    tmax = std::max(tmax, p.t);
  }
  CHECK(tmax - tmin > 1.5);  // actually spread over [0, T], not clustered
}

TEST_CASE("validation passes on the shipped smooth sets") {
  const std::vector<std::pair<double, double>> box{{-1.0, 1.0}, {-1.0, 1.0}};
  const auto probes = halton_probes(128, 1.0, box);
  for (const char* id : {"kolmogorov", "heterogeneous-demo"}) {
    const ValidationReport rep = validate(builtin_set(id), probes);
    CHECK_MESSAGE(rep.all_pass, id);
    REQUIRE(rep.find("(H2) ellipticity of sigma sigma*") != nullptr);
    CHECK(rep.find("(H2) ellipticity of sigma sigma*")->pass);
    REQUIRE(rep.find("(H3-b) non-degeneracy of (D1F2)(D1F2)*") != nullptr);
    CHECK(rep.find("(H3-b) non-degeneracy of (D1F2)(D1F2)*")->pass);
    REQUIRE(rep.find("d1f2 finite-difference consistency") != nullptr);
    CHECK(rep.find("d1f2 finite-difference consistency")->worst < 1e-6);
  }
}

TEST_CASE("validation flags an ellipticity violation") {
  CoefficientSet cs = builtin_set("kolmogorov");
  cs.sigma = [](double, const Vec&) { return (3.0 * Mat::Identity(1, 1)).eval(); };
  const auto probes = halton_probes(16, 1.0, {{-1.0, 1.0}, {-1.0, 1.0}});
  const ValidationReport rep = validate(cs, probes);
  CHECK_FALSE(rep.all_pass);
  REQUIRE(rep.find("(H2) ellipticity of sigma sigma*") != nullptr);
  CHECK_FALSE(rep.find("(H2) ellipticity of sigma sigma*")->pass);
}

TEST_CASE("validation flags a wrong analytic derivative") {
  CoefficientSet cs = builtin_set("kolmogorov");
  cs.d1f2 = [](double, const Vec&) { return (2.0 * Mat::Identity(1, 1)).eval(); };
  const auto probes = halton_probes(16, 1.0, {{-1.0, 1.0}, {-1.0, 1.0}});
  const ValidationReport rep = validate(cs, probes);
  REQUIRE(rep.find("d1f2 finite-difference consistency") != nullptr);
  CHECK_FALSE(rep.find("d1f2 finite-difference consistency")->pass);
}

TEST_CASE("non-finite coefficient values throw with the probe named") {
  CoefficientSet cs = builtin_set("kolmogorov");
  cs.f1 = [](double, const Vec&) {
    Vec v(1);
    v(0) = std::numeric_limits<double>::quiet_NaN();
    return v;
  };
  const auto probes = halton_probes(4, 1.0, {{-1.0, 1.0}, {-1.0, 1.0}});
  CHECK_THROWS_AS(validate(cs, probes), EvaluationError);
}

TEST_CASE("mollification smooths the rough drift without moving smooth points") {
  const CoefficientSet rough = builtin_set("peano:0.25");
  const CoefficientSet smooth = mollify(rough, 64);
  CHECK(smooth.id.find("mollified") != std::string::npos);
  CHECK(smooth.exponents.beta22 == doctest::Approx(0.25));  // metadata preserved

  // Away from the kink the convolution barely moves the value...
  const Vec far = v2(0.3, 0.8);
  CHECK(smooth.f2(0.0, far)(0) ==
        doctest::Approx(rough.f2(0.0, far)(0)).epsilon(5e-3));
  // ...and at the kink the mollified drift is odd in x2, so it vanishes there.
  const Vec kink = v2(0.0, 0.0);
  CHECK(std::abs(smooth.f2(0.0, kink)(0)) < 1e-12);
  // Mollified drift stays between the monotone envelope values around it.
  const double lo = rough.f2(0.0, v2(0.0, 0.8 - 2.0 / 64.0))(0);
  const double hi = rough.f2(0.0, v2(0.0, 0.8 + 2.0 / 64.0))(0);
  const double mid = smooth.f2(0.0, v2(0.0, 0.8))(0);
  CHECK(mid >= lo - 1e-12);
  CHECK(mid <= hi + 1e-12);
}

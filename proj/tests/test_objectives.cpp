#include <doctest.h>

#include <cmath>

#include "sadam/numerics.hpp"
#include "sadam/objectives.hpp"

using namespace sadam;

namespace {

double sgn(double v) { return (v > 0) - (v < 0); }

// Independent interval oracle: dist(0, [lo, hi]).
double dist0(double lo, double hi) {
  if (lo <= 0 && 0 <= hi) return 0.0;
  return std::min(std::abs(lo), std::abs(hi));
}

}  // namespace

TEST_CASE("synthetic landscape examples") {
  SyntheticLandscape f;
  CHECK(f.value(ParamVector{1, 1}) == 1.0);
  CHECK(*f.clarke_distance(ParamVector{1, 1}) == 0.0);
  CHECK(f.value(ParamVector{0, 0}) == 2.0);
  CHECK(f.value(ParamVector{2, 1}) == 3.5);
  CHECK(f.gradient(ParamVector{2, 1})[0] == 3.0);
  CHECK(f.gradient(ParamVector{0, 0}) == ParamVector{-1, -1});
  // sign(0) = 0 at the kink
  CHECK(f.gradient(ParamVector{1, 1}) == ParamVector{1, 1});
  CHECK_THROWS_AS(f.value(ParamVector{1, 1, 1}), DimensionError);
  CHECK_THROWS_AS(f.gradient(ParamVector{1}), DimensionError);
  CHECK(f.has_clarke_oracle());
}

TEST_CASE("synthetic landscape: gradient lies in the Clarke set at random points") {
  SyntheticLandscape f;
  SeededRng rng(5, Stream::kAux);
  for (int i = 0; i < 10000; ++i) {
    ParamVector x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    if (i % 7 == 0) x[i % 2] = 1.0;  // exercise the kink lines
    const auto g = f.gradient(x);
    double parts = 0.0;
    for (int c = 0; c < 2; ++c) {
      double lo = x[c] + sgn(x[c] - 1), hi = lo;
      if (x[c] == 1.0) lo = x[c] - 1, hi = x[c] + 1;
      REQUIRE(lo <= g[c]);
      REQUIRE(g[c] <= hi);
      parts += dist0(lo, hi) * dist0(lo, hi);
    }
    REQUIRE(*f.clarke_distance(x) == doctest::Approx(std::sqrt(parts)).epsilon(1e-15));
  }
}

TEST_CASE("l1_quadratic examples") {
  CHECK_THROWS(L1Quadratic({0.0}, -1.0, {1.0}));
  CHECK_THROWS_AS(L1Quadratic({0.0, 1.0}, 1.0, {1.0}), DimensionError);

  // c = 0: smooth quadratic, distance = ||Qx||
  L1Quadratic smooth({0.5, -1.0}, 0.0, {2.0, 3.0});
  const ParamVector x{0.7, -0.2};
  CHECK(*smooth.clarke_distance(x) == doctest::Approx(std::hypot(1.4, -0.6)));

  L1Quadratic pure({0.0}, 1.0, {0.0});
  CHECK(*pure.clarke_distance(ParamVector{0.0}) == 0.0);

  // 0.3 + c*sign(0.3) with a = 0 is away from the kink: {1.3}; at x = a the set is [-1, 1]
  L1Quadratic f({0.0}, 1.0, {1.0});
  CHECK(*f.clarke_distance(ParamVector{0.0}) == 0.0);
  CHECK(*f.clarke_distance(ParamVector{0.3}) == doctest::Approx(1.3));
  // anchored at the point: 0.3 + [-1, 1] contains 0
  L1Quadratic g({0.3}, 1.0, {1.0});
  CHECK(*g.clarke_distance(ParamVector{0.3}) == 0.0);
  CHECK(g.value(ParamVector{0.3}) == doctest::Approx(0.045));
}

TEST_CASE("l1_quadratic: subgradient membership and stationary set") {
  SeededRng rng(9, Stream::kAux);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + rng.uniform_index(5);
    std::vector<double> a(d), q(d);
    for (std::size_t i = 0; i < d; ++i) {
      a[i] = rng.uniform(-2, 2);
      q[i] = rng.uniform(0, 3);
    }
    const double c = rng.uniform(0, 2);
    L1Quadratic f(a, c, q);
    for (int i = 0; i < 100; ++i) {
      ParamVector x(d);
      for (std::size_t j = 0; j < d; ++j) x[j] = i % 5 == 0 ? a[j] : rng.uniform(-3, 3);
      const auto g = f.gradient(x);
      double parts = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double lo = q[j] * x[j] + c * sgn(x[j] - a[j]), hi = lo;
        if (x[j] == a[j]) lo = q[j] * x[j] - c, hi = q[j] * x[j] + c;
        REQUIRE(lo <= g[j]);
        REQUIRE(g[j] <= hi);
        parts += dist0(lo, hi) * dist0(lo, hi);
      }
      REQUIRE(*f.clarke_distance(x) == doctest::Approx(std::sqrt(parts)));
    }
    // known stationary point: per coordinate, a_j if |q_j a_j| <= c else the smooth root
    ParamVector xs(d);
    for (std::size_t j = 0; j < d; ++j) {
      if (std::abs(q[j] * a[j]) <= c) {
        xs[j] = a[j];
      } else {
        xs[j] = -c * sgn(-a[j]) / q[j];
      }
    }
    CHECK(*f.clarke_distance(xs) <= 1e-12);
  }
}

TEST_CASE("quadratic, linear and constant references") {
  Matrix h(2, 2);
  h(0, 0) = 2;
  h(1, 1) = 4;
  h(0, 1) = h(1, 0) = 1;
  Quadratic q(ParamVector{1, -1}, h);
  CHECK(q.value(ParamVector{1, 1}) == doctest::Approx(0.0 + 0.5 * 8.0));
  CHECK(q.gradient(ParamVector{1, 1}) == ParamVector{4, 4});
  CHECK(*q.clarke_distance(ParamVector{1, 1}) == doctest::Approx(std::sqrt(32.0)));
  Matrix bad(2, 2);
  bad(0, 1) = 1;
  CHECK_THROWS(Quadratic(ParamVector{0, 0}, bad));
  CHECK_THROWS_AS(Quadratic(ParamVector{0, 0, 0}, h), DimensionError);

  Linear lin(ParamVector{3, 4});
  CHECK(lin.value(ParamVector{1, 1}) == 7.0);
  CHECK(*lin.clarke_distance(ParamVector{9, 9}) == 5.0);

  Constant c(3, 2.5);
  CHECK(c.value(ParamVector{1, 2, 3}) == 2.5);
  CHECK(c.gradient(ParamVector{1, 2, 3}) == ParamVector(3));
  CHECK(*c.clarke_distance(ParamVector(3)) == 0.0);
  CHECK_THROWS(Constant(0, 1.0));
}

TEST_CASE("quantize examples") {
  const QuantizerConfig q{4.0, -2, 1};
  CHECK(quantize(0.37, q) == 1.0);
  CHECK(quantize(10.0, q) == 1.0);
  CHECK(quantize(-10.0, q) == -2.0);
  const QuantizerConfig wide{4.0, -8, 7};
  CHECK(quantize(-0.125, wide) == 0.0);
  CHECK_FALSE(std::signbit(quantize(-0.125, wide)));
  CHECK(quantize(0.125, wide) == 0.0);
  CHECK(quantize(0.375, wide) == 2.0);  // 1.5 rounds to even
  CHECK(quantize(0.625, wide) == 2.0);  // 2.5 rounds to even
  CHECK_THROWS((QuantizerConfig{0.0, -1, 1}.validate()));
  CHECK_THROWS((QuantizerConfig{1.0, 1, 1}.validate()));
  CHECK_THROWS((QuantizerConfig{-1.0, -1, 1}.validate()));
}

TEST_CASE("quantize output is integral and dequantize-idempotent") {
  SeededRng rng(17, Stream::kAux);
  const QuantizerConfig q{8.0, -8, 7};
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.uniform(-3, 3);
    const double level = quantize(x, q);
    REQUIRE(level == std::round(level));
    REQUIRE(level >= q.q_min);
    REQUIRE(level <= q.q_max);
    const double once = dequantize(level, q);
    REQUIRE(dequantize(quantize(once, q), q) == once);
  }
  const std::vector<double> xs{0.0, 0.1, 5.0};
  CHECK(quantize(xs, q) == std::vector<double>{0.0, 1.0, 7.0});
}

TEST_CASE("ste gradient masks the clamped region") {
  const QuantizerConfig q{4.0, -2, 1};
  const std::vector<double> up{1.5, -2.0, 3.0, 4.0};
  const std::vector<double> x{0.1, 100.0, -0.5, -0.6};
  // x*scale: 0.4 (in), 400 (out), -2 (edge, in), -2.4 (out)
  CHECK(ste_gradient(up, x, q) == std::vector<double>{1.5, 0.0, 3.0, 0.0});
  CHECK_THROWS_AS(ste_gradient(up, std::vector<double>{1.0}, q), DimensionError);
}

TEST_CASE("staircase objective") {
  const QuantizerConfig q{4.0, -8, 7};
  Staircase f(q, 0.25);
  CHECK(f.value(ParamVector{0.25}) == 0.0);
  CHECK(f.value(ParamVector{0.3}) == 0.0);  // 1.2 rounds to level 1 -> 0.25
  CHECK(f.value(ParamVector{0.0}) == doctest::Approx(0.0625));
  // piecewise constant away from the jumps
  CHECK(f.value(ParamVector{0.2}) == f.value(ParamVector{0.3}));
  CHECK(f.value(ParamVector{0.12}) != f.value(ParamVector{0.13}));
  CHECK(f.distance_to_jump(0.0) == doctest::Approx(0.125));
  CHECK(f.distance_to_jump(0.12) == doctest::Approx(0.005));
  const auto jumps = f.jump_points();
  CHECK(jumps.size() == static_cast<std::size_t>(q.q_max - q.q_min));
  CHECK(jumps.front() == doctest::Approx(-7.5 / 4.0));
  CHECK(f.gradient(ParamVector{0.0})[0] == doctest::Approx(-0.5));
  CHECK(f.gradient(ParamVector{100.0})[0] == 0.0);
  Staircase no_ste(q, 0.25, 1, false);
  CHECK(no_ste.gradient(ParamVector{0.0})[0] == 0.0);
  CHECK_FALSE(f.has_clarke_oracle());

  Staircase f2(q, 0.3, 2);
  CHECK(f2.dim() == 2);
  CHECK(f2.value(ParamVector{0.25, 0.25}) == doctest::Approx(2 * 0.05 * 0.05));
}

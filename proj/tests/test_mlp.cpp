#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sadam/mlp.hpp"

using namespace sadam;

namespace {

SampleSet blobs(std::size_t n, std::uint64_t seed = 1) {
  SeededRng rng(seed, Stream::kAux);
  return make_blobs(n, 2, 3.0, rng);
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace

TEST_CASE("make_blobs produces balanced, separated classes") {
  const SampleSet s = blobs(400);
  CHECK(s.size() == 400);
  CHECK(s.feature_dim() == 2);
  double mean0 = 0.0, mean1 = 0.0;
  int n0 = 0, n1 = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.labels[i] == static_cast<int>(i % 2));
    const double proj = (s.inputs[i][0] + s.inputs[i][1]) / std::sqrt(2.0);
    if (s.labels[i] == 0) {
      mean0 += proj;
      ++n0;
    } else {
      mean1 += proj;
      ++n1;
    }
  }
  CHECK(n0 == n1);
  // centres sit at -/+ separation/2 along the diagonal
  CHECK(mean0 / n0 == doctest::Approx(-1.5).epsilon(0.1));
  CHECK(mean1 / n1 == doctest::Approx(1.5).epsilon(0.1));

  SeededRng rng(1, Stream::kAux);
  CHECK_THROWS(make_blobs(1, 2, 3.0, rng));
}

TEST_CASE("SampleSet validation and CSV") {
  SampleSet bad;
  CHECK_THROWS(bad.validate());
  bad.inputs = {{1.0, 2.0}, {3.0}};
  bad.labels = {0, 1};
  CHECK_THROWS(bad.validate());
  SampleSet ok;
  ok.inputs = {{0.5, -1.0}, {2.0, 0.0}};
  ok.labels = {0, 1};
  std::ostringstream os;
  write_csv(os, ok);
  CHECK(os.str() == "x0,x1,label\n0.5,-1,0\n2,0,1\n");
}

TEST_CASE("parameter layout") {
  TinyMlp mlp({2, 16, 16, 2});
  CHECK(mlp.param_count() == (2 * 16 + 16) + (16 * 16 + 16) + (16 * 2 + 2));
  CHECK(mlp.num_layers() == 3);
  CHECK(mlp.weight_offset(0) == 0);
  CHECK(mlp.bias_offset(0) == 32);
  CHECK(mlp.weight_offset(1) == 48);
  CHECK(mlp.is_weight_index(0));
  CHECK_FALSE(mlp.is_weight_index(32));
  CHECK(mlp.is_weight_index(48));
  CHECK_THROWS(TinyMlp({2}));
}

TEST_CASE("zero weights on a balanced batch give ln 2") {
  TinyMlp mlp({2, 16, 16, 2});
  const SampleSet s = blobs(64);
  const ParamVector zero(mlp.param_count());
  const auto idx = all_indices(64);
  CHECK(std::abs(mlp.loss(zero, s, idx) - std::log(2.0)) < 1e-9);
  CHECK_THROWS(mlp.loss(zero, s, {}));
}

TEST_CASE("He init: zero biases and weight spread near sqrt(2 / fan_in)") {
  TinyMlp mlp({2, 64, 2});
  SeededRng rng(3, Stream::kInit);
  const auto w = mlp.init_params(rng);
  double ss = 0.0;
  for (std::size_t i = 0; i < 128; ++i) ss += w[i] * w[i];
  CHECK(std::sqrt(ss / 128) == doctest::Approx(1.0).epsilon(0.2));
  for (std::size_t i = mlp.bias_offset(0); i < mlp.bias_offset(0) + 64; ++i) CHECK(w[i] == 0.0);
}

TEST_CASE("backprop matches central finite differences away from ReLU kinks") {
  TinyMlp mlp({2, 16, 16, 2});
  const SampleSet s = blobs(32, 7);
  const auto idx = all_indices(32);
  SeededRng rng(11, Stream::kInit);
  int checked_points = 0;
  double worst = 0.0;
  for (int attempt = 0; attempt < 1000 && checked_points < 100; ++attempt) {
    ParamVector w = mlp.init_params(rng);
    for (auto& v : w) v += 0.1 * rng.normal();
    if (mlp.min_hidden_margin(w, s, idx) < 1e-3) continue;
    ++checked_points;
    const auto lg = mlp.loss_and_gradient(w, s, idx);
    for (std::size_t i = 0; i < w.dim(); ++i) {
      const double h = 1e-5;
      ParamVector a = w, b = w;
      a[i] += h;
      b[i] -= h;
      const double fd = (mlp.loss(a, s, idx) - mlp.loss(b, s, idx)) / (2 * h);
      const double rel = std::abs(fd - lg.gradient[i]) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, rel);
    }
  }
  CHECK(checked_points == 100);
  CHECK(worst < 1e-6);
}

TEST_CASE("quantized MLP: finite differences vanish on plateaus, STE does not") {
  const QuantizerConfig q{4.0, -8, 7};
  TinyMlp mlp({2, 8, 2}, q);
  const SampleSet s = blobs(32, 5);
  const auto idx = all_indices(32);
  SeededRng rng(2, Stream::kInit);
  ParamVector w = mlp.init_params(rng);
  for (std::size_t i = 0; i < w.dim(); ++i) {
    if (mlp.is_weight_index(i)) w[i] = fake_quantize(w[i], q);  // plateau centre
  }
  const auto lg = mlp.loss_and_gradient(w, s, idx);
  double ste_norm = 0.0;
  for (std::size_t i = 0; i < w.dim(); ++i) {
    if (!mlp.is_weight_index(i)) continue;
    const double h = 1e-4;
    ParamVector a = w, b = w;
    a[i] += h;
    b[i] -= h;
    CHECK(mlp.loss(a, s, idx) == mlp.loss(b, s, idx));
    ste_norm += lg.gradient[i] * lg.gradient[i];
  }
  CHECK(ste_norm > 0.0);
  CHECK(lg.loss == doctest::Approx(mlp.loss(w, s, idx)));
}

TEST_CASE("MlpObjective: empty batch means the full dataset") {
  TinyMlp mlp({2, 4, 2});
  const SampleSet s = blobs(10);
  MlpObjective f(mlp, s);
  SeededRng rng(1, Stream::kInit);
  const auto w = mlp.init_params(rng);
  const auto idx = all_indices(10);
  CHECK(f.value(w) == mlp.loss(w, s, idx));
  CHECK(f.gradient(w) == mlp.loss_and_gradient(w, s, idx).gradient);
  CHECK(f.sample_count() == 10);
  CHECK(f.id() == "mlp");
  CHECK(MlpObjective(TinyMlp({2, 4, 2}, QuantizerConfig{}), s).id() == "mlp_quantized");
  CHECK_THROWS_AS(MlpObjective(TinyMlp({3, 4, 2}), s), DimensionError);
}

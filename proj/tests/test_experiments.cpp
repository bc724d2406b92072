#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "sadam/experiments.hpp"
#include "sadam/hash.hpp"

using namespace sadam;

namespace {

// Slope -1 in x0 until x0 passes 0.5, then the gradient turns NaN.
class Cliff final : public Objective {
 public:
  std::string id() const override { return "cliff"; }
  std::size_t dim() const override { return 1; }
  double value(const ParamVector& x, Batch) const override { return -x[0]; }
  ParamVector gradient(const ParamVector& x, Batch) const override {
    if (x[0] > 0.5) return ParamVector{std::numeric_limits<double>::quiet_NaN()};
    return ParamVector{-1.0};
  }
};

// Finite only inside the unit disc.
class Disc final : public Objective {
 public:
  std::string id() const override { return "disc"; }
  std::size_t dim() const override { return 2; }
  double value(const ParamVector& x, Batch) const override {
    const double r = norm2(x);
    return r < 1.0 ? r : std::numeric_limits<double>::infinity();
  }
  ParamVector gradient(const ParamVector& x, Batch) const override { return x; }
};

ExperimentConfig synthetic_config(std::size_t steps) {
  ExperimentConfig cfg;
  cfg.name = "t";
  cfg.steps = steps;
  cfg.chatter_window = 0;
  return cfg;
}

std::string csv_of(const RunRecord& r) {
  std::ostringstream os;
  write_run_csv(os, r, "abc");
  return os.str();
}

ExperimentConfig mlp_config() {
  ExperimentConfig cfg;
  cfg.objective.id = "mlp";
  cfg.objective.widths = {2, 8, 2};
  cfg.objective.quantized = true;
  cfg.objective.n_samples = 32;
  cfg.batch_size = 8;
  cfg.steps = 60;
  cfg.optimizer.adam.lr = 0.01;
  return cfg;
}

}  // namespace

TEST_CASE("a single step gives exactly one row") {
  const auto rec = run_single(synthetic_config(1), 1);
  REQUIRE(rec.rows.size() == 1);
  CHECK(rec.rows[0].t == 1);
  CHECK(rec.status == "ok");
  CHECK(rec.summary.steps_completed == 1);
  CHECK_FALSE(rec.summary.chattering);
}

TEST_CASE("record_every thins rows but keeps the last step") {
  auto cfg = synthetic_config(25);
  cfg.record_every = 10;
  const auto rec = run_single(cfg, 1);
  REQUIRE(rec.rows.size() == 3);
  CHECK(rec.rows[0].t == 10);
  CHECK(rec.rows[1].t == 20);
  CHECK(rec.rows[2].t == 25);
}

TEST_CASE("runs are deterministic per seed") {
  auto cfg = synthetic_config(300);
  cfg.chatter_window = 50;
  const auto a = csv_of(run_single(cfg, 7));
  const auto b = csv_of(run_single(cfg, 7));
  const auto c = csv_of(run_single(cfg, 8));
  CHECK(sha256_hex(a) == sha256_hex(b));
  CHECK(a != c);
  CHECK(a.rfind("# config_sha256=abc\n", 0) == 0);
  CHECK(a.find(kRunCsvHeader) != std::string::npos);

  auto mcfg = mlp_config();
  CHECK(csv_of(run_single(mcfg, 3)) == csv_of(run_single(mcfg, 3)));
}

TEST_CASE("S-Adam defaults reach the minimizer of the synthetic landscape") {
  auto cfg = synthetic_config(20000);
  const auto rec = run_single(cfg, 42);
  REQUIRE(rec.status == "ok");
  CHECK(std::abs(rec.final_point[0] - 1.0) <= 0.05);
  CHECK(std::abs(rec.final_point[1] - 1.0) <= 0.05);
  CHECK(rec.summary.min_clarke_dist);
  CHECK(rec.summary.best_loss <= rec.rows.front().loss);
}

TEST_CASE("run_experiment returns one record per seed in order") {
  auto cfg = synthetic_config(10);
  cfg.seeds = {5, 2, 9};
  const auto recs = run_experiment(cfg);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].seed == 5);
  CHECK(recs[1].seed == 2);
  CHECK(recs[2].seed == 9);
  cfg.seeds.clear();
  CHECK_THROWS(run_experiment(cfg));
}

TEST_CASE("chattering index examples") {
  const std::vector<ParamVector> same(11, ParamVector{0.3, -0.1});
  const std::vector<double> flat(11, 2.0);
  const auto c0 = chattering_index(same, flat, 10);
  CHECK(c0.cosine == 0.0);
  CHECK(c0.loss_cv == 0.0);

  std::vector<ParamVector> alternating;
  std::vector<double> losses;
  for (int i = 0; i < 11; ++i) {
    alternating.push_back(ParamVector{i % 2 ? -1.0 : 1.0, 0.0});
    losses.push_back(i % 2 ? 1.0 : 3.0);
  }
  const auto c2 = chattering_index(alternating, losses, 10);
  CHECK(c2.cosine == 2.0);
  // population sd over 11 values (6 threes, 5 ones) divided by the mean
  const double mean = (6 * 3.0 + 5 * 1.0) / 11.0;
  const double var = (6 * (3 - mean) * (3 - mean) + 5 * (1 - mean) * (1 - mean)) / 11.0;
  CHECK(c2.loss_cv == doctest::Approx(std::sqrt(var) / mean));

  // zero updates count as aligned
  const std::vector<ParamVector> zeros(4, ParamVector(2));
  CHECK(chattering_index(zeros, std::vector<double>(4, 1.0), 3).cosine == 0.0);

  CHECK_THROWS(chattering_index(same, flat, 11));
  CHECK_THROWS(chattering_index(same, flat, 0));
}

TEST_CASE("run summary carries chattering when the run is long enough") {
  auto cfg = synthetic_config(200);
  cfg.chatter_window = 100;
  const auto rec = run_single(cfg, 1);
  REQUIRE(rec.summary.chattering);
  CHECK(rec.summary.chattering->cosine >= 0.0);
  CHECK(rec.summary.chattering->cosine <= 2.0);
  CHECK(rec.recent_updates.size() == 101);

  cfg.steps = 50;
  CHECK_FALSE(run_single(cfg, 1).summary.chattering);
}

TEST_CASE("loss threshold records the first crossing") {
  auto cfg = synthetic_config(3000);
  cfg.optimizer.adam.lr = 0.01;
  cfg.loss_threshold = 1.5;
  const auto rec = run_single(cfg, 42);
  REQUIRE(rec.summary.steps_to_threshold);
  const auto t = *rec.summary.steps_to_threshold;
  for (const auto& row : rec.rows) {
    if (row.t < t) CHECK(row.loss > 1.5);
    if (row.t == t) CHECK(row.loss <= 1.5);
  }
}

TEST_CASE("a failing step marks the run failed and keeps the last good point") {
  Cliff f;
  auto cfg = synthetic_config(100);
  cfg.optimizer = OptimizerSpec::defaults_for("adamw");
  cfg.optimizer.adam.lr = 0.1;
  cfg.record_every = 1000;
  const auto rec = run_single(cfg, f, ParamVector{0.0}, 1);
  CHECK(rec.status == "failed");
  CHECK(rec.failure.find("step") != std::string::npos);
  REQUIRE_FALSE(rec.rows.empty());
  CHECK(rec.rows.back().status == "failed");
  CHECK(rec.final_point[0] > 0.5);
  CHECK(rec.final_point.all_finite());
  CHECK(rec.summary.steps_completed < 100);
  CHECK(csv_of(rec).find(",failed\n") != std::string::npos);
}

TEST_CASE("clarke_dist column is empty without an oracle") {
  ExperimentConfig cfg = synthetic_config(5);
  cfg.objective.id = "staircase";
  cfg.objective.dim = 2;
  const auto rec = run_single(cfg, 1);
  CHECK_FALSE(rec.summary.min_clarke_dist);
  const auto csv = csv_of(rec);
  CHECK(csv.find(",,ok\n") != std::string::npos);

  const auto syn = run_single(synthetic_config(5), 1);
  CHECK(csv_of(syn).find(",,ok\n") == std::string::npos);
}

TEST_CASE("objective and experiment validation") {
  ObjectiveSpec spec;
  spec.id = "unknown";
  CHECK_THROWS(spec.validate());
  spec.id = "quadratic";
  spec.coefficients = {1.0, 2.0};
  spec.hessian = {{1.0}};
  CHECK_THROWS(spec.validate());
  spec.hessian = {{1.0, 0.0}, {0.0, 2.0}};
  CHECK_NOTHROW(spec.validate());
  CHECK(make_objective(spec, 1)->dim() == 2);

  ObjectiveSpec with_init;
  with_init.init = std::vector<double>{0.25, -0.5};
  auto f = make_objective(with_init, 1);
  CHECK(initial_point(with_init, *f, 1) == ParamVector{0.25, -0.5});
  with_init.init = std::vector<double>{1.0};
  CHECK_THROWS(initial_point(with_init, *f, 1));

  ExperimentConfig cfg;
  cfg.steps = 0;
  CHECK_THROWS(cfg.validate());
  cfg.steps = 1;
  cfg.record_every = 0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("BatchSampler covers every sample once per epoch") {
  BatchSampler sampler(20, 5, 3);
  std::set<std::size_t> seen;
  for (int b = 0; b < 4; ++b) {
    const auto batch = sampler.next();
    REQUIRE(batch.size() == 5);
    seen.insert(batch.begin(), batch.end());
  }
  CHECK(seen.size() == 20);
  BatchSampler full(10, 10, 3);
  CHECK(full.next().empty());
  BatchSampler none(0, 4, 3);
  CHECK(none.next().empty());

  BatchSampler a(30, 7, 9), b(30, 7, 9);
  for (int i = 0; i < 20; ++i) {
    const auto x = a.next();
    const auto y = b.next();
    REQUIRE(std::vector<std::size_t>(x.begin(), x.end()) ==
            std::vector<std::size_t>(y.begin(), y.end()));
  }
}

TEST_CASE("stability: identical replacement gives zero divergence") {
  StabilityConfig cfg;
  cfg.base = mlp_config();
  cfg.seeds = {1, 2};
  cfg.identical_replacement = true;
  const auto table = stability_study(cfg);
  REQUIRE(table.rows.size() == 2);
  for (const auto& r : table.rows) {
    CHECK(r.adam_divergence == 0.0);
    CHECK(r.sadam_divergence == 0.0);
    CHECK(r.ratio == 1.0);
  }
}

TEST_CASE("stability: swapping roles gives the same divergences") {
  StabilityConfig cfg;
  cfg.base = mlp_config();
  cfg.seeds = {4};
  cfg.swap_index = 3;
  const auto forward = stability_study(cfg);
  cfg.swap_roles = true;
  const auto backward = stability_study(cfg);
  CHECK(forward.rows[0].adam_divergence > 0.0);
  CHECK(forward.rows[0].adam_divergence == backward.rows[0].adam_divergence);
  CHECK(forward.rows[0].sadam_divergence == backward.rows[0].sadam_divergence);
}

TEST_CASE("stability: a huge lambda nearly freezes S-Adam") {
  StabilityConfig cfg;
  cfg.base = mlp_config();
  cfg.base.optimizer.lgi.lambda = 50.0;
  cfg.base.objective.quantized = false;
  cfg.seeds = {5};
  const auto frozen = stability_study(cfg);
  cfg.base.optimizer.lgi.lambda = 0.0;
  const auto free = stability_study(cfg);
  CHECK(frozen.rows[0].sadam_divergence < free.rows[0].sadam_divergence);
  CHECK(free.rows[0].sadam_divergence == free.rows[0].adam_divergence);
}

TEST_CASE("stability input validation") {
  StabilityConfig cfg;
  cfg.base = mlp_config();
  cfg.seeds = {1};
  cfg.base.objective.n_samples = 1;
  CHECK_THROWS(stability_study(cfg));
  cfg.base = mlp_config();
  cfg.base.optimizer = OptimizerSpec::defaults_for("adamw");
  CHECK_THROWS(stability_study(cfg));
  cfg.base = synthetic_config(10);
  CHECK_THROWS(stability_study(cfg));
  cfg.base = mlp_config();
  cfg.seeds.clear();
  CHECK_THROWS(stability_study(cfg));
  cfg.seeds = {1};
  cfg.swap_index = 1000;
  CHECK_THROWS(stability_study(cfg));
}

TEST_CASE("stability CSV layout") {
  StabilityTable t;
  t.rows.push_back({1, 2.0, 1.0, 0.5});
  t.median_ratio = 0.5;
  std::ostringstream os;
  write_stability_csv(os, t);
  CHECK(os.str() == "seed,adam_divergence,sadam_divergence,ratio\n1,2,1,0.5\n");
}

TEST_CASE("LGI field on a constant objective is zero everywhere") {
  Constant flat(2, 3.0);
  GridSpec grid;
  grid.nx = 5;
  grid.ny = 4;
  const auto nodes = lgi_field_scan(flat, grid, LgiConfig{}, 1);
  REQUIRE(nodes.size() == 20);
  for (const auto& n : nodes) {
    CHECK(n.ok);
    CHECK(n.rho == 0.0);
    CHECK(n.brake == 1.0);
  }
  CHECK(nodes[0].x == -1.0);
  CHECK(nodes[4].x == 1.0);
  CHECK(nodes[5].y == doctest::Approx(-1.0 / 3.0));
  CHECK(nodes.back().y == 1.0);
}

TEST_CASE("LGI field marks probe failures with NaN") {
  Disc f;
  GridSpec grid;
  grid.x_min = grid.y_min = -1.5;
  grid.x_max = grid.y_max = 1.5;
  grid.nx = grid.ny = 7;
  const auto nodes = lgi_field_scan(f, grid, LgiConfig{}, 2);
  bool any_failed = false, any_ok = false;
  for (const auto& n : nodes) {
    if (!n.ok) {
      any_failed = true;
      CHECK(std::isnan(n.rho));
      CHECK(std::isnan(n.brake));
    } else {
      any_ok = true;
      CHECK(std::isfinite(n.rho));
    }
  }
  CHECK(any_failed);
  CHECK(any_ok);
  std::ostringstream os;
  write_field_csv(os, nodes);
  CHECK(os.str().rfind("x,y,rho,brake,status\n", 0) == 0);
  CHECK(os.str().find("probe_failed") != std::string::npos);

  CHECK_THROWS_AS(lgi_field_scan(Constant(3, 0.0), grid, LgiConfig{}, 1), DimensionError);
  grid.nx = 0;
  CHECK_THROWS(lgi_field_scan(f, grid, LgiConfig{}, 1));
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sadam/lgi.hpp"
#include "sadam/mlp.hpp"
#include "sadam/objectives.hpp"
#include "sadam/optimizers.hpp"

namespace sadam {

/// Which benchmark objective to build, with the parameters of every family.
/// Only the fields of the selected family are read.
struct ObjectiveSpec {
  // synthetic | l1_quadratic | linear | quadratic | constant | staircase | mlp
  std::string id = "synthetic";

  // l1_quadratic
  std::vector<double> anchor{0.0};
  double l1_weight = 1.0;
  std::vector<double> quad_diag{1.0};
  // linear, quadratic (linear term)
  std::vector<double> coefficients{1.0};
  // quadratic: symmetric Hessian rows
  std::vector<std::vector<double>> hessian{{1.0}};
  // constant
  double constant_value = 0.0;
  // constant, staircase
  std::size_t dim = 1;
  // staircase
  QuantizerConfig quantizer;
  double target = 0.3;
  bool ste = true;
  // mlp
  std::vector<std::size_t> widths{2, 16, 16, 2};
  bool quantized = false;
  std::size_t n_samples = 256;
  double separation = 3.0;

  /// Explicit starting point; otherwise drawn from the init stream.
  std::optional<std::vector<double>> init;
  double init_scale = 2.0;

  void validate() const;
};

/// Builds the objective; data-driven objectives draw their dataset from `seed`.
std::unique_ptr<Objective> make_objective(const ObjectiveSpec& spec, std::uint64_t seed);

/// Starting point for a run: spec.init if set, He init for MLPs, otherwise
/// uniform in [-init_scale, init_scale]^d from the init stream.
ParamVector initial_point(const ObjectiveSpec& spec, const Objective& f, std::uint64_t seed);

struct ExperimentConfig {
  std::string name = "run";
  ObjectiveSpec objective;
  OptimizerSpec optimizer = OptimizerSpec::defaults_for("sadam");
  std::size_t steps = 1000;
  std::size_t batch_size = 128;  // ignored by closed-form objectives
  std::vector<std::uint64_t> seeds{42};
  std::size_t record_every = 1;
  std::size_t chatter_window = 100;
  std::optional<double> loss_threshold;

  void validate() const;
};

/// Reshuffled-epoch mini-batches over n samples, drawn from the data stream.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed);
  /// Next batch; empty (= full dataset) when there is no data or batch_size >= n.
  Batch next();

 private:
  void reshuffle();

  std::size_t n_;
  std::size_t batch_size_;
  SeededRng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

struct RunRow {
  std::size_t t;
  double loss;
  double rho;
  double brake;
  double eta_hat;
  double grad_norm;
  double update_norm;
  std::optional<double> clarke_dist;
  std::string status = "ok";
};

struct ChatteringIndex {
  double cosine;   // 1 - mean cos(update_t, update_{t+1}), in [0, 2]
  double loss_cv;  // coefficient of variation of the loss, >= 0
};

struct RunSummary {
  double best_loss = 0.0;
  double final_loss = 0.0;
  std::optional<double> min_clarke_dist;
  std::optional<ChatteringIndex> chattering;
  std::optional<std::size_t> steps_to_threshold;
  std::size_t steps_completed = 0;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::string optimizer;
  std::string objective;
  std::string status = "ok";  // ok | failed
  std::string failure;
  std::vector<RunRow> rows;
  RunSummary summary;
  ParamVector final_point{0.0};
  /// Last chatter_window + 1 update vectors and losses.
  std::deque<ParamVector> recent_updates;
  std::deque<double> recent_losses;
  double wall_seconds = 0.0;
};

/// One seeded run of cfg.optimizer on `f` from `w0`.
RunRecord run_single(const ExperimentConfig& cfg, const Objective& f, ParamVector w0,
                     std::uint64_t seed);
/// Builds objective and start point from the config, then runs.
RunRecord run_single(const ExperimentConfig& cfg, std::uint64_t seed);
/// One record per seed, in seed order.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg);

/// Chattering over the last W steps: W consecutive cosine pairs from the last
/// W + 1 updates, and the loss coefficient of variation over the matching
/// W + 1 losses. A zero update counts as cos = 1.
ChatteringIndex chattering_index(std::span<const ParamVector> updates,
                                 std::span<const double> losses, std::size_t window);
ChatteringIndex chattering_index(const RunRecord& record, std::size_t window);

/// Header: t,loss,rho,brake,eta_hat,grad_norm,update_norm,clarke_dist,status
void write_run_csv(std::ostream& os, const RunRecord& record, std::string_view config_hash = {});
extern const char* const kRunCsvHeader;

// ---- stability -------------------------------------------------------------------

struct StabilityConfig {
  ExperimentConfig base;  // objective must be data-driven; optimizer must be sadam
  std::size_t swap_index = 0;
  std::vector<std::uint64_t> seeds;
  /// Replace the swapped sample by a copy of itself (S' == S).
  bool identical_replacement = false;
  /// Train the "S" runs on S' and vice versa.
  bool swap_roles = false;
};

struct StabilityRow {
  std::uint64_t seed;
  double adam_divergence;
  double sadam_divergence;
  double ratio;  // sadam / adam; 1 when both are zero
};

struct StabilityTable {
  std::vector<StabilityRow> rows;
  double median_ratio = 0.0;
};

/// Trains S-Adam and its matched AdamW counterpart on S and on S' (one sample
/// replaced) with identical initialization, batch order and probe directions,
/// and reports ||w_T - w'_T|| for each.
StabilityTable stability_study(const StabilityConfig& cfg);

/// S with the sample at `index` replaced by a fresh draw of the same label.
SampleSet perturb_one_sample(const SampleSet& s, std::size_t index, const ObjectiveSpec& spec,
                             std::uint64_t seed);

void write_stability_csv(std::ostream& os, const StabilityTable& table,
                         std::string_view config_hash = {});

// ---- LGI field -------------------------------------------------------------------

struct GridSpec {
  double x_min = -1.0;
  double x_max = 1.0;
  std::size_t nx = 21;
  double y_min = -1.0;
  double y_max = 1.0;
  std::size_t ny = 21;

  void validate() const;
  double x(std::size_t i) const;
  double y(std::size_t j) const;
};

struct FieldNode {
  double x;
  double y;
  double rho;
  double brake;
  bool ok;
};

/// lgi_probe at every grid node (row-major in y, then x). Node i uses the probe
/// seed derive_seed(seed, i). Probe failures yield NaN entries with ok = false.
std::vector<FieldNode> lgi_field_scan(const Objective& f, const GridSpec& grid, const LgiConfig& cfg,
                                      std::uint64_t seed);

void write_field_csv(std::ostream& os, std::span<const FieldNode> nodes,
                     std::string_view config_hash = {});

}  // namespace sadam

#include "sadam/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "sadam/csv.hpp"

namespace sadam {

// ---- objective construction ---------------------------------------------------

void ObjectiveSpec::validate() const {
  if (id == "synthetic") return;
  if (id == "l1_quadratic") {
    if (anchor.empty() || anchor.size() != quad_diag.size()) {
      throw std::invalid_argument("l1_quadratic: anchor and quad_diag must be non-empty and equal length");
    }
    if (!(l1_weight >= 0.0)) throw std::invalid_argument("l1_quadratic: l1_weight must be >= 0");
    return;
  }
  if (id == "linear") {
    if (coefficients.empty()) throw std::invalid_argument("linear: coefficients must be non-empty");
    return;
  }
  if (id == "quadratic") {
    if (coefficients.empty() || hessian.size() != coefficients.size()) {
      throw std::invalid_argument("quadratic: hessian must be d x d with d = len(coefficients)");
    }
    for (const auto& row : hessian) {
      if (row.size() != coefficients.size()) {
        throw std::invalid_argument("quadratic: hessian must be square");
      }
    }
    return;
  }
  if (id == "constant") {
    if (dim == 0) throw std::invalid_argument("constant: dim must be >= 1");
    return;
  }
  if (id == "staircase") {
    quantizer.validate();
    if (dim == 0) throw std::invalid_argument("staircase: dim must be >= 1");
    return;
  }
  if (id == "mlp") {
    if (widths.size() < 2) throw std::invalid_argument("mlp: need at least two widths");
    if (widths.back() != 2) throw std::invalid_argument("mlp: blob data has two classes");
    if (n_samples < 2) throw std::invalid_argument("mlp: n_samples must be >= 2");
    if (quantized) quantizer.validate();
    return;
  }
  throw std::invalid_argument("unknown objective id '" + id + "'");
}

std::unique_ptr<Objective> make_objective(const ObjectiveSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (spec.id == "synthetic") return std::make_unique<SyntheticLandscape>();
  if (spec.id == "l1_quadratic") {
    return std::make_unique<L1Quadratic>(spec.anchor, spec.l1_weight, spec.quad_diag);
  }
  if (spec.id == "linear") return std::make_unique<Linear>(ParamVector(spec.coefficients));
  if (spec.id == "quadratic") {
    const std::size_t d = spec.coefficients.size();
    Matrix h(d, d);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) h(i, j) = spec.hessian[i][j];
    }
    return std::make_unique<Quadratic>(ParamVector(spec.coefficients), std::move(h));
  }
  if (spec.id == "constant") return std::make_unique<Constant>(spec.dim, spec.constant_value);
  if (spec.id == "staircase") {
    return std::make_unique<Staircase>(spec.quantizer, spec.target, spec.dim, spec.ste);
  }
  // mlp
  SeededRng data_rng(seed, Stream::kAux);
  SampleSet data = make_blobs(spec.n_samples, spec.widths.front(), spec.separation, data_rng);
  std::optional<QuantizerConfig> q;
  if (spec.quantized) q = spec.quantizer;
  return std::make_unique<MlpObjective>(TinyMlp(spec.widths, q), std::move(data));
}

ParamVector initial_point(const ObjectiveSpec& spec, const Objective& f, std::uint64_t seed) {
  if (spec.init) {
    ParamVector w(*spec.init);
    if (w.dim() != f.dim()) throw DimensionError("init point has the wrong dimension");
    return w;
  }
  SeededRng rng(seed, Stream::kInit);
  if (const auto* mlp = dynamic_cast<const MlpObjective*>(&f)) return mlp->mlp().init_params(rng);
  ParamVector w(f.dim());
  for (auto& v : w) v = rng.uniform(-spec.init_scale, spec.init_scale);
  return w;
}

void ExperimentConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("seeds must be non-empty");
  if (record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  objective.validate();
  optimizer.validate();
}

// ---- batching ---------------------------------------------------------------------

BatchSampler::BatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_size_(batch_size), rng_(seed, Stream::kData), order_(n) {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  pos_ = n_;  // forces a shuffle on first use
}

void BatchSampler::reshuffle() {
  for (std::size_t i = n_; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng_.uniform_index(i));
    std::swap(order_[i - 1], order_[j]);
  }
  pos_ = 0;
}

Batch BatchSampler::next() {
  if (n_ == 0 || batch_size_ == 0 || batch_size_ >= n_) return {};
  if (pos_ + batch_size_ > n_) reshuffle();
  Batch b(order_.data() + pos_, batch_size_);
  pos_ += batch_size_;
  return b;
}

// ---- runs ---------------------------------------------------------------------------

RunRecord run_single(const ExperimentConfig& cfg, const Objective& f, ParamVector w0,
                     std::uint64_t seed) {
  cfg.validate();
  check_same_dim(w0, ParamVector(f.dim()), "run_single");
  const auto start = std::chrono::steady_clock::now();

  RunRecord rec;
  rec.seed = seed;
  rec.optimizer = cfg.optimizer.id;
  rec.objective = f.id();

  auto opt = make_optimizer(cfg.optimizer, f.dim());
  BatchSampler sampler(f.sample_count(), cfg.batch_size, seed);
  SeededRng probe_rng(seed, Stream::kProbe);
  ParamVector w = std::move(w0);

  auto& s = rec.summary;
  s.best_loss = std::numeric_limits<double>::infinity();
  auto note_clarke = [&](const ParamVector& at) -> std::optional<double> {
    auto c = f.clarke_distance(at);
    if (c) s.min_clarke_dist = s.min_clarke_dist ? std::min(*s.min_clarke_dist, *c) : *c;
    return c;
  };

  std::optional<RunRow> last_row;
  bool last_row_recorded = false;
  const std::size_t keep = cfg.chatter_window > 0 ? cfg.chatter_window + 1 : 0;

  for (std::size_t t = 1; t <= cfg.steps; ++t) {
    const Batch batch = sampler.next();
    const ParamVector before = w;
    const auto clarke = note_clarke(w);
    StepRecord step;
    try {
      step = opt->step(f, w, batch, probe_rng);
      if (!std::isfinite(step.loss)) throw StepError("non-finite loss");
    } catch (const std::exception& e) {
      rec.status = "failed";
      rec.failure = "step " + std::to_string(t) + ": " + e.what();
      w = before;
      break;
    }

    s.best_loss = std::min(s.best_loss, step.loss);
    s.final_loss = step.loss;
    s.steps_completed = t;
    if (cfg.loss_threshold && !s.steps_to_threshold && step.loss <= *cfg.loss_threshold) {
      s.steps_to_threshold = t;
    }
    if (keep > 0) {
      rec.recent_updates.push_back(step.update);
      rec.recent_losses.push_back(step.loss);
      if (rec.recent_updates.size() > keep) {
        rec.recent_updates.pop_front();
        rec.recent_losses.pop_front();
      }
    }

    last_row = RunRow{t, step.loss, step.rho, step.brake, step.eta_hat, step.grad_norm,
                      step.update_norm, clarke, "ok"};
    last_row_recorded = (t % cfg.record_every == 0 || t == cfg.steps);
    if (last_row_recorded) rec.rows.push_back(*last_row);
  }

  if (rec.status == "failed" && last_row) {
    if (!last_row_recorded) rec.rows.push_back(*last_row);
    rec.rows.back().status = "failed";
  } else {
    note_clarke(w);
  }
  if (!std::isfinite(s.best_loss)) s.best_loss = 0.0;
  if (cfg.chatter_window > 0 && rec.recent_updates.size() == keep) {
    s.chattering = chattering_index(rec, cfg.chatter_window);
  }
  rec.final_point = std::move(w);
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

RunRecord run_single(const ExperimentConfig& cfg, std::uint64_t seed) {
  auto f = make_objective(cfg.objective, seed);
  ParamVector w0 = initial_point(cfg.objective, *f, seed);
  return run_single(cfg, *f, std::move(w0), seed);
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<RunRecord> out;
  out.reserve(cfg.seeds.size());
  for (auto seed : cfg.seeds) out.push_back(run_single(cfg, seed));
  return out;
}

// ---- chattering ---------------------------------------------------------------------

ChatteringIndex chattering_index(std::span<const ParamVector> updates,
                                 std::span<const double> losses, std::size_t window) {
  if (window == 0) throw std::invalid_argument("chattering_index: window must be >= 1");
  if (updates.size() < window + 1 || losses.size() < window + 1) {
    throw std::invalid_argument("chattering_index: window larger than the record");
  }
  const auto u = updates.subspan(updates.size() - window - 1);
  double cos_sum = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    const double na = norm2(u[i]);
    const double nb = norm2(u[i + 1]);
    double c = 1.0;
    if (na > 0.0 && nb > 0.0) c = std::clamp(dot(u[i], u[i + 1]) / (na * nb), -1.0, 1.0);
    cos_sum += c;
  }
  ChatteringIndex out;
  out.cosine = std::clamp(1.0 - cos_sum / static_cast<double>(window), 0.0, 2.0);

  const auto l = losses.subspan(losses.size() - window - 1);
  const double mean = std::accumulate(l.begin(), l.end(), 0.0) / static_cast<double>(l.size());
  double var = 0.0;
  for (double v : l) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(l.size()));
  if (mean == 0.0) {
    out.loss_cv = sd == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    out.loss_cv = sd / std::abs(mean);
  }
  return out;
}

ChatteringIndex chattering_index(const RunRecord& record, std::size_t window) {
  const std::vector<ParamVector> updates(record.recent_updates.begin(), record.recent_updates.end());
  const std::vector<double> losses(record.recent_losses.begin(), record.recent_losses.end());
  return chattering_index(updates, losses, window);
}

const char* const kRunCsvHeader = "t,loss,rho,brake,eta_hat,grad_norm,update_norm,clarke_dist,status";

void write_run_csv(std::ostream& os, const RunRecord& record, std::string_view config_hash) {
  if (!config_hash.empty()) os << hash_comment(config_hash) << '\n';
  os << kRunCsvHeader << '\n';
  for (const auto& r : record.rows) {
    os << r.t << ',' << format_double(r.loss) << ',' << format_double(r.rho) << ','
       << format_double(r.brake) << ',' << format_double(r.eta_hat) << ','
       << format_double(r.grad_norm) << ',' << format_double(r.update_norm) << ','
       << (r.clarke_dist ? format_double(*r.clarke_dist) : std::string()) << ',' << r.status
       << '\n';
  }
}

// ---- stability study -------------------------------------------------------------------

SampleSet perturb_one_sample(const SampleSet& s, std::size_t index, const ObjectiveSpec& spec,
                             std::uint64_t seed) {
  if (index >= s.size()) throw std::out_of_range("perturb_one_sample: index out of range");
  SampleSet out = s;
  SeededRng rng(derive_seed(seed, 0x5357'4150ULL + index), Stream::kData);
  out.inputs[index] = draw_blob_sample(s.feature_dim(), spec.separation, s.labels[index], rng);
  return out;
}

StabilityTable stability_study(const StabilityConfig& cfg) {
  cfg.base.validate();
  if (cfg.base.objective.id != "mlp") {
    throw std::invalid_argument("stability_study: objective must be data-driven (mlp)");
  }
  if (cfg.base.objective.n_samples < 2) throw std::invalid_argument("stability_study: n must be >= 2");
  if (cfg.base.optimizer.id != "sadam") {
    throw std::invalid_argument("stability_study: optimizer must be sadam");
  }
  if (cfg.seeds.empty()) throw std::invalid_argument("stability_study: seeds must be non-empty");

  ExperimentConfig sadam_cfg = cfg.base;
  ExperimentConfig adam_cfg = cfg.base;
  adam_cfg.optimizer.id = "adamw";  // same Adam hyperparameters, no brake
  sadam_cfg.chatter_window = adam_cfg.chatter_window = 0;
  sadam_cfg.record_every = adam_cfg.record_every = cfg.base.steps;

  StabilityTable table;
  std::vector<double> ratios;
  for (auto seed : cfg.seeds) {
    auto base_obj = make_objective(cfg.base.objective, seed);
    const auto& mlp_obj = dynamic_cast<const MlpObjective&>(*base_obj);
    SampleSet s = mlp_obj.data();
    SampleSet s_prime = cfg.identical_replacement
                            ? s
                            : perturb_one_sample(s, cfg.swap_index, cfg.base.objective, seed);
    if (cfg.swap_roles) std::swap(s, s_prime);
    const MlpObjective on_s(mlp_obj.mlp(), std::move(s));
    const MlpObjective on_s_prime(mlp_obj.mlp(), std::move(s_prime));
    const ParamVector w0 = initial_point(cfg.base.objective, on_s, seed);

    auto divergence = [&](const ExperimentConfig& c) {
      const RunRecord a = run_single(c, on_s, w0, seed);
      const RunRecord b = run_single(c, on_s_prime, w0, seed);
      return norm2(sub(a.final_point, b.final_point));
    };
    StabilityRow row;
    row.seed = seed;
    row.adam_divergence = divergence(adam_cfg);
    row.sadam_divergence = divergence(sadam_cfg);
    if (row.adam_divergence > 0.0) {
      row.ratio = row.sadam_divergence / row.adam_divergence;
    } else {
      row.ratio = row.sadam_divergence == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    }
    ratios.push_back(row.ratio);
    table.rows.push_back(row);
  }
  table.median_ratio = median(ratios);
  return table;
}

void write_stability_csv(std::ostream& os, const StabilityTable& table,
                         std::string_view config_hash) {
  if (!config_hash.empty()) os << hash_comment(config_hash) << '\n';
  os << "seed,adam_divergence,sadam_divergence,ratio\n";
  for (const auto& r : table.rows) {
    os << r.seed << ',' << format_double(r.adam_divergence) << ','
       << format_double(r.sadam_divergence) << ',' << format_double(r.ratio) << '\n';
  }
}

// ---- LGI field ---------------------------------------------------------------------------

void GridSpec::validate() const {
  if (nx < 1 || ny < 1) throw std::invalid_argument("grid: nx and ny must be >= 1");
  for (double v : {x_min, x_max, y_min, y_max}) {
    if (!std::isfinite(v)) throw std::invalid_argument("grid: bounds must be finite");
  }
  if (x_min > x_max || y_min > y_max) throw std::invalid_argument("grid: min must not exceed max");
}

double GridSpec::x(std::size_t i) const {
  if (nx == 1) return x_min;
  return x_min + (x_max - x_min) * static_cast<double>(i) / static_cast<double>(nx - 1);
}

double GridSpec::y(std::size_t j) const {
  if (ny == 1) return y_min;
  return y_min + (y_max - y_min) * static_cast<double>(j) / static_cast<double>(ny - 1);
}

std::vector<FieldNode> lgi_field_scan(const Objective& f, const GridSpec& grid, const LgiConfig& cfg,
                                      std::uint64_t seed) {
  if (f.dim() != 2) throw DimensionError("lgi_field_scan: objective must be two-dimensional");
  grid.validate();
  cfg.validate();
  std::vector<FieldNode> nodes;
  nodes.reserve(grid.nx * grid.ny);
  for (std::size_t j = 0; j < grid.ny; ++j) {
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const std::size_t index = j * grid.nx + i;
      FieldNode node{grid.x(i), grid.y(j), 0.0, 1.0, true};
      SeededRng rng(derive_seed(seed, index), Stream::kProbe);
      try {
        const auto est = lgi_probe(f, ParamVector{node.x, node.y}, {}, cfg, rng);
        node.rho = est.rho;
        node.brake = est.brake;
      } catch (const ProbeFailure&) {
        node.rho = node.brake = std::numeric_limits<double>::quiet_NaN();
        node.ok = false;
      }
      nodes.push_back(node);
    }
  }
  return nodes;
}

void write_field_csv(std::ostream& os, std::span<const FieldNode> nodes,
                     std::string_view config_hash) {
  if (!config_hash.empty()) os << hash_comment(config_hash) << '\n';
  os << "x,y,rho,brake,status\n";
  for (const auto& n : nodes) {
    os << format_double(n.x) << ',' << format_double(n.y) << ',' << format_double(n.rho) << ','
       << format_double(n.brake) << ',' << (n.ok ? "ok" : "probe_failed") << '\n';
  }
}

}  // namespace sadam

#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sadam/lgi.hpp"
#include "sadam/numerics.hpp"
#include "sadam/objectives.hpp"

namespace sadam {

/// Step-size schedule applied to a base learning rate eta0.
struct StepSchedule {
  enum class Kind { kConstant, kInverseSqrt, kRobbinsMonro };

  Kind kind = Kind::kConstant;
  double power = 0.6;  // robbins-monro exponent, in (0.5, 1]

  /// eta_t for t >= 1.
  double eta(double base, std::size_t t) const;
  void validate() const;

  static StepSchedule constant() { return {}; }
  static StepSchedule inverse_sqrt() { return {Kind::kInverseSqrt, 0.5}; }
  static StepSchedule robbins_monro(double p) { return {Kind::kRobbinsMonro, p}; }
};

std::string_view to_string(StepSchedule::Kind kind);
StepSchedule::Kind schedule_kind_from_string(std::string_view name);

/// Non-finite gradient or update inside an optimizer step.
class StepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-step metrics. `update` is w_{t+1} - w_t.
struct StepRecord {
  std::size_t t = 0;
  double loss = 0.0;
  double rho = 0.0;
  double brake = 1.0;
  double eta_hat = 0.0;
  double grad_norm = 0.0;
  double update_norm = 0.0;
  ParamVector update{0.0};
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual std::string id() const = 0;
  /// Advances w in place. `probe_rng` is only consumed by probing optimizers.
  virtual StepRecord step(const Objective& f, ParamVector& w, Batch batch, SeededRng& probe_rng) = 0;
  virtual std::size_t steps_taken() const = 0;
};

struct AdamHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;  // denominator offset in sqrt(v) + eps; distinct from the LGI epsilon
  double weight_decay = 0.01;
  bool bias_correction = true;
  StepSchedule schedule;

  void validate() const;
};

struct AdamMoments {
  ParamVector m;
  ParamVector v;
  std::size_t t = 0;

  explicit AdamMoments(std::size_t dim) : m(dim), v(dim) {}
};

/// Shared Adam core: advances the moments with g, then
///   w <- w - step_size * m^ / (sqrt(v^) + eps) - step_size * weight_decay * w
/// where m^, v^ are bias-corrected when enabled. Returns the applied update.
ParamVector apply_adam_update(AdamMoments& moments, const ParamVector& g, ParamVector& w,
                              double step_size, const AdamHyper& hyper);

/// Adam with decoupled weight decay.
class AdamW final : public Optimizer {
 public:
  AdamW(AdamHyper hyper, std::size_t dim);

  std::string id() const override { return "adamw"; }
  StepRecord step(const Objective& f, ParamVector& w, Batch batch, SeededRng& probe_rng) override;
  std::size_t steps_taken() const override { return moments_.t; }
  const AdamMoments& moments() const { return moments_; }

 private:
  AdamHyper hyper_;
  AdamMoments moments_;
};

/// Adam whose step size is multiplied by the geometric brake exp(-lambda rho_t),
/// with rho_t re-estimated by probing before every step. Bias correction is off
/// by default; weight decay is scaled by the braked step.
class SAdam final : public Optimizer {
 public:
  SAdam(AdamHyper hyper, LgiConfig lgi, std::size_t dim);

  static AdamHyper default_hyper();

  std::string id() const override { return "sadam"; }
  StepRecord step(const Objective& f, ParamVector& w, Batch batch, SeededRng& probe_rng) override;
  std::size_t steps_taken() const override { return moments_.t; }
  const AdamMoments& moments() const { return moments_; }
  const LgiConfig& lgi() const { return lgi_; }

 private:
  AdamHyper hyper_;
  LgiConfig lgi_;
  AdamMoments moments_;
};

/// sign(u) * max(|u| - tau, 0)
double soft_threshold(double u, double tau);
ParamVector soft_threshold(const ParamVector& u, double tau);

struct ProxSgdHyper {
  double lr = 0.01;
  double momentum = 0.9;
  double l1_weight = 1e-4;
  StepSchedule schedule;

  void validate() const;
};

/// Heavy-ball momentum on the objective's gradient, then the L1 prox.
class ProxSgd final : public Optimizer {
 public:
  ProxSgd(ProxSgdHyper hyper, std::size_t dim);

  std::string id() const override { return "proxsgd"; }
  StepRecord step(const Objective& f, ParamVector& w, Batch batch, SeededRng& probe_rng) override;
  std::size_t steps_taken() const override { return t_; }
  const ParamVector& velocity() const { return velocity_; }

 private:
  ProxSgdHyper hyper_;
  ParamVector velocity_;
  std::size_t t_ = 0;
};

struct SubgradHyper {
  double lr = 0.01;
  StepSchedule schedule;

  void validate() const;
};

/// w <- w - eta_t g with g the objective's Clarke selection.
class SubgradientDescent final : public Optimizer {
 public:
  explicit SubgradientDescent(SubgradHyper hyper);

  std::string id() const override { return "subgrad"; }
  StepRecord step(const Objective& f, ParamVector& w, Batch batch, SeededRng& probe_rng) override;
  std::size_t steps_taken() const override { return t_; }

 private:
  SubgradHyper hyper_;
  std::size_t t_ = 0;
};

/// Everything needed to build any of the optimizers above.
struct OptimizerSpec {
  std::string id = "sadam";
  AdamHyper adam;
  LgiConfig lgi;
  ProxSgdHyper prox;
  SubgradHyper subgrad;

  /// Published defaults for the given optimizer id.
  static OptimizerSpec defaults_for(std::string_view id);
  /// Learning rate and schedule of whichever optimizer `id` selects.
  double lr() const;
  const StepSchedule& schedule() const;
  void validate() const;
};

std::unique_ptr<Optimizer> make_optimizer(const OptimizerSpec& spec, std::size_t dim);

}  // namespace sadam

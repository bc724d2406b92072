#include "sadam/optimizers.hpp"

#include <cmath>

namespace sadam {

namespace {

void require_finite(const ParamVector& g, const char* what) {
  if (!g.all_finite()) throw StepError(std::string(what) + ": non-finite gradient");
}

}  // namespace

// ---- schedules ----------------------------------------------------------------

double StepSchedule::eta(double base, std::size_t t) const {
  if (t == 0) throw std::invalid_argument("StepSchedule: t starts at 1");
  const auto tt = static_cast<double>(t);
  switch (kind) {
    case Kind::kConstant:
      return base;
    case Kind::kInverseSqrt:
      return base / std::sqrt(tt);
    case Kind::kRobbinsMonro:
      return base / std::pow(tt, power);
  }
  return base;
}

void StepSchedule::validate() const {
  if (kind == Kind::kRobbinsMonro && !(power > 0.5 && power <= 1.0)) {
    throw std::invalid_argument("robbins-monro power must lie in (0.5, 1]");
  }
}

std::string_view to_string(StepSchedule::Kind kind) {
  switch (kind) {
    case StepSchedule::Kind::kConstant:
      return "constant";
    case StepSchedule::Kind::kInverseSqrt:
      return "inverse_sqrt";
    case StepSchedule::Kind::kRobbinsMonro:
      return "robbins_monro";
  }
  return "constant";
}

StepSchedule::Kind schedule_kind_from_string(std::string_view name) {
  if (name == "constant") return StepSchedule::Kind::kConstant;
  if (name == "inverse_sqrt") return StepSchedule::Kind::kInverseSqrt;
  if (name == "robbins_monro") return StepSchedule::Kind::kRobbinsMonro;
  throw std::invalid_argument("unknown schedule kind '" + std::string(name) + "'");
}

// ---- Adam core ------------------------------------------------------------------

void AdamHyper::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("adam: lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("adam: beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("adam: beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("adam: eps must be > 0");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("adam: weight_decay must be >= 0");
  schedule.validate();
}

ParamVector apply_adam_update(AdamMoments& moments, const ParamVector& g, ParamVector& w,
                              double step_size, const AdamHyper& hyper) {
  check_same_dim(g, w, "adam update");
  check_same_dim(moments.m, w, "adam update");
  moments.t += 1;
  const auto t = static_cast<double>(moments.t);
  const double c1 = hyper.bias_correction ? 1.0 - std::pow(hyper.beta1, t) : 1.0;
  const double c2 = hyper.bias_correction ? 1.0 - std::pow(hyper.beta2, t) : 1.0;

  ParamVector update(w.dim());
  for (std::size_t i = 0; i < w.dim(); ++i) {
    moments.m[i] = hyper.beta1 * moments.m[i] + (1.0 - hyper.beta1) * g[i];
    moments.v[i] = hyper.beta2 * moments.v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
    const double m_hat = moments.m[i] / c1;
    const double v_hat = moments.v[i] / c2;
    const double delta =
        -step_size * m_hat / (std::sqrt(v_hat) + hyper.eps) - step_size * hyper.weight_decay * w[i];
    const double next = w[i] + delta;
    update[i] = next - w[i];
    w[i] = next;
  }
  return update;
}

AdamW::AdamW(AdamHyper hyper, std::size_t dim) : hyper_(hyper), moments_(dim) { hyper_.validate(); }

StepRecord AdamW::step(const Objective& f, ParamVector& w, Batch batch, SeededRng&) {
  StepRecord rec;
  rec.loss = f.value(w, batch);
  const ParamVector g = f.gradient(w, batch);
  require_finite(g, "adamw");
  const double eta = hyper_.schedule.eta(hyper_.lr, moments_.t + 1);
  rec.update = apply_adam_update(moments_, g, w, eta, hyper_);
  if (!w.all_finite()) throw StepError("adamw: non-finite iterate");
  rec.t = moments_.t;
  rec.eta_hat = eta;
  rec.grad_norm = norm2(g);
  rec.update_norm = norm2(rec.update);
  return rec;
}

// ---- S-Adam -----------------------------------------------------------------------

SAdam::SAdam(AdamHyper hyper, LgiConfig lgi, std::size_t dim)
    : hyper_(hyper), lgi_(lgi), moments_(dim) {
  hyper_.validate();
  lgi_.validate();
}

AdamHyper SAdam::default_hyper() {
  AdamHyper h;
  h.bias_correction = false;
  return h;
}

StepRecord SAdam::step(const Objective& f, ParamVector& w, Batch batch, SeededRng& probe_rng) {
  // geometric probing on the same batch as the gradient
  const LgiEstimate est = lgi_probe(f, w, batch, lgi_, probe_rng);
  const ParamVector g = f.gradient(w, batch);
  require_finite(g, "sadam");

  const double eta = hyper_.schedule.eta(hyper_.lr, moments_.t + 1);
  const double eta_hat = eta * est.brake;

  StepRecord rec;
  rec.update = apply_adam_update(moments_, g, w, eta_hat, hyper_);
  if (!w.all_finite()) throw StepError("sadam: non-finite iterate");
  rec.t = moments_.t;
  rec.loss = est.base_value;
  rec.rho = est.rho;
  rec.brake = est.brake;
  rec.eta_hat = eta_hat;
  rec.grad_norm = norm2(g);
  rec.update_norm = norm2(rec.update);
  return rec;
}

// ---- Prox-SGD -------------------------------------------------------------------

double soft_threshold(double u, double tau) {
  const double mag = std::abs(u) - tau;
  if (mag <= 0.0) return 0.0;
  return u > 0.0 ? mag : -mag;
}

ParamVector soft_threshold(const ParamVector& u, double tau) {
  ParamVector out = u;
  for (auto& v : out) v = soft_threshold(v, tau);
  return out;
}

void ProxSgdHyper::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("proxsgd: lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("proxsgd: momentum must lie in [0, 1)");
  }
  if (!(l1_weight >= 0.0)) throw std::invalid_argument("proxsgd: l1_weight must be >= 0");
  schedule.validate();
}

ProxSgd::ProxSgd(ProxSgdHyper hyper, std::size_t dim) : hyper_(hyper), velocity_(dim) {
  hyper_.validate();
}

StepRecord ProxSgd::step(const Objective& f, ParamVector& w, Batch batch, SeededRng&) {
  check_same_dim(w, velocity_, "proxsgd");
  StepRecord rec;
  rec.loss = f.value(w, batch);
  const ParamVector g = f.gradient(w, batch);
  require_finite(g, "proxsgd");
  ++t_;
  const double eta = hyper_.schedule.eta(hyper_.lr, t_);
  const ParamVector before = w;
  for (std::size_t i = 0; i < w.dim(); ++i) {
    velocity_[i] = hyper_.momentum * velocity_[i] + g[i];
    w[i] = soft_threshold(w[i] - eta * velocity_[i], eta * hyper_.l1_weight);
  }
  if (!w.all_finite()) throw StepError("proxsgd: non-finite iterate");
  rec.t = t_;
  rec.eta_hat = eta;
  rec.update = sub(w, before);
  rec.grad_norm = norm2(g);
  rec.update_norm = norm2(rec.update);
  return rec;
}

// ---- subgradient descent ----------------------------------------------------------

void SubgradHyper::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("subgrad: lr must be > 0");
  schedule.validate();
}

SubgradientDescent::SubgradientDescent(SubgradHyper hyper) : hyper_(hyper) { hyper_.validate(); }

StepRecord SubgradientDescent::step(const Objective& f, ParamVector& w, Batch batch, SeededRng&) {
  StepRecord rec;
  rec.loss = f.value(w, batch);
  const ParamVector g = f.gradient(w, batch);
  require_finite(g, "subgrad");
  ++t_;
  const double eta = hyper_.schedule.eta(hyper_.lr, t_);
  const ParamVector before = w;
  for (std::size_t i = 0; i < w.dim(); ++i) w[i] -= eta * g[i];
  if (!w.all_finite()) throw StepError("subgrad: non-finite iterate");
  rec.t = t_;
  rec.eta_hat = eta;
  rec.update = sub(w, before);
  rec.grad_norm = norm2(g);
  rec.update_norm = norm2(rec.update);
  return rec;
}

// ---- factory ------------------------------------------------------------------------

OptimizerSpec OptimizerSpec::defaults_for(std::string_view id) {
  OptimizerSpec spec;
  spec.id = std::string(id);
  if (id == "sadam") {
    spec.adam = SAdam::default_hyper();
  } else if (id == "adamw") {
    spec.adam = AdamHyper{};
  } else if (id == "proxsgd" || id == "subgrad") {
    // Adam block unused
  } else {
    throw std::invalid_argument("unknown optimizer id '" + std::string(id) + "'");
  }
  return spec;
}

double OptimizerSpec::lr() const {
  if (id == "proxsgd") return prox.lr;
  if (id == "subgrad") return subgrad.lr;
  return adam.lr;
}

const StepSchedule& OptimizerSpec::schedule() const {
  if (id == "proxsgd") return prox.schedule;
  if (id == "subgrad") return subgrad.schedule;
  return adam.schedule;
}

void OptimizerSpec::validate() const {
  if (id == "sadam") {
    adam.validate();
    lgi.validate();
  } else if (id == "adamw") {
    adam.validate();
  } else if (id == "proxsgd") {
    prox.validate();
  } else if (id == "subgrad") {
    subgrad.validate();
  } else {
    throw std::invalid_argument("unknown optimizer id '" + id + "'");
  }
}

std::unique_ptr<Optimizer> make_optimizer(const OptimizerSpec& spec, std::size_t dim) {
  spec.validate();
  if (spec.id == "sadam") return std::make_unique<SAdam>(spec.adam, spec.lgi, dim);
  if (spec.id == "adamw") return std::make_unique<AdamW>(spec.adam, dim);
  if (spec.id == "proxsgd") return std::make_unique<ProxSgd>(spec.prox, dim);
  return std::make_unique<SubgradientDescent>(spec.subgrad);
}

}  // namespace sadam

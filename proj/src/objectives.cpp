#include "sadam/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sadam {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double euclid(std::span<const double> parts) {
  double s = 0.0;
  for (double p : parts) s += p * p;
  return std::sqrt(s);
}

}  // namespace

void Objective::check_dim(const ParamVector& x) const {
  if (x.dim() != dim()) {
    throw DimensionError(id() + ": expected dimension " + std::to_string(dim()) + ", got " +
                         std::to_string(x.dim()));
  }
}

double Interval::distance_to_zero() const {
  if (lo > 0.0) return lo;
  if (hi < 0.0) return -hi;
  return 0.0;
}

// ---- synthetic landscape --------------------------------------------------

double SyntheticLandscape::value(const ParamVector& x, Batch) const {
  check_dim(x);
  return std::abs(x[0] - 1.0) + std::abs(x[1] - 1.0) + 0.5 * (x[0] * x[0] + x[1] * x[1]);
}

ParamVector SyntheticLandscape::gradient(const ParamVector& x, Batch) const {
  check_dim(x);
  return ParamVector{x[0] + sign(x[0] - 1.0), x[1] + sign(x[1] - 1.0)};
}

std::optional<double> SyntheticLandscape::clarke_distance(const ParamVector& x) const {
  check_dim(x);
  double parts[2];
  for (std::size_t i = 0; i < 2; ++i) {
    const Interval sub = x[i] == 1.0 ? Interval{x[i] - 1.0, x[i] + 1.0}
                                     : Interval{x[i] + sign(x[i] - 1.0), x[i] + sign(x[i] - 1.0)};
    parts[i] = sub.distance_to_zero();
  }
  return euclid(parts);
}

// ---- l1 + diagonal quadratic ---------------------------------------------

L1Quadratic::L1Quadratic(std::vector<double> anchor, double l1_weight, std::vector<double> quad_diag)
    : anchor_(std::move(anchor)), l1_weight_(l1_weight), quad_diag_(std::move(quad_diag)) {
  if (anchor_.empty()) throw DimensionError("l1_quadratic: dimension must be >= 1");
  if (anchor_.size() != quad_diag_.size()) {
    throw DimensionError("l1_quadratic: anchor and quadratic weights differ in length");
  }
  if (!(l1_weight_ >= 0.0)) throw std::invalid_argument("l1_quadratic: L1 weight must be >= 0");
  for (double q : quad_diag_) {
    if (!(q >= 0.0)) throw std::invalid_argument("l1_quadratic: quadratic weights must be >= 0");
  }
}

double L1Quadratic::value(const ParamVector& x, Batch) const {
  check_dim(x);
  double l1 = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) {
    l1 += std::abs(x[i] - anchor_[i]);
    quad += quad_diag_[i] * x[i] * x[i];
  }
  return l1_weight_ * l1 + 0.5 * quad;
}

ParamVector L1Quadratic::gradient(const ParamVector& x, Batch) const {
  check_dim(x);
  ParamVector g(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    g[i] = quad_diag_[i] * x[i] + l1_weight_ * sign(x[i] - anchor_[i]);
  }
  return g;
}

std::vector<Interval> L1Quadratic::subdifferential(const ParamVector& x) const {
  check_dim(x);
  std::vector<Interval> out(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    const double smooth = quad_diag_[i] * x[i];
    if (x[i] == anchor_[i]) {
      out[i] = {smooth - l1_weight_, smooth + l1_weight_};
    } else {
      const double v = smooth + l1_weight_ * sign(x[i] - anchor_[i]);
      out[i] = {v, v};
    }
  }
  return out;
}

std::optional<double> L1Quadratic::clarke_distance(const ParamVector& x) const {
  std::vector<double> parts;
  parts.reserve(dim());
  for (const auto& iv : subdifferential(x)) parts.push_back(iv.distance_to_zero());
  return euclid(parts);
}

// ---- smooth references ------------------------------------------------------

Quadratic::Quadratic(ParamVector linear, Matrix hessian)
    : linear_(std::move(linear)), hessian_(std::move(hessian)) {
  if (hessian_.rows != linear_.dim() || hessian_.cols != linear_.dim()) {
    throw DimensionError("quadratic: Hessian shape does not match the linear term");
  }
  if (!hessian_.is_symmetric()) throw std::invalid_argument("quadratic: Hessian must be symmetric");
}

double Quadratic::value(const ParamVector& x, Batch) const {
  check_dim(x);
  return dot(linear_, x) + 0.5 * hessian_.quadratic_form(x);
}

ParamVector Quadratic::gradient(const ParamVector& x, Batch) const {
  check_dim(x);
  return add(linear_, hessian_.apply(x));
}

std::optional<double> Quadratic::clarke_distance(const ParamVector& x) const {
  return norm2(gradient(x));
}

double Linear::value(const ParamVector& x, Batch) const {
  check_dim(x);
  return dot(g_, x);
}

ParamVector Linear::gradient(const ParamVector& x, Batch) const {
  check_dim(x);
  return g_;
}

std::optional<double> Linear::clarke_distance(const ParamVector& x) const {
  check_dim(x);
  return norm2(g_);
}

Constant::Constant(std::size_t dim, double value) : dim_(dim), value_(value) {
  if (dim == 0) throw DimensionError("constant: dimension must be >= 1");
}

double Constant::value(const ParamVector& x, Batch) const {
  check_dim(x);
  return value_;
}

ParamVector Constant::gradient(const ParamVector& x, Batch) const {
  check_dim(x);
  return ParamVector(dim_);
}

std::optional<double> Constant::clarke_distance(const ParamVector& x) const {
  check_dim(x);
  return 0.0;
}

// ---- quantization -----------------------------------------------------------

void QuantizerConfig::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("quantizer: scale must be a positive finite number");
  }
  if (!(q_min < q_max)) throw std::invalid_argument("quantizer: q_min must be < q_max");
}

double quantize(double x, const QuantizerConfig& q) {
  // nearbyint under the default FE_TONEAREST mode rounds ties to even
  const double level = std::nearbyint(x * q.scale);
  return std::clamp(level, static_cast<double>(q.q_min), static_cast<double>(q.q_max)) + 0.0;
}

std::vector<double> quantize(std::span<const double> x, const QuantizerConfig& q) {
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [&](double v) { return quantize(v, q); });
  return out;
}

double dequantize(double level, const QuantizerConfig& q) { return level / q.scale; }

double fake_quantize(double x, const QuantizerConfig& q) { return dequantize(quantize(x, q), q); }

bool ste_passes(double x, const QuantizerConfig& q) {
  const double s = x * q.scale;
  return s >= q.q_min && s <= q.q_max;
}

std::vector<double> ste_gradient(std::span<const double> upstream, std::span<const double> x,
                                 const QuantizerConfig& q) {
  if (upstream.size() != x.size()) throw DimensionError("ste_gradient: shape mismatch");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = ste_passes(x[i], q) ? upstream[i] : 0.0;
  return out;
}

// ---- staircase ----------------------------------------------------------------

Staircase::Staircase(QuantizerConfig q, double target, std::size_t dim, bool ste)
    : q_(q), target_(target), dim_(dim), ste_(ste) {
  q_.validate();
  if (dim_ == 0) throw DimensionError("staircase: dimension must be >= 1");
}

double Staircase::value(const ParamVector& x, Batch) const {
  check_dim(x);
  double s = 0.0;
  for (double v : x) {
    const double r = fake_quantize(v, q_) - target_;
    s += r * r;
  }
  return s;
}

ParamVector Staircase::gradient(const ParamVector& x, Batch) const {
  check_dim(x);
  ParamVector g(dim_);
  if (!ste_) return g;
  for (std::size_t i = 0; i < dim_; ++i) {
    g[i] = ste_passes(x[i], q_) ? 2.0 * (fake_quantize(x[i], q_) - target_) : 0.0;
  }
  return g;
}

std::vector<double> Staircase::jump_points() const {
  std::vector<double> jumps;
  for (int n = q_.q_min; n < q_.q_max; ++n) jumps.push_back((n + 0.5) / q_.scale);
  return jumps;
}

double Staircase::distance_to_jump(double x) const {
  double best = std::numeric_limits<double>::infinity();
  for (double j : jump_points()) best = std::min(best, std::abs(x - j));
  return best;
}

}  // namespace sadam

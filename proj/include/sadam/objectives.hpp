#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sadam/numerics.hpp"

namespace sadam {

/// Indices into an objective's dataset. Empty means "the whole dataset" for
/// data-driven objectives and is ignored by closed-form ones.
using Batch = std::span<const std::size_t>;

/// A loss with value and a fixed Clarke-subgradient selection.
///
/// gradient() must return an element of the Clarke subdifferential wherever the
/// objective is locally Lipschitz; each implementation documents which element
/// it picks at kinks. clarke_distance() returns dist(0, ∂_C f(x)) when a closed
/// form exists.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual double value(const ParamVector& x, Batch batch = {}) const = 0;
  virtual ParamVector gradient(const ParamVector& x, Batch batch = {}) const = 0;

  virtual bool has_clarke_oracle() const { return false; }
  virtual std::optional<double> clarke_distance(const ParamVector&) const { return std::nullopt; }

  /// Number of samples behind the objective; 0 for closed-form functions.
  virtual std::size_t sample_count() const { return 0; }

 protected:
  void check_dim(const ParamVector& x) const;
};

/// Interval [lo, hi] on the real line; used for per-coordinate subdifferentials.
struct Interval {
  double lo;
  double hi;
  bool contains(double v) const { return lo <= v && v <= hi; }
  /// Distance from zero to the interval.
  double distance_to_zero() const;
};

/// f(x, y) = |x - 1| + |y - 1| + 0.5 (x^2 + y^2). Selection uses sign(0) = 0.
class SyntheticLandscape final : public Objective {
 public:
  std::string id() const override { return "synthetic"; }
  std::size_t dim() const override { return 2; }
  double value(const ParamVector& x, Batch batch = {}) const override;
  ParamVector gradient(const ParamVector& x, Batch batch = {}) const override;
  bool has_clarke_oracle() const override { return true; }
  std::optional<double> clarke_distance(const ParamVector& x) const override;
};

/// f(x) = c * sum |x_i - a_i| + 0.5 * sum q_i x_i^2, with c >= 0 and q_i >= 0.
class L1Quadratic final : public Objective {
 public:
  L1Quadratic(std::vector<double> anchor, double l1_weight, std::vector<double> quad_diag);

  std::string id() const override { return "l1_quadratic"; }
  std::size_t dim() const override { return anchor_.size(); }
  double value(const ParamVector& x, Batch batch = {}) const override;
  ParamVector gradient(const ParamVector& x, Batch batch = {}) const override;
  bool has_clarke_oracle() const override { return true; }
  std::optional<double> clarke_distance(const ParamVector& x) const override;

  /// Coordinate-wise Clarke subdifferential at x.
  std::vector<Interval> subdifferential(const ParamVector& x) const;

  const std::vector<double>& anchor() const { return anchor_; }
  double l1_weight() const { return l1_weight_; }
  const std::vector<double>& quad_diag() const { return quad_diag_; }

 private:
  std::vector<double> anchor_;
  double l1_weight_;
  std::vector<double> quad_diag_;
};

/// f(x) = b^T x + 0.5 x^T A x with symmetric A.
class Quadratic final : public Objective {
 public:
  Quadratic(ParamVector linear, Matrix hessian);

  std::string id() const override { return "quadratic"; }
  std::size_t dim() const override { return linear_.dim(); }
  double value(const ParamVector& x, Batch batch = {}) const override;
  ParamVector gradient(const ParamVector& x, Batch batch = {}) const override;
  bool has_clarke_oracle() const override { return true; }
  std::optional<double> clarke_distance(const ParamVector& x) const override;

  const Matrix& hessian() const { return hessian_; }

 private:
  ParamVector linear_;
  Matrix hessian_;
};

/// f(x) = g^T x
class Linear final : public Objective {
 public:
  explicit Linear(ParamVector g) : g_(std::move(g)) {}

  std::string id() const override { return "linear"; }
  std::size_t dim() const override { return g_.dim(); }
  double value(const ParamVector& x, Batch batch = {}) const override;
  ParamVector gradient(const ParamVector& x, Batch batch = {}) const override;
  bool has_clarke_oracle() const override { return true; }
  std::optional<double> clarke_distance(const ParamVector& x) const override;

 private:
  ParamVector g_;
};

class Constant final : public Objective {
 public:
  Constant(std::size_t dim, double value);

  std::string id() const override { return "constant"; }
  std::size_t dim() const override { return dim_; }
  double value(const ParamVector& x, Batch batch = {}) const override;
  ParamVector gradient(const ParamVector& x, Batch batch = {}) const override;
  bool has_clarke_oracle() const override { return true; }
  std::optional<double> clarke_distance(const ParamVector& x) const override;

 private:
  std::size_t dim_;
  double value_;
};

// ---- quantization ---------------------------------------------------------

struct QuantizerConfig {
  double scale = 4.0;
  int q_min = -8;
  int q_max = 7;

  /// Throws std::invalid_argument unless scale > 0 and q_min < q_max.
  void validate() const;
};

/// clamp(round_half_even(x * scale), q_min, q_max). Returns integral values.
double quantize(double x, const QuantizerConfig& q);
std::vector<double> quantize(std::span<const double> x, const QuantizerConfig& q);
double dequantize(double level, const QuantizerConfig& q);
/// dequantize(quantize(x))
double fake_quantize(double x, const QuantizerConfig& q);

/// Straight-through gradient with clipping: upstream where x*scale lies inside
/// [q_min, q_max], zero where the clamp saturates.
std::vector<double> ste_gradient(std::span<const double> upstream, std::span<const double> x,
                                 const QuantizerConfig& q);
bool ste_passes(double x, const QuantizerConfig& q);

/// f(x) = sum_i (fake_quantize(x_i) - target)^2. Piecewise constant with jumps
/// at rounding boundaries. f is discontinuous there, so no Clarke oracle.
///
/// gradient() returns the straight-through surrogate 2 (fq(x_i) - target) * mask
/// by default; with `ste = false` it returns the almost-everywhere gradient 0.
class Staircase final : public Objective {
 public:
  Staircase(QuantizerConfig q, double target, std::size_t dim = 1, bool ste = true);

  std::string id() const override { return "staircase"; }
  std::size_t dim() const override { return dim_; }
  double value(const ParamVector& x, Batch batch = {}) const override;
  ParamVector gradient(const ParamVector& x, Batch batch = {}) const override;

  const QuantizerConfig& quantizer() const { return q_; }
  double target() const { return target_; }
  /// Rounding boundaries (x values where the quantized level changes).
  std::vector<double> jump_points() const;
  /// Distance from a scalar to the nearest rounding boundary.
  double distance_to_jump(double x) const;

 private:
  QuantizerConfig q_;
  double target_;
  std::size_t dim_;
  bool ste_;
};

}  // namespace sadam

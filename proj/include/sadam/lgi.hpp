#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "sadam/numerics.hpp"
#include "sadam/objectives.hpp"

namespace sadam {

/// Probe hyperparameters. Defaults follow the published S-Adam settings; the
/// score cap (10.0 in the published table) is off unless set explicitly, since
/// the 1/k-normalized score is already below 1.
struct LgiConfig {
  std::size_t k = 8;
  double delta = 0.01;
  double epsilon = 1e-6;
  double lambda = 2.0;
  std::optional<double> rho_cap;

  void validate() const;
};

struct LgiEstimate {
  double rho = 0.0;
  std::vector<double> probes;  // D_i
  double mean = 0.0;           // mean of D_i
  double variance = 0.0;       // 1/k normalization
  double mean_sq = 0.0;        // (1/k) sum D_i^2
  double brake = 1.0;          // exp(-lambda * rho)
  double base_value = 0.0;     // f(x) on the probing batch
};

/// Raised when f is non-finite at the base point or at a probe point.
class ProbeFailure : public std::runtime_error {
 public:
  ProbeFailure(const std::string& what, ParamVector direction)
      : std::runtime_error(what), direction_(std::move(direction)) {}
  /// Offending unit direction; the zero vector when the base point failed.
  const ParamVector& direction() const { return direction_; }

 private:
  ParamVector direction_;
};

/// rho = Var(D) / (Mean(D^2) + epsilon) for D_i = (f(x + delta u_i) - f(x)) / delta,
/// u_i uniform on the sphere. All k + 1 evaluations share `batch`.
LgiEstimate lgi_probe(const Objective& f, const ParamVector& x, Batch batch, const LgiConfig& cfg,
                      SeededRng& rng);

/// The score statistic for a given set of directional quotients.
LgiEstimate lgi_from_probes(std::vector<double> probes, const LgiConfig& cfg);

/// exp(-lambda * rho), kept strictly above exp(-lambda) when rho < 1 and lambda > 0.
double brake(double rho, double lambda);

/// |exp(-s) - 1/(1 + s)|: gap between exponential and proximal (fractional) damping.
double proximal_damping_gap(double s);

struct QuadraticProbeMoments {
  double mean;      // E[Y]
  double mean_sq;   // E[Y^2]
  double variance;  // Var(Y)
};

/// Exact sphere moments of Y(u) = g^T u + (delta/2) u^T H u, i.e. the
/// difference quotient of a quadratic with gradient g and Hessian H.
QuadraticProbeMoments quadratic_probe_moments(const ParamVector& g, const Matrix& H, double delta);

/// Population score Var(Y) / (E[Y^2] + epsilon) from the exact moments.
double population_lgi_quadratic(const ParamVector& g, const Matrix& H, double delta, double epsilon);

class UndefinedCurvature : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// delta * ||H||_F / ||g||; throws UndefinedCurvature when g = 0.
double relative_curvature(const ParamVector& g, const Matrix& H, double delta);

enum class CurvatureForm {
  kTraceFree,       // exact for trace-free H: curvature term kappa^2 / (2 (d + 2))
  kLargeDimension,  // d + 2 replaced by d
};

/// Score written through relative curvature:
///   (1 + c) / (1 + c + epsilon d / ||g||^2),  c = kappa^2 / (2(d+2)) or kappa^2 / (2d).
double lgi_from_curvature(double kappa, std::size_t d, double grad_norm_sq, double epsilon,
                          CurvatureForm form = CurvatureForm::kTraceFree);

struct ConcentrationRow {
  std::size_t k;
  double median_err;
  double q95_err;
  std::size_t trials;
};

/// For each k in the grid, runs `trials` independent probes at x and records
/// the median and 0.95-quantile of |rho_hat_k - reference_rho|.
std::vector<ConcentrationRow> concentration_study(const Objective& f, const ParamVector& x,
                                                  const LgiConfig& base,
                                                  std::span<const std::size_t> k_grid,
                                                  std::size_t trials, double reference_rho,
                                                  SeededRng& rng);

/// Slope of log(q95_err) against log(k).
double concentration_slope(std::span<const ConcentrationRow> rows);

/// Header: k,median_err,q95_err,trials (preceded by the hash comment when given).
void write_concentration_csv(std::ostream& os, std::span<const ConcentrationRow> rows,
                             std::string_view config_hash = {});

}  // namespace sadam

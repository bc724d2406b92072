#include "sadam/lgi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sadam/csv.hpp"

namespace sadam {

void LgiConfig::validate() const {
  if (k < 1) throw std::invalid_argument("lgi: k must be >= 1");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("lgi: delta must be > 0");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("lgi: epsilon must be > 0");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lgi: lambda must be >= 0");
  }
  if (rho_cap && !(*rho_cap >= 0.0)) throw std::invalid_argument("lgi: rho_cap must be >= 0");
}

double brake(double rho, double lambda) {
  const double b = std::exp(-lambda * rho);
  // for rho within an ulp of 1, exp can round onto exp(-lambda) itself
  if (lambda > 0.0 && rho < 1.0) return std::max(b, std::nextafter(std::exp(-lambda), 2.0));
  return b;
}

double proximal_damping_gap(double s) { return std::abs(std::exp(-s) - 1.0 / (1.0 + s)); }

LgiEstimate lgi_from_probes(std::vector<double> probes, const LgiConfig& cfg) {
  LgiEstimate est;
  const auto k = static_cast<double>(probes.size());
  if (probes.empty()) throw std::invalid_argument("lgi: no probes");

  double sum = 0.0;
  double sum_sq = 0.0;
  for (double d : probes) {
    sum += d;
    sum_sq += d * d;
  }
  est.mean = sum / k;
  est.mean_sq = sum_sq / k;
  double centered = 0.0;
  for (double d : probes) centered += (d - est.mean) * (d - est.mean);
  // Var <= Mean(D^2) holds exactly; the two-pass sum can overshoot by rounding
  est.variance = std::min(centered / k, est.mean_sq);

  double rho = est.variance / (est.mean_sq + cfg.epsilon);
  // only reachable when epsilon is below the rounding unit of mean_sq
  rho = std::min(rho, std::nextafter(1.0, 0.0));
  if (cfg.rho_cap) rho = std::min(rho, *cfg.rho_cap);
  est.rho = rho;
  est.brake = brake(rho, cfg.lambda);
  est.probes = std::move(probes);
  return est;
}

LgiEstimate lgi_probe(const Objective& f, const ParamVector& x, Batch batch, const LgiConfig& cfg,
                      SeededRng& rng) {
  cfg.validate();
  const std::size_t d = x.dim();
  const double base = f.value(x, batch);
  if (!std::isfinite(base)) {
    throw ProbeFailure("lgi_probe: objective is not finite at the base point", ParamVector(d));
  }

  std::vector<double> probes(cfg.k);
  ParamVector shifted(d);
  for (std::size_t i = 0; i < cfg.k; ++i) {
    const ParamVector u = sample_unit_sphere(rng, d);
    for (std::size_t j = 0; j < d; ++j) shifted[j] = x[j] + cfg.delta * u[j];
    const double value = f.value(shifted, batch);
    if (!std::isfinite(value)) {
      throw ProbeFailure("lgi_probe: objective is not finite at probe " + std::to_string(i), u);
    }
    probes[i] = (value - base) / cfg.delta;
  }

  LgiEstimate est = lgi_from_probes(std::move(probes), cfg);
  est.base_value = base;
  return est;
}

QuadraticProbeMoments quadratic_probe_moments(const ParamVector& g, const Matrix& H, double delta) {
  const std::size_t d = g.dim();
  if (H.rows != d || H.cols != d) throw DimensionError("quadratic moments: H must be d x d");
  if (!H.is_symmetric()) throw std::invalid_argument("quadratic moments: H must be symmetric");

  const auto dd = static_cast<double>(d);
  const double g2 = dot(g, g);
  const double tr = H.trace();
  const double fro2 = H.frobenius() * H.frobenius();

  QuadraticProbeMoments m;
  m.mean = delta * tr / (2.0 * dd);
  m.mean_sq = g2 / dd + delta * delta * (tr * tr + 2.0 * fro2) / (4.0 * dd * (dd + 2.0));
  // written without subtracting mean^2 so that H = cI gives exactly zero
  m.variance = g2 / dd + delta * delta * (fro2 - tr * tr / dd) / (2.0 * dd * (dd + 2.0));
  m.variance = std::clamp(m.variance, 0.0, m.mean_sq);
  return m;
}

double population_lgi_quadratic(const ParamVector& g, const Matrix& H, double delta, double epsilon) {
  const auto m = quadratic_probe_moments(g, H, delta);
  return m.variance / (m.mean_sq + epsilon);
}

double relative_curvature(const ParamVector& g, const Matrix& H, double delta) {
  const double gn = norm2(g);
  if (gn == 0.0) throw UndefinedCurvature("relative_curvature: gradient is zero");
  return delta * H.frobenius() / gn;
}

double lgi_from_curvature(double kappa, std::size_t d, double grad_norm_sq, double epsilon,
                          CurvatureForm form) {
  if (d == 0) throw DimensionError("lgi_from_curvature: d must be >= 1");
  if (!(grad_norm_sq > 0.0)) throw UndefinedCurvature("lgi_from_curvature: gradient is zero");
  const auto dd = static_cast<double>(d);
  const double denom = form == CurvatureForm::kTraceFree ? 2.0 * (dd + 2.0) : 2.0 * dd;
  const double c = kappa * kappa / denom;
  return (1.0 + c) / (1.0 + c + epsilon * dd / grad_norm_sq);
}

std::vector<ConcentrationRow> concentration_study(const Objective& f, const ParamVector& x,
                                                  const LgiConfig& base,
                                                  std::span<const std::size_t> k_grid,
                                                  std::size_t trials, double reference_rho,
                                                  SeededRng& rng) {
  if (k_grid.empty()) throw std::invalid_argument("concentration_study: empty k grid");
  if (trials == 0) throw std::invalid_argument("concentration_study: trials must be >= 1");
  std::vector<ConcentrationRow> rows;
  rows.reserve(k_grid.size());
  for (std::size_t k : k_grid) {
    LgiConfig cfg = base;
    cfg.k = k;
    std::vector<double> errors(trials);
    for (std::size_t t = 0; t < trials; ++t) {
      errors[t] = std::abs(lgi_probe(f, x, {}, cfg, rng).rho - reference_rho);
    }
    rows.push_back({k, median(errors), quantile(errors, 0.95), trials});
  }
  return rows;
}

double concentration_slope(std::span<const ConcentrationRow> rows) {
  std::vector<double> ks, errs;
  for (const auto& r : rows) {
    ks.push_back(static_cast<double>(r.k));
    errs.push_back(r.q95_err);
  }
  return loglog_slope(ks, errs);
}

void write_concentration_csv(std::ostream& os, std::span<const ConcentrationRow> rows,
                             std::string_view config_hash) {
  if (!config_hash.empty()) os << hash_comment(config_hash) << '\n';
  os << "k,median_err,q95_err,trials\n";
  for (const auto& r : rows) {
    os << r.k << ',' << format_double(r.median_err) << ',' << format_double(r.q95_err) << ','
       << r.trials << '\n';
  }
}

}  // namespace sadam

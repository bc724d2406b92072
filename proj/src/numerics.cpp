#include "sadam/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace sadam {

ParamVector::ParamVector(std::size_t dim, double fill) : data_(dim, fill) {
  if (dim == 0) throw DimensionError("ParamVector: dimension must be >= 1");
}

ParamVector::ParamVector(std::initializer_list<double> values) : data_(values) {
  if (data_.empty()) throw DimensionError("ParamVector: dimension must be >= 1");
}

ParamVector::ParamVector(std::vector<double> values) : data_(std::move(values)) {
  if (data_.empty()) throw DimensionError("ParamVector: dimension must be >= 1");
}

bool ParamVector::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ (index * 0xD1B54A32D192ED03ULL + 0x8BB84B93962EACC9ULL));
}

SeededRng::SeededRng(std::uint64_t seed, std::uint32_t stream)
    : seed_(seed), stream_(stream), engine_(derive_seed(seed, 0x5EED0000ULL + stream)) {}

double SeededRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t SeededRng::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
  // rejection sampling keeps the result unbiased
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return r % n;
}

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

ParamVector sample_unit_sphere(SeededRng& rng, std::size_t d) {
  if (d == 0) throw DimensionError("sample_unit_sphere: dimension must be >= 1");
  ParamVector u(d);
  double sq = 0.0;
  do {
    sq = 0.0;
    for (auto& e : u) {
      e = rng.normal();
      sq += e * e;
    }
  } while (sq == 0.0);
  if (d == 1) {
    u[0] = u[0] > 0.0 ? 1.0 : -1.0;
    return u;
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (auto& e : u) e *= inv;
  return u;
}

void check_same_dim(const ParamVector& x, const ParamVector& y, const char* what) {
  if (x.dim() != y.dim()) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(x.dim()) +
                         " vs " + std::to_string(y.dim()) + ")");
  }
}

double dot(const ParamVector& x, const ParamVector& y) {
  check_same_dim(x, y, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(const ParamVector& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

ParamVector axpy(double a, const ParamVector& x, const ParamVector& y) {
  check_same_dim(x, y, "axpy");
  ParamVector out = y;
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] += a * x[i];
  return out;
}

ParamVector scale(double a, const ParamVector& x) {
  ParamVector out = x;
  for (auto& v : out) v *= a;
  return out;
}

ParamVector add(const ParamVector& x, const ParamVector& y) {
  check_same_dim(x, y, "add");
  ParamVector out = x;
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] += y[i];
  return out;
}

ParamVector sub(const ParamVector& x, const ParamVector& y) {
  check_same_dim(x, y, "sub");
  ParamVector out = x;
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] -= y[i];
  return out;
}

ParamVector mul(const ParamVector& x, const ParamVector& y) {
  check_same_dim(x, y, "mul");
  ParamVector out = x;
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] *= y[i];
  return out;
}

ParamVector div(const ParamVector& x, const ParamVector& y, double offset) {
  check_same_dim(x, y, "div");
  ParamVector out = x;
  for (std::size_t i = 0; i < x.dim(); ++i) out[i] /= (y[i] + offset);
  return out;
}

ParamVector sqrt(const ParamVector& x) {
  ParamVector out = x;
  for (auto& v : out) v = std::sqrt(v);
  return out;
}

ParamVector clamp(const ParamVector& x, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo must not exceed hi");
  ParamVector out = x;
  for (auto& v : out) v = std::clamp(v, lo, hi);
  return out;
}

double max_abs(const ParamVector& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("loglog_slope: need >= 2 paired points");
  }
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw std::invalid_argument("loglog_slope: values must be positive");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("loglog_slope: x values must not all coincide");
  return (n * sxy - sx * sy) / denom;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

double Matrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(rows, cols); ++i) t += (*this)(i, i);
  return t;
}

double Matrix::frobenius() const {
  double s = 0.0;
  for (double v : data) s += v * v;
  return std::sqrt(s);
}

bool Matrix::is_symmetric(double tol) const {
  if (rows != cols) return false;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = i + 1; j < cols; ++j) {
      const double a = (*this)(i, j);
      const double b = (*this)(j, i);
      if (std::abs(a - b) > tol * std::max({1.0, std::abs(a), std::abs(b)})) return false;
    }
  }
  return true;
}

ParamVector Matrix::apply(const ParamVector& x) const {
  if (cols != x.dim()) throw DimensionError("Matrix::apply: dimension mismatch");
  ParamVector out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += (*this)(i, j) * x[j];
    out[i] = s;
  }
  return out;
}

double Matrix::quadratic_form(const ParamVector& x) const {
  return dot(x, apply(x));
}

}  // namespace sadam

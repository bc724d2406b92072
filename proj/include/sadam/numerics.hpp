#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sadam {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Flat parameter state. Always holds at least one entry.
class ParamVector {
 public:
  explicit ParamVector(std::size_t dim, double fill = 0.0);
  ParamVector(std::initializer_list<double> values);
  explicit ParamVector(std::vector<double> values);

  std::size_t dim() const { return data_.size(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  bool all_finite() const;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> data_;
};

// Stream ids keep the probe, data and init draws independent, so changing the
// probe count never shifts the data order.
enum class Stream : std::uint32_t {
  kProbe = 1,
  kData = 2,
  kInit = 3,
  kAux = 4,
};

/// mt19937_64 seeded from (seed, stream) through splitmix64. The uniform and
/// normal transforms are written out here rather than taken from <random>
/// distributions, whose output is implementation-defined.
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint32_t stream);
  SeededRng(std::uint64_t seed, Stream stream)
      : SeededRng(seed, static_cast<std::uint32_t>(stream)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint32_t stream() const { return stream_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal (Marsaglia polar method).
  double normal();

 private:
  std::uint64_t seed_;
  std::uint32_t stream_;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);
/// Derives a child seed from a parent seed and an index (grid nodes, trials).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Uniform direction on S^{d-1}: d standard normals, normalized.
ParamVector sample_unit_sphere(SeededRng& rng, std::size_t d);

// Flat-vector arithmetic. All binary operations throw DimensionError on
// mismatched sizes.
double dot(const ParamVector& x, const ParamVector& y);
double norm2(const ParamVector& x);
/// a*x + y
ParamVector axpy(double a, const ParamVector& x, const ParamVector& y);
ParamVector scale(double a, const ParamVector& x);
ParamVector add(const ParamVector& x, const ParamVector& y);
ParamVector sub(const ParamVector& x, const ParamVector& y);
ParamVector mul(const ParamVector& x, const ParamVector& y);
/// x / (y + offset); the caller owns the choice of offset.
ParamVector div(const ParamVector& x, const ParamVector& y, double offset = 0.0);
ParamVector sqrt(const ParamVector& x);
ParamVector clamp(const ParamVector& x, double lo, double hi);
double max_abs(const ParamVector& x);

void check_same_dim(const ParamVector& x, const ParamVector& y, const char* what);

// Order statistics with linear interpolation between closest ranks
// (Hyndman-Fan type 7). Throw on empty input.
double quantile(std::vector<double> values, double p);
double median(std::vector<double> values);
/// Least-squares slope of log(y) against log(x). Needs >= 2 positive points.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Dense row-major matrix, used for Hessians and quadratic forms.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  double trace() const;
  double frobenius() const;
  bool is_symmetric(double tol = 1e-12) const;
  ParamVector apply(const ParamVector& x) const;
  double quadratic_form(const ParamVector& x) const;
};

}  // namespace sadam

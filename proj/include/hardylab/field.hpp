#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hardylab {

using cplx = std::complex<double>;
using Point = std::array<double, 2>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class TailNotResolved : public Error {
 public:
  using Error::Error;
};

class ScaleOutOfBox : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

inline constexpr double kDefaultTailTol = 1e-10;
inline constexpr int kMaxComponents = 16;

namespace detail {
struct Lattice;
}

// Uniform periodic grid on [-L, L)^dim with N field components.
class Grid {
 public:
  static Grid make(int dim, int points_per_axis, double half_width, int component_count);

  int dim() const { return dim_; }
  int points_per_axis() const { return m_; }
  double half_width() const { return half_width_; }
  int components() const { return n_; }

  std::size_t point_count() const;
  double spacing() const { return 2.0 * half_width_ / m_; }
  double cell_volume() const;
  double frequency_step() const;
  double frequency_cell() const;

  // axis-local lattices, x_j = -L + j h and xi_k = (pi/L) k in FFT storage order
  const std::vector<double>& axis_coordinates() const;
  const std::vector<double>& axis_frequencies() const;
  // frequencies sorted from -M/2 to M/2-1
  std::vector<double> centered_frequencies() const;

  Point position(std::size_t p) const;
  double radius_sq(std::size_t p) const;
  double frequency_sq(std::size_t p) const;
  int axis_index(std::size_t p, int axis) const;
  bool on_outer_shell(std::size_t p) const;
  const std::vector<std::size_t>& outer_shell() const;

  Grid with_components(int n) const;
  bool same_lattice(const Grid& other) const;
  bool operator==(const Grid& other) const;

 private:
  Grid() = default;
  int dim_ = 1;
  int m_ = 8;
  double half_width_ = 1.0;
  int n_ = 1;
  std::shared_ptr<const detail::Lattice> lattice_;
};

// Component-major storage: value(p, c) lives at c * P + p.
class Field {
 public:
  explicit Field(const Grid& grid, double time = 0.0);
  Field(const Grid& grid, std::vector<cplx> values, double time = 0.0);

  template <class Fn>
  static Field sample(const Grid& grid, Fn&& fn, double time = 0.0) {
    Field f(grid, time);
    const std::size_t P = grid.point_count();
    for (int c = 0; c < grid.components(); ++c)
      for (std::size_t p = 0; p < P; ++p) f(p, c) = fn(grid.position(p), c);
    return f;
  }

  const Grid& grid() const { return grid_; }
  double time() const { return time_; }
  void set_time(double t) { time_ = t; }
  std::size_t points() const { return points_; }
  int components() const { return grid_.components(); }

  cplx& operator()(std::size_t p, int c) { return values_[c * points_ + p]; }
  const cplx& operator()(std::size_t p, int c) const { return values_[c * points_ + p]; }

  std::span<cplx> component(int c) { return {values_.data() + c * points_, points_}; }
  std::span<const cplx> component(int c) const { return {values_.data() + c * points_, points_}; }

  std::vector<cplx>& values() { return values_; }
  const std::vector<cplx>& values() const { return values_; }

  bool all_finite() const;
  bool is_zero() const;

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(cplx s);
  Field& axpy(cplx s, const Field& o);

 private:
  Grid grid_;
  std::size_t points_;
  std::vector<cplx> values_;
  double time_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(cplx s, Field a);

// Spectral samples under the unitary convention fhat(xi) = (2 pi)^(-n/2) int e^{-i x.xi} f dx.
// Stored in FFT order on each axis, same component-major layout as Field.
class SpectralField {
 public:
  static constexpr const char* kConvention = "unitary-2pi";

  SpectralField(const Grid& grid, std::vector<cplx> values);

  const Grid& grid() const { return grid_; }
  std::size_t points() const { return grid_.point_count(); }
  cplx& operator()(std::size_t k, int c) { return values_[c * grid_.point_count() + k]; }
  const cplx& operator()(std::size_t k, int c) const { return values_[c * grid_.point_count() + k]; }
  std::vector<cplx>& values() { return values_; }
  const std::vector<cplx>& values() const { return values_; }
  std::array<double, 2> frequency(std::size_t k) const;
  const char* convention() const { return kConvention; }

 private:
  Grid grid_;
  std::vector<cplx> values_;
};

SpectralField forward_transform(const Field& f);
Field inverse_transform(const SpectralField& g);

cplx inner_product(const Field& f, const Field& g);
double l2_norm(const Field& f);
double l2_norm(const SpectralField& g);

// Pointwise log-weight w = e^{logw}; Gaussian weights e^{gamma |x|^2} are the common case.
class WeightProfile {
 public:
  static WeightProfile gaussian(const Grid& grid, double gamma);
  static WeightProfile unit(const Grid& grid);
  static WeightProfile from_log(const Grid& grid, std::vector<double> log_weight);

  const std::vector<double>& log_weight() const { return log_w_; }
  double tail_tol() const { return tail_tol_; }
  WeightProfile& with_tail_tol(double tol) {
    tail_tol_ = tol;
    return *this;
  }

 private:
  WeightProfile(std::vector<double> lw) : log_w_(std::move(lw)) {}
  std::vector<double> log_w_;
  double tail_tol_ = kDefaultTailTol;
};

// Natural log of the weighted norm, stable for large weights.
double log_weighted_l2_norm(const Field& f, const WeightProfile& w);
double weighted_l2_norm(const Field& f, const WeightProfile& w);

struct TailReport {
  double shell_max = 0.0;
  double global_max = 0.0;
  bool resolved = true;
};
// Works with log-integrands so huge weights do not overflow. Entries equal to -inf are zeros.
TailReport tail_check(const Grid& grid, std::span<const double> log_integrand, double tol);
void require_tail_resolved(const Field& f, const WeightProfile& w, const std::string& what);

std::vector<Field> gradient(const Field& f);
Field partial(const Field& f, int axis);
Field laplacian(const Field& f);

// sum_c |f(p,c)|^2 at each grid point
std::vector<double> pointwise_norm_sq(const Field& f);

}  // namespace hardylab

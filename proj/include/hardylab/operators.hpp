#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hardylab/expression.hpp"
#include "hardylab/field.hpp"
#include "hardylab/linalg.hpp"

namespace hardylab {

// Real symmetric N x N matrix per grid point, with per-axis derivatives.
class MatrixPotential {
 public:
  using EntryFn = std::function<RealMatrix(const Point&)>;

  static MatrixPotential zero(const Grid& grid);
  static MatrixPotential constant(const Grid& grid, const RealMatrix& a);
  // derivatives computed spectrally from the samples
  static MatrixPotential sampled(const Grid& grid, const EntryFn& entries);
  // derivatives supplied; checked against a high-order difference of `entries`
  static MatrixPotential sampled(const Grid& grid, const EntryFn& entries, const std::vector<EntryFn>& derivatives);
  // entry expressions over x1, x2; derivatives taken symbolically
  static MatrixPotential from_expressions(const Grid& grid, const std::vector<std::vector<Expression>>& entries);

  const Grid& grid() const { return grid_; }
  int size() const { return n_; }
  bool is_constant() const { return constant_; }
  bool is_zero() const { return zero_; }
  const RealMatrix& constant_value() const { return const_value_; }

  Eigen::Map<const RealMatrix> at(std::size_t p) const;
  Eigen::Map<const RealMatrix> derivative(int axis, std::size_t p) const;

  // max over grid of the largest singular value
  double sup_norm() const;
  // sup disagreement found when derivatives were supplied (0 otherwise)
  double derivative_gap() const { return derivative_gap_; }

 private:
  MatrixPotential(const Grid& grid, int n) : grid_(grid), n_(n) {}
  void check_symmetric() const;
  void spectral_derivatives();

  Grid grid_;
  int n_;
  bool constant_ = false;
  bool zero_ = false;
  RealMatrix const_value_;
  RealMatrix const_zero_;
  std::vector<double> entries_;                   // point-major blocks of n*n, column-major
  std::vector<std::vector<double>> derivatives_;  // per axis, same layout
  double derivative_gap_ = 0.0;
};

Field apply_potential(const MatrixPotential& a, const Field& f);

struct PotentialBounds {
  double m1 = 0.0;         // sup_x |V1(x)|
  double b_v2 = 0.0;       // sup_t sup_x |Re V2(x,t)|, Re taken as the Hermitian part
  double sup_v2 = 0.0;     // sup_t sup_x |V2(x,t)|
  std::size_t time_samples = 0;
};

// V(x,t) = V1(x) + V2(x,t), complex N x N.
class TimePotential {
 public:
  using StaticFn = std::function<ComplexMatrix(const Point&)>;
  using DynamicFn = std::function<ComplexMatrix(const Point&, double)>;

  TimePotential() = default;
  static TimePotential zero(int n);
  static TimePotential make(int n, StaticFn v1, DynamicFn v2);
  // V1 = 0 and V2(x,t) = m for all x, t
  static TimePotential constant_dynamic(const ComplexMatrix& m);
  static TimePotential constant_static(const ComplexMatrix& m);

  int size() const { return n_; }
  bool is_zero() const { return !v1_ && !v2_; }
  bool has_static() const { return static_cast<bool>(v1_); }
  bool has_dynamic() const { return static_cast<bool>(v2_); }
  bool time_independent() const { return !v2_ || v2_time_free_; }
  bool spatially_constant() const { return spatially_constant_; }

  ComplexMatrix static_at(const Point& x) const;
  ComplexMatrix dynamic_at(const Point& x, double t) const;
  ComplexMatrix at(const Point& x, double t) const;

  // bound constants recomputed over the grid and the time samples (default 65 equispaced in [0,1])
  PotentialBounds bounds(const Grid& grid, std::vector<double> times = {}) const;

  TimePotential& mark_spatially_constant(bool v = true) {
    spatially_constant_ = v;
    return *this;
  }
  TimePotential& mark_time_independent(bool v = true) {
    v2_time_free_ = v;
    return *this;
  }

 private:
  int n_ = 1;
  StaticFn v1_;
  DynamicFn v2_;
  bool spatially_constant_ = false;
  bool v2_time_free_ = false;
};

std::vector<double> default_time_samples(std::size_t count = 65);

Field apply_time_potential(const TimePotential& v, const Field& f, double t);

// <(A + V(t)) f, f>
cplx potential_form(const MatrixPotential& a, const TimePotential& v, const Field& f, double t);

struct DilationReport {
  std::vector<double> values;
  std::vector<double> tolerances;
  double min_value = 0.0;
  bool pass = true;
};

// Re sum_k int < x_k (A d_k f - (d_k A) f), f > dx for each probe, tolerance form_tol_rel * |f|_{H1}^2
DilationReport check_dilation_positivity(const MatrixPotential& a, const std::vector<Field>& probes,
                                         double form_tol_rel = 1e-8);
double dilation_form(const MatrixPotential& a, const Field& f);

struct ImPositivityReport {
  double c0_probe = 0.0;   // min of Im<(A+V)u(x),u(x)>/|u(x)|^2 over probe points
  double c0_matrix = 0.0;  // min eigenvalue of the anti-Hermitian part over grid and times
  bool holds = true;       // a C0 >= 0 exists
};

ImPositivityReport check_im_positivity(const MatrixPotential& a, const TimePotential& v,
                                       const std::vector<Field>& probes, const std::vector<double>& times);

struct PhiBoundReport {
  double c0 = 0.0;  // smallest C0 with |Phi(A,V)u| <= C0 |u|^2 pointwise over probes
};
PhiBoundReport check_phi_bound(const MatrixPotential& a, const TimePotential& v, double coef_a, double coef_b,
                               const std::vector<Field>& probes, const std::vector<double>& times);

struct SemiboundReport {
  double d_probe = 0.0;   // max Rayleigh quotient over probe points
  double d_matrix = 0.0;  // max eigenvalue over grid
};
SemiboundReport check_semiboundedness(const MatrixPotential& a, const std::vector<Field>& probes);

// Real weight phi(x,t) sampled at one time together with the derivatives the S/K algebra needs.
struct WeightSample {
  enum class Kind { quadratic, general };
  Kind kind = Kind::general;
  double time = 0.0;
  std::vector<double> phi, lap, phi_t, lap_t, phi_tt;
  std::vector<std::vector<double>> grad, grad_t;

  // phi = |x|^2, time independent
  static WeightSample quadratic(const Grid& grid);
  static WeightSample zero(const Grid& grid);
};

// With f = e^{gamma phi} u and u_t = (a+ib)(Lap u + A u + V u + F):
//   f_t = S f + K f + (a+ib)(V f + e^{gamma phi} F)
//   S = a A1 - i b gamma B1 + gamma phi_t,  K = i b A1 - a gamma B1
//   A1 = Lap + A + gamma^2 |grad phi|^2,    B1 = 2 grad phi . grad + Lap phi
class SKDecomposition {
 public:
  SKDecomposition(MatrixPotential a_pot, TimePotential v, double a, double b, double gamma, WeightSample w);

  double a() const { return a_; }
  double b() const { return b_; }
  double gamma() const { return gamma_; }
  const WeightSample& weight() const { return w_; }
  const MatrixPotential& potential() const { return apot_; }
  const TimePotential& time_potential() const { return v_; }

  Field apply_A1(const Field& f) const;
  Field apply_B1(const Field& f) const;
  Field apply_S(const Field& f) const;
  Field apply_K(const Field& f) const;
  // time derivative of S, built from phi_t, grad phi_t, lap phi_t, phi_tt
  Field apply_St(const Field& f) const;
  Field residual(const Field& f, const Field& dfdt, double t) const;

 private:
  MatrixPotential apot_;
  TimePotential v_;
  double a_, b_, gamma_;
  WeightSample w_;
  std::vector<double> grad_sq_;
  std::vector<double> grad_sq_t_;
};

SKDecomposition build_sk(const MatrixPotential& a_pot, const TimePotential& v, double a, double b, double gamma,
                         const WeightSample& w);

struct CommutatorReport {
  double closed_form = 0.0;  // gamma k^2 (8|grad f|^2 + 32 gamma^2 int |x|^2|f|^2 + 2 int <(grad phi . grad A) f, f>)
  double nested = 0.0;       // Re <S_t f + (SK - KS) f, f>
  double printed = 0.0;      // gamma k (8|grad f|^2 + 32 ...) + 2 int <A grad phi . grad f - grad phi . grad A f, f>
  double relative_gap = 0.0;
};

CommutatorReport commutator_form(const SKDecomposition& dec, const Field& f, double t);

}  // namespace hardylab

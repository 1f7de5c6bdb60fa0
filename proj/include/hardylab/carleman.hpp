#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hardylab/propagator.hpp"
#include "hardylab/report.hpp"

namespace hardylab {

// kappa(x,t) = mu |x + r t(1-t) e1|^2 - r^2 t(1-t) / (8 mu)
// sigma(t)   = (1+eps) t(1-t) / (16 mu)
// chi(t)     = r^2 t(1-t)(1-2t) / 6
struct CarlemanParams {
  double mu = 1.0;
  double r = 1.0;
  double eps = 1.0;

  static CarlemanParams make(double mu, double r, double eps);
  double drift(double t) const { return r * t * (1.0 - t); }
  double kappa(const Point& x, double t) const;
  double sigma(double t) const { return (1.0 + eps) * t * (1.0 - t) / (16.0 * mu); }
  double chi(double t) const { return r * r * t * (1.0 - t) * (1.0 - 2.0 * t) / 6.0; }
  // log weight: kappa - sigma, plus chi in the parabolic regime
  double log_weight(const Point& x, double t, Regime regime) const;
  // phi with its space and time derivatives on the grid
  WeightSample weight(const Grid& grid, double t, Regime regime) const;
  // constant term of the commutator form
  double constant_term() const { return (r * r + 1.0 + eps) / (8.0 * mu); }
  // eps r^2 / (8 mu)
  double lower_bound_rate() const { return eps * r * r / (8.0 * mu); }
};

struct TestFunction {
  std::vector<double> times;  // uniform on [0, 1]
  std::vector<Field> values;
  double t_lo = 0.1, t_hi = 0.9;

  const Grid& grid() const { return values.front().grid(); }
  std::size_t size() const { return values.size(); }
  TestFunction scaled(cplx c) const;
};

struct BumpOptions {
  double t_lo = 0.1;
  double t_hi = 0.9;
  double support = 0.9;  // spatial radius as a fraction of L
  double taper = 24.0;   // Gaussian factor e^{-taper |x|^2 / L^2}
  int modes = 3;         // plane waves with |k_j| <= modes on each axis
};

// random low modes with coefficients alpha + beta cos(2 pi t) + gamma sin(2 pi t), times smooth bumps in x and t
TestFunction make_bump_test_function(const Grid& grid, std::size_t time_samples, std::uint64_t seed,
                                     const BumpOptions& opt = {});
// max |vhat| on the Nyquist ring relative to max |vhat|, over all time samples
double spectral_tail(const TestFunction& v);

struct CarlemanReport {
  std::string regime;
  double lhs = 0.0;        // r sqrt(eps / (8 mu)) |e^{phi} v|
  double rhs = 0.0;        // |e^{phi} L v|
  double ratio = 0.0;      // rhs / lhs
  double log_scale = 0.0;  // lhs and rhs are reported times e^{-log_scale}
  double dt_gap = 0.0;     // relative gap between the 2- and 4-step centred differences
  double tol = 2e-2;
  bool degenerate = false;
  bool pass = true;
  std::vector<double> times, lhs_density, rhs_density;

  Table table() const;
};

// L v = d_t v - i (Lap + A) v
CarlemanReport carleman_schrodinger_check(const TestFunction& v, const MatrixPotential& a, const CarlemanParams& p,
                                          double tol = 2e-2);
// L v = d_t v - (Lap + A) v, weight with chi
CarlemanReport carleman_parabolic_check(const TestFunction& v, const MatrixPotential& a, const CarlemanParams& p,
                                        double tol = 2e-2);

struct CommutatorBoundReport {
  std::string regime;
  std::vector<std::string> term_names;
  std::vector<double> times;
  std::vector<std::vector<double>> terms;  // terms[k][i]
  std::vector<double> aggregate, nested, bound, margin;  // margin = (aggregate - bound) / aggregate scale
  double min_margin = 0.0;
  double nested_gap = 0.0;  // max |aggregate - nested| / max |aggregate|
  double min_square = 0.0;  // smallest square term, relative to the aggregate scale
  double log_scale = 0.0;
  bool squares_nonnegative = true;
  bool pass = true;

  Table table() const;
};

// <S_t f + [S, K] f, f> at each time sample, f = e^{phi} v, termwise and by nested operators
CommutatorBoundReport commutator_lower_bound(const TestFunction& v, const MatrixPotential& a, const CarlemanParams& p,
                                             Regime regime, double margin_tol = 1e-8);

}  // namespace hardylab

#pragma once

#include <vector>

#include "hardylab/propagator.hpp"
#include "hardylab/report.hpp"

namespace hardylab {

struct WeightSpec {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.0;

  static WeightSpec make(double alpha, double beta, double gamma = 0.0);
  double mu(double t) const { return alpha * t + beta * (1.0 - t); }
  double rho(double t) const { return alpha * (1.0 - t) + beta * t; }
  // gamma alpha beta rho^2(s) + (alpha - beta) a rho(s) / (4 (a^2 + b^2)), as printed
  double nu(double s, const EvolutionCoefficients& coef) const;
  bool admissible() const { return alpha * beta < 2.0; }
};

struct ConvexityTrace {
  std::vector<double> times, Q, logQ, D, Nfreq, d2logQ;
  double min_d2logQ = 0.0;       // over interior samples
  double max_abs_logQ = 0.0;
  double convexity_slack = 0.0;  // max_t log Q(t) - (1-t) log Q(0) - t log Q(1), t rescaled to [0,1]

  Table table() const;
};

// Q = |e^{gamma|x|^2} u|^2, D = <S f, f> with f = e^{gamma |x|^2} u, N = D / Q
ConvexityTrace q_trace(const Trajectory& traj, double gamma, const SKDecomposition& dec);

struct TheoremBoundReport {
  // every lhs/rhs/margin value is a natural log
  std::vector<double> times, lhs, rhs, margin;
  std::vector<double> standard_lhs, standard_rhs, standard_margin;  // Q(t) <= Q(0)^{1-t} Q(1)^t, configured gamma
  std::vector<double> rescaled_rhs, rescaled_margin;  // exponents beta(1-t)/mu and alpha t/mu on an unraised lhs
  double m1 = 0.0, m2 = 0.0, b_v2 = 0.0, c_total = 0.0;
  double n_hat = 0.0;           // fitted, not the constant of the theorem
  double n_hat_rescaled = 0.0;
  double gradient_lhs = 0.0;    // log of |sqrt(t(1-t)) e^{|x|^2/mu^2} grad u|_{L2 space-time}
  double bound_tol = 1e-6;
  bool pass = true;
  bool standard_pass = true;
  bool rescaled_pass = true;
  bool degenerate = false;

  Table table() const;
};

TheoremBoundReport interpolation_bound_check(const Trajectory& traj, const WeightSpec& w, const TimePotential& v,
                                             double bound_tol = 1e-6);

struct DecayReport {
  double lhs_printed = 0.0, rhs_printed = 0.0, margin_printed = 0.0;  // e^{M} |e^phi u(T)| <= M |e^{g x^2} u0| + k F
  double lhs = 0.0, rhs = 0.0, margin = 0.0;  // |e^phi u(T)| <= e^{M} (|e^{g x^2} u0| + k F)
  double forcing_term = 0.0;                  // kappa int_0^T |e^{phi(t)} F(t)| dt
  double contraction_margin = 0.0;            // |u(0)| - |u(T)|
  bool pass = true;
};

// phi(x,t) = gamma a |x|^2 / (a + 4 gamma (a^2 + b^2) t)
DecayReport decay_estimate_check(const Trajectory& traj, double gamma, const EvolutionCoefficients& coef,
                                 const Forcing& forcing, double m_t, double tol = 1e-10);
double decay_weight_rate(double gamma, const EvolutionCoefficients& coef, double t);

struct HardyEnvelope {
  double beta_hat = 0.0;
  double alpha_hat = 0.0;
  double product = 0.0;
  std::size_t spatial_points = 0, spectral_points = 0;
};

// |f(x)| <= C e^{-|x|^2 / beta^2},  |fhat(xi)| <= C' e^{-4|xi|^2 / alpha^2}
HardyEnvelope hardy_envelope(const Field& f, double window_lo = 1e-10, double window_hi = 1e-1);
double spatial_envelope(const Field& f, double window_lo = 1e-10, double window_hi = 1e-1);

// e^{-(1/beta^2 + i/(4T)) |x|^2} in every component; needs alpha beta = 4T
Field sharp_gaussian_initial(const WeightSpec& w, double T, const Grid& grid);

}  // namespace hardylab

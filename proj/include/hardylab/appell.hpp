#pragma once

#include <string>
#include <vector>

#include "hardylab/weights.hpp"

namespace hardylab {

// u~(x,t) = k(t)^{n/2} u(k(t) x, s(t)) e^{phi(x,t)}
//   rho(t) = alpha (1-t) + beta t,  k = sqrt(alpha beta) / rho,  s = beta t / rho
//   phi = (alpha - beta) |x|^2 / (4 (a+ib) rho)
struct AppellMap {
  WeightSpec w;
  EvolutionCoefficients coef;

  static AppellMap make(const WeightSpec& w, const EvolutionCoefficients& coef);
  double rho(double t) const { return w.alpha * (1.0 - t) + w.beta * t; }
  double scale(double t) const { return std::sqrt(w.alpha * w.beta) / rho(t); }
  double time_map(double t) const { return w.beta * t / rho(t); }
  cplx phase_rate(double t) const;  // phi = phase_rate(t) |x|^2
  bool identity() const { return w.alpha == w.beta; }
  // (beta, alpha): undoes this map at equal times
  AppellMap inverse() const;
};

// Samples a trajectory stored on a uniform time grid at any time in range,
// by 6-point Lagrange interpolation (nodes are returned as stored).
class TrajectorySampler {
 public:
  explicit TrajectorySampler(const Trajectory& traj);
  Field at(double s) const;
  double t_begin() const { return t0_; }
  double t_end() const { return t1_; }

 private:
  const Trajectory* traj_;
  double t0_, t1_, dt_;
};

// g(x) = f(k x) by trigonometric interpolation; points with k x outside the box read zero.
Field rescale_field(const Field& f, double k);

Field appell_forward(const TrajectorySampler& u, const AppellMap& map, double t);
// transformed samples at the same time nodes as u
Trajectory appell_trajectory(const Trajectory& u, const AppellMap& map);

// V~(x,t) = k(t)^2 V(k x, s(t)); V1 and V2 both land in the time-dependent part
TimePotential appell_potential(const TimePotential& v, const AppellMap& map);
// F~(x,t) = k^{n/2+2} F(k x, s) e^{phi}
Forcing appell_forcing(const Forcing& f, const AppellMap& map);

struct AppellCandidate {
  std::string name;
  std::vector<double> rhs;
  double gap = 0.0;  // max relative gap, inf when not resolved on the box
  bool resolved = true;
};

struct AppellIdentityReport {
  std::vector<double> times, s_times;
  std::vector<double> lhs_unweighted, rhs_unweighted;
  double unweighted_gap = 0.0;
  double gamma = 0.0;
  std::vector<double> lhs_weighted;
  // rate on u(s): gamma alpha beta / mu(s)^2 + (alpha - beta) a / (4 (a^2+b^2) mu(s))
  AppellCandidate derived;
  AppellCandidate mu_squared;          // e^{mu(s)^2 |x|^2}
  AppellCandidate mu_inverse_squared;  // e^{|x|^2 / mu(s)^2}
  std::string winner;                  // printed convention within 1e-5, or "none"

  Table table() const;
};

AppellIdentityReport appell_identity_check(const Trajectory& u, const AppellMap& map, double gamma,
                                           std::size_t sample_count = 33, double identity_tol = 1e-5);

// max over interior nodes of |d_t u~ - (a+ib)(Lap u~ + k^2 A u~ + V~ u~)| / |u~|, centred differences in t
double appell_pde_residual(const Trajectory& u, const AppellMap& map, const MatrixPotential& a,
                           const TimePotential& v);

// conj(u(x, 1 - t)) stored on the same nodes; a solution again when a = 0
Trajectory time_reversed(const Trajectory& u);
// conj of the (beta, alpha) transform of the reversed trajectory at 1 - t; equals appell_forward when a = 0
Field appell_via_reversal(const Trajectory& u, const AppellMap& map, double t);

}  // namespace hardylab

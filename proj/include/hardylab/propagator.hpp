#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hardylab/operators.hpp"

namespace hardylab {

enum class Regime { schrodinger, parabolic, mixed };
const char* regime_name(Regime r);

// u_t = (a + ib)[Lap u + A u + V u + F]
struct EvolutionCoefficients {
  double a = 0.0;
  double b = 1.0;

  static EvolutionCoefficients make(double a, double b);
  Regime regime() const;
  cplx c() const { return {a, b}; }
  double kappa() const;  // sqrt(a^2 + b^2)
};

enum class Method { exact_multiplier, strang, duhamel_picard };
const char* method_name(Method m);
Method parse_method(const std::string& s);

// F(x, t) sampled on the grid
using Forcing = std::function<Field(double t)>;

// lambda |u|^{2 sigma} u, |u| the pointwise norm over components
struct PowerNonlinearity {
  double lambda = 0.0;
  int sigma = 1;
};

struct EvolutionPlan {
  EvolutionCoefficients coefficients;
  double t_final = 1.0;
  int step_count = 256;
  Method method = Method::strang;
  Forcing forcing;
  std::optional<PowerNonlinearity> nonlinearity;
  int picard_iters = 8;
  double duhamel_tol = 1e-10;
  bool check_initial_tail = true;
};

struct Trajectory {
  std::vector<Field> states;  // each carries its time tag

  std::size_t size() const { return states.size(); }
  std::vector<double> times() const;
  const Field& operator[](std::size_t i) const { return states[i]; }
  const Grid& grid() const { return states.front().grid(); }
};

Field free_propagate(const Field& f, const MatrixPotential& a, const EvolutionCoefficients& coef, double t);

Field strang_step(const Field& u, const MatrixPotential& a, const TimePotential& v, const EvolutionCoefficients& coef,
                  double t, double dt);

// Reusable Strang stepper; caches the pointwise exponentials when V does not depend on t.
// Forcing is added by the trapezoid rule around the linear step, which keeps second order.
class StrangStepper {
 public:
  StrangStepper(MatrixPotential a, TimePotential v, EvolutionCoefficients coef, double dt, Forcing forcing = {});
  Field step(const Field& u, double t) const;
  // linear part only
  Field linear_step(const Field& u, double t) const;

 private:
  void half_matrices(double t_mid, std::vector<ComplexMatrix>& out) const;
  Field apply_half(const Field& u, const std::vector<ComplexMatrix>& mats) const;

  MatrixPotential a_;
  TimePotential v_;
  EvolutionCoefficients coef_;
  double dt_;
  Forcing forcing_;
  bool cached_ = false;
  std::vector<ComplexMatrix> cache_;
  std::vector<cplx> fourier_;
};

Trajectory duhamel_evolve(const Field& u0, const MatrixPotential& a, const TimePotential& v,
                          const EvolutionCoefficients& coef, double t_final, int step_count, int picard_iters = 8,
                          double duhamel_tol = 1e-10);

// exact pointwise flow of u_t = (a+ib) lambda |u|^{2 sigma} u over time dt
Field nonlinear_flow(const Field& u, const EvolutionCoefficients& coef, const PowerNonlinearity& nl, double dt);

Field nonlinear_step(const Field& u, const MatrixPotential& a, const EvolutionCoefficients& coef,
                     const PowerNonlinearity& nl, double t, double dt);

Trajectory evolve(const EvolutionPlan& plan, const Field& u0, const MatrixPotential& a, const TimePotential& v);

std::vector<double> mass_trace(const Trajectory& traj);

}  // namespace hardylab

#include "hardylab/propagator.hpp"

#include <cmath>

#include "fft.hpp"

namespace hardylab {

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::schrodinger: return "schrodinger";
    case Regime::parabolic: return "parabolic";
    case Regime::mixed: return "mixed";
  }
  return "?";
}

EvolutionCoefficients EvolutionCoefficients::make(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw InvalidArgument("coefficients must be finite");
  if (a < 0.0) throw InvalidArgument("coefficient a must be >= 0 (backward parabolic evolution is refused)");
  if (a == 0.0 && b == 0.0) throw InvalidArgument("coefficients (a, b) must not both vanish");
  return {a, b};
}

Regime EvolutionCoefficients::regime() const {
  if (a == 0.0) return Regime::schrodinger;
  if (b == 0.0) return Regime::parabolic;
  return Regime::mixed;
}

double EvolutionCoefficients::kappa() const { return std::hypot(a, b); }

const char* method_name(Method m) {
  switch (m) {
    case Method::exact_multiplier: return "exact_multiplier";
    case Method::strang: return "strang";
    case Method::duhamel_picard: return "duhamel_picard";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "exact_multiplier") return Method::exact_multiplier;
  if (s == "strang") return Method::strang;
  if (s == "duhamel_picard") return Method::duhamel_picard;
  throw InvalidArgument("unknown method '" + s + "'");
}

std::vector<double> Trajectory::times() const {
  std::vector<double> t;
  t.reserve(states.size());
  for (const auto& s : states) t.push_back(s.time());
  return t;
}

namespace {

void check_coef(const EvolutionCoefficients& coef) { (void)EvolutionCoefficients::make(coef.a, coef.b); }

// multiply each component vector by the matrix m
void mix_components(Field& f, const ComplexMatrix& m) {
  const int n = f.components();
  if (n == 1) {
    f *= m(0, 0);
    return;
  }
  const std::size_t P = f.points();
  Eigen::VectorXcd v(n), w(n);
  for (std::size_t p = 0; p < P; ++p) {
    for (int c = 0; c < n; ++c) v(c) = f(p, c);
    w = m * v;
    for (int c = 0; c < n; ++c) f(p, c) = w(c);
  }
}

}  // namespace

Field free_propagate(const Field& f, const MatrixPotential& a, const EvolutionCoefficients& coef, double t) {
  check_coef(coef);
  if (!a.is_constant()) throw InvalidArgument("free_propagate needs a constant A");
  if (coef.a > 0.0 && t < 0.0) throw InvalidArgument("free_propagate: backward parabolic evolution refused");
  if (f.components() != a.size()) throw InvalidArgument("free_propagate: component mismatch");
  Field out(f.grid(), f.time() + t);
  if (t == 0.0) {
    out.values() = f.values();
    return out;
  }
  const cplx c = coef.c();
  const Grid& g = f.grid();
  Field spec = detail::apply_multiplier(f, [&](std::size_t k) { return std::exp(-t * c * g.frequency_sq(k)); });
  if (!a.is_zero()) mix_components(spec, matrix_exp(a.constant_value().cast<cplx>(), t * c));
  out.values() = std::move(spec.values());
  return out;
}

// ---------------------------------------------------------------- Strang

StrangStepper::StrangStepper(MatrixPotential a, TimePotential v, EvolutionCoefficients coef, double dt, Forcing forcing)
    : a_(std::move(a)), v_(std::move(v)), coef_(coef), dt_(dt), forcing_(std::move(forcing)) {
  check_coef(coef_);
  if (!(dt > 0.0)) throw InvalidArgument("Strang step needs dt > 0 (backward evolution refused)");
  if (v_.size() != a_.size()) throw InvalidArgument("A and V sizes differ");
  const Grid& g = a_.grid();
  fourier_.resize(g.point_count());
  const cplx c = coef_.c();
  for (std::size_t k = 0; k < fourier_.size(); ++k) fourier_[k] = std::exp(-dt_ * c * g.frequency_sq(k));
  if (v_.time_independent()) {
    half_matrices(0.0, cache_);
    cached_ = true;
  }
}

void StrangStepper::half_matrices(double t_mid, std::vector<ComplexMatrix>& out) const {
  const Grid& g = a_.grid();
  const cplx s = 0.5 * dt_ * coef_.c();
  const bool uniform = a_.is_constant() && v_.spatially_constant();
  const std::size_t P = uniform ? 1 : g.point_count();
  out.resize(P);
  for (std::size_t p = 0; p < P; ++p) {
    ComplexMatrix m = a_.at(p).cast<cplx>();
    if (!v_.is_zero()) m += v_.at(g.position(p), t_mid);
    out[p] = matrix_exp(m, s);
  }
}

Field StrangStepper::apply_half(const Field& u, const std::vector<ComplexMatrix>& mats) const {
  Field out = u;
  if (mats.size() == 1) {
    mix_components(out, mats[0]);
    return out;
  }
  const int n = u.components();
  const std::size_t P = u.points();
  if (n == 1) {
    auto c0 = out.component(0);
    for (std::size_t p = 0; p < P; ++p) c0[p] *= mats[p](0, 0);
    return out;
  }
  Eigen::VectorXcd v(n), w(n);
  for (std::size_t p = 0; p < P; ++p) {
    for (int c = 0; c < n; ++c) v(c) = u(p, c);
    w = mats[p] * v;
    for (int c = 0; c < n; ++c) out(p, c) = w(c);
  }
  return out;
}

Field StrangStepper::linear_step(const Field& u, double t) const {
  if (u.components() != a_.size() || !u.grid().same_lattice(a_.grid()))
    throw InvalidArgument("Strang step: field does not match the potential");
  const bool trivial = a_.is_zero() && v_.is_zero();
  Field w = u;
  std::vector<ComplexMatrix> local;
  const std::vector<ComplexMatrix>* mats = &cache_;
  if (!trivial && !cached_) {
    half_matrices(t + 0.5 * dt_, local);
    mats = &local;
  }
  if (!trivial) w = apply_half(w, *mats);
  w = detail::apply_multiplier(w, [&](std::size_t k) { return fourier_[k]; });
  if (!trivial) w = apply_half(w, *mats);
  w.set_time(t + dt_);
  return w;
}

Field StrangStepper::step(const Field& u, double t) const {
  if (!forcing_) return linear_step(u, t);
  const cplx h = 0.5 * dt_ * coef_.c();
  Field w = u;
  w.axpy(h, forcing_(t));
  w = linear_step(w, t);
  w.axpy(h, forcing_(t + dt_));
  return w;
}

Field strang_step(const Field& u, const MatrixPotential& a, const TimePotential& v, const EvolutionCoefficients& coef,
                  double t, double dt) {
  require_tail_resolved(u, WeightProfile::unit(u.grid()), "strang_step");
  return StrangStepper(a, v, coef, dt).step(u, t);
}

// ---------------------------------------------------------------- Duhamel

Trajectory duhamel_evolve(const Field& u0, const MatrixPotential& a, const TimePotential& v,
                          const EvolutionCoefficients& coef, double t_final, int step_count, int picard_iters,
                          double duhamel_tol) {
  check_coef(coef);
  if (!a.is_constant()) throw InvalidArgument("duhamel_evolve needs a constant A");
  if (step_count < 1) throw InvalidArgument("step_count must be >= 1");
  if (!(t_final > 0.0)) throw InvalidArgument("t_final must be positive");
  if (picard_iters < 1) throw InvalidArgument("picard_iters must be >= 1");
  const double dt = t_final / step_count;
  const cplx c = coef.c();
  const cplx half = 0.5 * dt * c;

  Trajectory traj;
  traj.states.reserve(step_count + 1);
  Field u = u0;
  u.set_time(0.0);
  traj.states.push_back(u);
  for (int k = 1; k <= step_count; ++k) {
    const double t0 = (k - 1) * dt, t1 = k * dt;
    // base = H(dt)[u + (dt/2) c V(t0) u]
    Field src = u;
    if (!v.is_zero()) src.axpy(half, apply_time_potential(v, u, t0));
    Field base = free_propagate(src, a, coef, dt);
    Field guess = base;
    if (!v.is_zero()) {
      // predictor: explicit endpoint value, then fixed-point sweeps on the implicit trapezoid term
      Field pred = free_propagate(u, a, coef, dt);
      guess = base;
      guess.axpy(half, apply_time_potential(v, pred, t1));
      bool converged = false;
      for (int it = 0; it < picard_iters; ++it) {
        Field next = base;
        next.axpy(half, apply_time_potential(v, guess, t1));
        const double gap = l2_norm(next - guess);
        const double scale = std::max(l2_norm(next), 1e-300);
        guess = std::move(next);
        if (gap <= duhamel_tol * scale) {
          converged = true;
          break;
        }
      }
      if (!converged && !guess.is_zero())
        throw ConvergenceFailure("Duhamel iteration did not converge within " + std::to_string(picard_iters) +
                                 " sweeps at t = " + std::to_string(t1));
    }
    u = std::move(guess);
    u.set_time(t1);
    traj.states.push_back(u);
  }
  return traj;
}

// ---------------------------------------------------------------- nonlinear

Field nonlinear_flow(const Field& u, const EvolutionCoefficients& coef, const PowerNonlinearity& nl, double dt) {
  if (nl.sigma != 1 && nl.sigma != 2) throw InvalidArgument("power nonlinearity needs sigma in {1, 2}");
  if (nl.lambda == 0.0) return u;
  const auto m = pointwise_norm_sq(u);
  Field out = u;
  const std::size_t P = u.points();
  const double s = nl.sigma;
  for (std::size_t p = 0; p < P; ++p) {
    const double q0 = std::pow(m[p], s);  // |u|^{2 sigma}
    double integral;                       // int_0^dt |u|^{2 sigma} ds along the exact flow
    if (coef.a == 0.0) {
      integral = q0 * dt;
    } else {
      const double arg = 1.0 - 2.0 * s * coef.a * nl.lambda * q0 * dt;
      if (!(arg > 0.0)) throw InvalidArgument("nonlinear flow blows up within the step");
      integral = -std::log(arg) / (2.0 * s * coef.a * nl.lambda);
      if (nl.lambda * q0 == 0.0) integral = 0.0;
    }
    const cplx factor = std::exp(coef.c() * nl.lambda * integral);
    for (int c = 0; c < u.components(); ++c) out(p, c) *= factor;
  }
  return out;
}

Field nonlinear_step(const Field& u, const MatrixPotential& a, const EvolutionCoefficients& coef,
                     const PowerNonlinearity& nl, double t, double dt) {
  StrangStepper lin(a, TimePotential::zero(a.size()), coef, dt);
  Field w = nonlinear_flow(u, coef, nl, 0.5 * dt);
  w = lin.linear_step(w, t);
  w = nonlinear_flow(w, coef, nl, 0.5 * dt);
  w.set_time(t + dt);
  return w;
}

// ---------------------------------------------------------------- driver

Trajectory evolve(const EvolutionPlan& plan, const Field& u0, const MatrixPotential& a, const TimePotential& v) {
  check_coef(plan.coefficients);
  if (plan.step_count < 1) throw InvalidArgument("step_count must be >= 1");
  if (!(plan.t_final > 0.0) || plan.t_final > 1.0) throw InvalidArgument("t_final must lie in (0, 1]");
  if (plan.check_initial_tail) require_tail_resolved(u0, WeightProfile::unit(u0.grid()), "initial data");
  const double dt = plan.t_final / plan.step_count;

  if (plan.method == Method::duhamel_picard) {
    if (plan.forcing || plan.nonlinearity) throw InvalidArgument("duhamel_picard supports neither forcing nor nonlinearity");
    return duhamel_evolve(u0, a, v, plan.coefficients, plan.t_final, plan.step_count, plan.picard_iters,
                          plan.duhamel_tol);
  }

  Trajectory traj;
  traj.states.reserve(plan.step_count + 1);
  Field u = u0;
  u.set_time(0.0);
  traj.states.push_back(u);

  if (plan.method == Method::exact_multiplier) {
    if (!a.is_constant() || !v.is_zero() || plan.forcing || plan.nonlinearity)
      throw InvalidArgument("exact_multiplier needs constant A, V = 0, no forcing and no nonlinearity");
    for (int k = 1; k <= plan.step_count; ++k) traj.states.push_back(free_propagate(u, a, plan.coefficients, k * dt));
    return traj;
  }

  if (plan.nonlinearity && plan.forcing) throw InvalidArgument("forcing together with a nonlinearity is not supported");
  StrangStepper stepper(a, v, plan.coefficients, dt, plan.forcing);
  for (int k = 1; k <= plan.step_count; ++k) {
    const double t = (k - 1) * dt;
    if (plan.nonlinearity) {
      u = nonlinear_flow(u, plan.coefficients, *plan.nonlinearity, 0.5 * dt);
      u = stepper.linear_step(u, t);
      u = nonlinear_flow(u, plan.coefficients, *plan.nonlinearity, 0.5 * dt);
    } else {
      u = stepper.step(u, t);
    }
    u.set_time(k * dt);
    traj.states.push_back(u);
  }
  return traj;
}

std::vector<double> mass_trace(const Trajectory& traj) {
  std::vector<double> m;
  m.reserve(traj.size());
  for (const auto& s : traj.states) m.push_back(l2_norm(s));
  return m;
}

}  // namespace hardylab

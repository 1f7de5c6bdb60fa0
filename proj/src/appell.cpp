#include "hardylab/appell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace hardylab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// periodic interpolation kernel sin(M d) / (M tan d), d = pi (y - x_q) / (2L), Nyquist split as a cosine
std::vector<double> interp_matrix(const Grid& g, double k) {
  const int M = g.points_per_axis();
  const double L = g.half_width();
  const auto& x = g.axis_coordinates();
  const double B = std::numbers::pi / M;
  std::vector<double> cq(M), sq(M);
  for (int q = 0; q < M; ++q) {
    cq[q] = std::cos(q * B);
    sq[q] = std::sin(q * B);
  }
  std::vector<double> w(static_cast<std::size_t>(M) * M, 0.0);
  for (int m = 0; m < M; ++m) {
    const double y = k * x[m];
    if (y < -L || y >= L) continue;
    const double A = std::numbers::pi * (y - x[0]) / (2.0 * L);
    const double sa = std::sin(A), ca = std::cos(A), sma = std::sin(M * A);
    double* row = &w[static_cast<std::size_t>(m) * M];
    for (int q = 0; q < M; ++q) {
      double d = std::numbers::pi * (y - x[q]) / (2.0 * L);
      d -= std::numbers::pi * std::round(d / std::numbers::pi);
      if (std::abs(d) < 0.1) {
        row[q] = d == 0.0 ? 1.0 : std::sin(M * d) / (M * std::tan(d));
      } else {
        const double s = sa * cq[q] - ca * sq[q];
        const double c = ca * cq[q] + sa * sq[q];
        row[q] = (q % 2 ? -sma : sma) * c / (M * s);
      }
    }
  }
  return w;
}

void check_times(const Trajectory& u) {
  if (u.size() < 6) throw InvalidArgument("appell: trajectory needs at least 6 samples");
  const auto t = u.times();
  if (std::abs(t.front()) > 1e-12 || std::abs(t.back() - 1.0) > 1e-12)
    throw InvalidArgument("appell: trajectory must span [0, 1]");
}

double rel_gap(double lhs, double rhs) {
  const double s = std::max(std::abs(lhs), std::abs(rhs));
  return s > 0.0 ? std::abs(lhs - rhs) / s : 0.0;
}

}  // namespace

AppellMap AppellMap::make(const WeightSpec& w, const EvolutionCoefficients& coef) {
  if (!(w.alpha > 0.0) || !(w.beta > 0.0)) throw InvalidArgument("appell: alpha and beta must be positive");
  EvolutionCoefficients::make(coef.a, coef.b);
  return {w, coef};
}

cplx AppellMap::phase_rate(double t) const {
  if (identity()) return 0.0;
  return (w.alpha - w.beta) / (4.0 * coef.c() * rho(t));
}

AppellMap AppellMap::inverse() const {
  AppellMap m = *this;
  std::swap(m.w.alpha, m.w.beta);
  return m;
}

TrajectorySampler::TrajectorySampler(const Trajectory& traj) : traj_(&traj) {
  if (traj.size() < 6) throw InvalidArgument("TrajectorySampler: need at least 6 samples");
  const auto t = traj.times();
  t0_ = t.front();
  t1_ = t.back();
  dt_ = (t1_ - t0_) / (t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs(t[i] - t[i - 1] - dt_) > 1e-9 * dt_) throw InvalidArgument("TrajectorySampler: nodes are not uniform");
}

Field TrajectorySampler::at(double s) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(t1_));
  if (s < t0_ - tol || s > t1_ + tol) throw InvalidArgument("TrajectorySampler: time outside the trajectory range");
  const auto& st = traj_->states;
  const int n = static_cast<int>(st.size());
  const double pos = (s - t0_) / dt_;
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) < 1e-12) {
    Field f = st[std::clamp(static_cast<int>(nearest), 0, n - 1)];
    f.set_time(s);
    return f;
  }
  const int i0 = std::clamp(static_cast<int>(std::floor(pos)) - 2, 0, n - 6);
  Field out(st.front().grid(), s);
  for (int j = 0; j < 6; ++j) {
    double l = 1.0;
    for (int m = 0; m < 6; ++m)
      if (m != j) l *= (pos - (i0 + m)) / static_cast<double>(j - m);
    out.axpy(l, st[i0 + j]);
  }
  return out;
}

Field rescale_field(const Field& f, double k) {
  if (!(k > 0.0)) throw InvalidArgument("rescale_field: scale must be positive");
  if (k == 1.0) return f;
  const Grid& g = f.grid();
  const int M = g.points_per_axis();
  const auto w = interp_matrix(g, k);
  Field out(g, f.time());
  for (int c = 0; c < g.components(); ++c) {
    auto src = f.component(c);
    auto dst = out.component(c);
    if (g.dim() == 1) {
      for (int m = 0; m < M; ++m) {
        cplx acc = 0.0;
        const double* row = &w[static_cast<std::size_t>(m) * M];
        for (int q = 0; q < M; ++q) acc += row[q] * src[q];
        dst[m] = acc;
      }
    } else {
      std::vector<cplx> tmp(static_cast<std::size_t>(M) * M);
      for (int i = 0; i < M; ++i)
        for (int m = 0; m < M; ++m) {
          cplx acc = 0.0;
          const double* row = &w[static_cast<std::size_t>(m) * M];
          for (int q = 0; q < M; ++q) acc += row[q] * src[static_cast<std::size_t>(i) * M + q];
          tmp[static_cast<std::size_t>(i) * M + m] = acc;
        }
      for (int m1 = 0; m1 < M; ++m1) {
        const double* row = &w[static_cast<std::size_t>(m1) * M];
        for (int m = 0; m < M; ++m) {
          cplx acc = 0.0;
          for (int q = 0; q < M; ++q) acc += row[q] * tmp[static_cast<std::size_t>(q) * M + m];
          dst[static_cast<std::size_t>(m1) * M + m] = acc;
        }
      }
    }
  }
  return out;
}

Field appell_forward(const TrajectorySampler& u, const AppellMap& map, double t) {
  if (t < -1e-12 || t > 1.0 + 1e-12) throw InvalidArgument("appell_forward: t outside [0, 1]");
  const double s = map.time_map(t);
  Field us = u.at(s);
  if (map.identity()) {
    us.set_time(t);
    return us;
  }
  const double k = map.scale(t);
  const Grid& g = us.grid();
  if (k > 1.0) require_tail_resolved(us, WeightProfile::unit(g), "appell_forward");
  Field out = rescale_field(us, k);
  out.set_time(t);
  const cplx rate = map.phase_rate(t);
  const double amp = std::pow(k, 0.5 * g.dim());
  for (std::size_t p = 0; p < g.point_count(); ++p) {
    const cplx m = amp * std::exp(rate * g.radius_sq(p));
    for (int c = 0; c < g.components(); ++c) out(p, c) *= m;
  }
  if (!out.is_zero()) {
    const auto n2 = pointwise_norm_sq(out);
    std::vector<double> logs(n2.size());
    for (std::size_t p = 0; p < n2.size(); ++p) logs[p] = n2[p] > 0.0 ? std::log(n2[p]) : -kInf;
    const auto tr = tail_check(g, logs, kDefaultTailTol);
    if (!tr.resolved)
      throw ScaleOutOfBox("appell_forward: transformed field reaches the box edge at t = " + format_double(t));
  }
  return out;
}

Trajectory appell_trajectory(const Trajectory& u, const AppellMap& map) {
  check_times(u);
  const TrajectorySampler sampler(u);
  Trajectory out;
  for (double t : u.times()) out.states.push_back(appell_forward(sampler, map, t));
  return out;
}

TimePotential appell_potential(const TimePotential& v, const AppellMap& map) {
  if (v.is_zero() || map.identity()) return v;
  TimePotential out = TimePotential::make(v.size(), nullptr, [v, map](const Point& x, double t) {
    const double k = map.scale(t);
    return ComplexMatrix(k * k * v.at({k * x[0], k * x[1]}, map.time_map(t)));
  });
  out.mark_spatially_constant(v.spatially_constant());
  return out;
}

Forcing appell_forcing(const Forcing& f, const AppellMap& map) {
  if (!f) return {};
  return [f, map](double t) {
    const double s = map.time_map(t);
    const double k = map.scale(t);
    Field fs = f(s);
    const Grid& g = fs.grid();
    Field out = rescale_field(fs, k);
    out.set_time(t);
    const cplx rate = map.phase_rate(t);
    const double amp = std::pow(k, 0.5 * g.dim() + 2.0);
    for (std::size_t p = 0; p < g.point_count(); ++p) {
      const cplx m = amp * std::exp(rate * g.radius_sq(p));
      for (int c = 0; c < g.components(); ++c) out(p, c) *= m;
    }
    return out;
  };
}

// ---------------------------------------------------------------- identities

AppellIdentityReport appell_identity_check(const Trajectory& u, const AppellMap& map, double gamma,
                                           std::size_t sample_count, double identity_tol) {
  check_times(u);
  if (sample_count < 2) throw InvalidArgument("appell_identity_check: need at least two sample times");
  const TrajectorySampler sampler(u);
  const Grid& g = u.grid();
  const double aa = map.coef.a, kk2 = map.coef.a * map.coef.a + map.coef.b * map.coef.b;
  const double al = map.w.alpha, be = map.w.beta;
  auto mu = [&](double s) { return al * s + be * (1.0 - s); };

  AppellIdentityReport r;
  r.gamma = gamma;
  r.derived.name = "derived";
  r.mu_squared.name = "mu_squared";
  r.mu_inverse_squared.name = "mu_inverse_squared";
  auto eval = [&](AppellCandidate& cand, const Field& us, double rate, double lhs) {
    if (!cand.resolved) return;
    try {
      const double v = weighted_l2_norm(us, WeightProfile::gaussian(g, rate));
      cand.rhs.push_back(v);
      cand.gap = std::max(cand.gap, rel_gap(lhs, v));
    } catch (const TailNotResolved&) {
      cand.resolved = false;
      cand.gap = kInf;
      cand.rhs.clear();
    }
  };

  for (std::size_t i = 0; i < sample_count; ++i) {
    const double t = static_cast<double>(i) / (sample_count - 1);
    const double s = map.time_map(t);
    const Field ut = appell_forward(sampler, map, t);
    const Field us = sampler.at(s);
    r.times.push_back(t);
    r.s_times.push_back(s);
    r.lhs_unweighted.push_back(l2_norm(ut));
    r.rhs_unweighted.push_back(l2_norm(us));
    r.unweighted_gap = std::max(r.unweighted_gap, rel_gap(r.lhs_unweighted.back(), r.rhs_unweighted.back()));
    const double lw = weighted_l2_norm(ut, WeightProfile::gaussian(g, gamma));
    r.lhs_weighted.push_back(lw);
    const double m = mu(s);
    eval(r.derived, us, gamma * al * be / (m * m) + (al - be) * aa / (4.0 * kk2 * m), lw);
    eval(r.mu_squared, us, m * m, lw);
    eval(r.mu_inverse_squared, us, 1.0 / (m * m), lw);
  }
  const AppellCandidate* best = nullptr;
  for (const auto* c : {&r.mu_squared, &r.mu_inverse_squared})
    if (c->resolved && c->gap <= identity_tol && (!best || c->gap < best->gap)) best = c;
  r.winner = best ? best->name : "none";
  return r;
}

Table AppellIdentityReport::table() const {
  Table t({"t", "s", "lhs_unweighted", "rhs_unweighted", "lhs_weighted", "rhs_derived", "rhs_mu_squared",
           "rhs_mu_inverse_squared"});
  auto at = [](const AppellCandidate& c, std::size_t i) {
    return i < c.rhs.size() ? c.rhs[i] : std::numeric_limits<double>::quiet_NaN();
  };
  for (std::size_t i = 0; i < times.size(); ++i)
    t.add_row({times[i], s_times[i], lhs_unweighted[i], rhs_unweighted[i], lhs_weighted[i], at(derived, i),
               at(mu_squared, i), at(mu_inverse_squared, i)});
  return t;
}

double appell_pde_residual(const Trajectory& u, const AppellMap& map, const MatrixPotential& a,
                           const TimePotential& v) {
  if (!a.is_constant()) throw InvalidArgument("appell_pde_residual: A must be constant");
  const Trajectory ut = appell_trajectory(u, map);
  const TimePotential vt = appell_potential(v, map);
  const auto times = ut.times();
  const cplx c = map.coef.c();
  const ComplexMatrix a0 = a.at(0).cast<cplx>();
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < ut.size(); ++i) {
    const Field& f = ut[i];
    const double k = map.scale(times[i]);
    Field rhs = laplacian(f);
    rhs += apply_time_potential(vt, f, times[i]);
    rhs += apply_time_potential(TimePotential::constant_static(k * k * a0), f, times[i]);
    Field res = (1.0 / (times[i + 1] - times[i - 1])) * (ut[i + 1] - ut[i - 1]);
    res.axpy(-c, rhs);
    const double n = l2_norm(f);
    if (n > 0.0) worst = std::max(worst, l2_norm(res) / n);
  }
  return worst;
}

Trajectory time_reversed(const Trajectory& u) {
  check_times(u);
  Trajectory out;
  const std::size_t n = u.size();
  for (std::size_t i = 0; i < n; ++i) {
    Field f = u[n - 1 - i];
    for (auto& z : f.values()) z = std::conj(z);
    f.set_time(u[i].time());
    out.states.push_back(std::move(f));
  }
  return out;
}

Field appell_via_reversal(const Trajectory& u, const AppellMap& map, double t) {
  if (map.coef.a != 0.0) throw InvalidArgument("appell_via_reversal: time reversal needs a = 0");
  const Trajectory rev = time_reversed(u);
  const TrajectorySampler sampler(rev);
  Field f = appell_forward(sampler, map.inverse(), 1.0 - t);
  for (auto& z : f.values()) z = std::conj(z);
  f.set_time(t);
  return f;
}

}  // namespace hardylab

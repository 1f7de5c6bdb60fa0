#include "hardylab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hardylab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Field times_weight(const Field& u, const std::vector<double>& logw) {
  Field f = u;
  for (int c = 0; c < u.components(); ++c) {
    auto comp = f.component(c);
    for (std::size_t p = 0; p < u.points(); ++p) comp[p] *= std::exp(logw[p]);
  }
  return f;
}

bool uniform_times(const std::vector<double>& t) {
  if (t.size() < 3) return true;
  const double dt = (t.back() - t.front()) / (t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs(t[i] - t[i - 1] - dt) > 1e-9 * std::max(1.0, dt)) return false;
  return true;
}

double log_norm_with(const Field& u, double rate) {
  return log_weighted_l2_norm(u, WeightProfile::gaussian(u.grid(), rate));
}

}  // namespace

WeightSpec WeightSpec::make(double alpha, double beta, double gamma) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
    throw InvalidArgument("alpha and beta must be positive");
  if (!(gamma >= 0.0)) throw InvalidArgument("gamma must be >= 0");
  return {alpha, beta, gamma};
}

double WeightSpec::nu(double s, const EvolutionCoefficients& coef) const {
  const double r = rho(s);
  return gamma * alpha * beta * r * r + (alpha - beta) * coef.a * r / (4.0 * (coef.a * coef.a + coef.b * coef.b));
}

// ---------------------------------------------------------------- convexity

ConvexityTrace q_trace(const Trajectory& traj, double gamma, const SKDecomposition& dec) {
  if (traj.size() == 0) throw InvalidArgument("q_trace: empty trajectory");
  if (dec.gamma() != gamma) throw InvalidArgument("q_trace: decomposition built for a different gamma");
  if (dec.weight().kind != WeightSample::Kind::quadratic) throw InvalidArgument("q_trace: weight must be |x|^2");
  ConvexityTrace tr;
  tr.times = traj.times();
  if (!uniform_times(tr.times)) throw InvalidArgument("q_trace: samples must be uniform in time");
  const Grid& g = traj.grid();
  const auto w = WeightProfile::gaussian(g, gamma);
  std::vector<double> logw(g.point_count());
  for (std::size_t p = 0; p < logw.size(); ++p) logw[p] = gamma * g.radius_sq(p);

  for (const auto& u : traj.states) {
    const double norm = weighted_l2_norm(u, w);
    const double q = norm * norm;
    tr.Q.push_back(q);
    tr.logQ.push_back(2.0 * log_weighted_l2_norm(u, w));
    const Field f = times_weight(u, logw);
    const double d = inner_product(dec.apply_S(f), f).real();
    tr.D.push_back(d);
    tr.Nfreq.push_back(q > 0.0 ? d / q : kNaN);
  }
  const std::size_t n = tr.times.size();
  tr.d2logQ.assign(n, kNaN);
  tr.min_d2logQ = n >= 3 ? std::numeric_limits<double>::infinity() : 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double dt = tr.times[i + 1] - tr.times[i];
    tr.d2logQ[i] = (tr.logQ[i + 1] - 2.0 * tr.logQ[i] + tr.logQ[i - 1]) / (dt * dt);
    if (std::isfinite(tr.d2logQ[i])) tr.min_d2logQ = std::min(tr.min_d2logQ, tr.d2logQ[i]);
  }
  if (!std::isfinite(tr.min_d2logQ)) tr.min_d2logQ = 0.0;
  for (double l : tr.logQ)
    if (std::isfinite(l)) tr.max_abs_logQ = std::max(tr.max_abs_logQ, std::abs(l));
  const double t0 = tr.times.front(), t1 = tr.times.back();
  tr.convexity_slack = 0.0;
  if (n >= 2 && std::isfinite(tr.logQ.front()) && std::isfinite(tr.logQ.back())) {
    tr.convexity_slack = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double s = (tr.times[i] - t0) / (t1 - t0);
      tr.convexity_slack =
          std::max(tr.convexity_slack, tr.logQ[i] - (1.0 - s) * tr.logQ.front() - s * tr.logQ.back());
    }
  }
  return tr;
}

Table ConvexityTrace::table() const {
  Table t({"t", "Q", "D", "N", "d2logQ"});
  for (std::size_t i = 0; i < times.size(); ++i) t.add_row({times[i], Q[i], D[i], Nfreq[i], d2logQ[i]});
  return t;
}

// ---------------------------------------------------------------- interpolation bound

TheoremBoundReport interpolation_bound_check(const Trajectory& traj, const WeightSpec& w, const TimePotential& v,
                                             double bound_tol) {
  if (traj.size() < 2) throw InvalidArgument("interpolation_bound_check: need at least two samples");
  TheoremBoundReport r;
  r.bound_tol = bound_tol;
  r.times = traj.times();
  if (std::abs(r.times.front()) > 1e-12 || std::abs(r.times.back() - 1.0) > 1e-12)
    throw InvalidArgument("interpolation_bound_check: trajectory must span [0, 1]");
  const Grid& g = traj.grid();

  const auto bounds = v.bounds(g, r.times);
  r.m1 = bounds.m1;
  r.b_v2 = bounds.b_v2;
  // M2 = e^{2 B(V2)} sup_t sup_x e^{|x|^2 / mu(t)^2} |V2(x,t)|, kept in log form
  double log_sup = -std::numeric_limits<double>::infinity();
  if (v.has_dynamic()) {
    for (double t : r.times) {
      const double mu = w.mu(t);
      for (std::size_t p = 0; p < g.point_count(); ++p) {
        const double nv = operator_norm(v.dynamic_at(g.position(p), t));
        if (nv > 0.0) log_sup = std::max(log_sup, g.radius_sq(p) / (mu * mu) + std::log(nv));
      }
    }
  }
  r.m2 = std::isfinite(log_sup) ? std::exp(2.0 * r.b_v2 + log_sup) : 0.0;
  r.c_total = r.m1 + r.m2 + r.m1 * r.m1 + r.m2 * r.m2;

  const bool zero = std::all_of(traj.states.begin(), traj.states.end(), [](const Field& f) { return f.is_zero(); });
  const std::size_t n = r.times.size();
  if (zero) {
    r.degenerate = true;
    r.lhs.assign(n, 0.0);
    r.rhs.assign(n, 0.0);
    r.margin.assign(n, 0.0);
    r.standard_lhs = r.standard_rhs = r.standard_margin = r.rescaled_rhs = r.rescaled_margin = r.margin;
    return r;
  }

  const double ln0 = log_norm_with(traj.states.front(), 1.0 / (w.beta * w.beta));
  const double ln1 = log_norm_with(traj.states.back(), 1.0 / (w.alpha * w.alpha));
  if (!std::isfinite(ln0) || !std::isfinite(ln1))
    throw InvalidArgument("interpolation_bound_check: an endpoint weighted norm vanishes");

  std::vector<double> raw(n), raw_rescaled(n), lnt(n);
  double worst = -std::numeric_limits<double>::infinity(), worst_rescaled = worst;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = r.times[i];
    const double mu = w.mu(t);
    lnt[i] = log_norm_with(traj.states[i], 1.0 / (mu * mu));
    const double lhs = lnt[i] / mu;
    const double rhs0 = w.beta * (1.0 - t) * mu * ln0 + w.alpha * t * mu * ln1;
    r.lhs.push_back(lhs);
    raw[i] = rhs0;
    worst = std::max(worst, lhs - rhs0);
    const double rr = (w.beta * (1.0 - t) / mu) * ln0 + (w.alpha * t / mu) * ln1;
    raw_rescaled[i] = rr;
    worst_rescaled = std::max(worst_rescaled, lnt[i] - rr);
  }
  if (r.c_total > 0.0) {
    r.n_hat = std::max(0.0, worst / r.c_total);
    r.n_hat_rescaled = std::max(0.0, worst_rescaled / r.c_total);
  }
  for (std::size_t i = 0; i < n; ++i) {
    r.rhs.push_back(raw[i] + r.n_hat * r.c_total);
    r.margin.push_back(r.rhs[i] - r.lhs[i]);
    r.rescaled_rhs.push_back(raw_rescaled[i] + r.n_hat_rescaled * r.c_total);
    r.rescaled_margin.push_back(r.rescaled_rhs[i] - lnt[i]);
  }

  // fixed-weight log-convexity with the configured gamma
  const double q0 = log_norm_with(traj.states.front(), w.gamma), q1 = log_norm_with(traj.states.back(), w.gamma);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = r.times[i];
    const double q = log_norm_with(traj.states[i], w.gamma);
    r.standard_lhs.push_back(2.0 * q);
    r.standard_rhs.push_back(2.0 * ((1.0 - t) * q0 + t * q1));
    r.standard_margin.push_back(r.standard_rhs[i] - r.standard_lhs[i]);
  }

  // gradient estimate by trapezoid in time
  double log_acc = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(n, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    const double t = r.times[i];
    if (t <= 0.0 || t >= 1.0) continue;
    const double mu = w.mu(t);
    const auto wp = WeightProfile::gaussian(g, 1.0 / (mu * mu));
    double ssum = -std::numeric_limits<double>::infinity();
    for (const auto& d : gradient(traj.states[i])) {
      const double l = 2.0 * log_weighted_l2_norm(d, wp);
      ssum = std::max(ssum, l) + std::log1p(std::exp(std::min(ssum, l) - std::max(ssum, l)));
    }
    const double dt_lo = i > 0 ? r.times[i] - r.times[i - 1] : 0.0;
    const double dt_hi = i + 1 < n ? r.times[i + 1] - r.times[i] : 0.0;
    terms[i] = ssum + std::log(t * (1.0 - t) * 0.5 * (dt_lo + dt_hi));
  }
  for (double l : terms)
    if (std::isfinite(l)) log_acc = std::isfinite(log_acc) ? std::max(log_acc, l) + std::log1p(std::exp(-std::abs(log_acc - l))) : l;
  r.gradient_lhs = 0.5 * log_acc;

  auto min_of = [](const std::vector<double>& m) { return *std::min_element(m.begin(), m.end()); };
  r.pass = min_of(r.margin) >= -bound_tol;
  r.standard_pass = min_of(r.standard_margin) >= -bound_tol;
  r.rescaled_pass = min_of(r.rescaled_margin) >= -bound_tol;
  return r;
}

Table TheoremBoundReport::table() const {
  Table t({"t", "lhs", "rhs", "margin", "standard_lhs", "standard_rhs", "standard_margin", "rescaled_rhs",
           "rescaled_margin"});
  for (std::size_t i = 0; i < times.size(); ++i)
    t.add_row({times[i], lhs[i], rhs[i], margin[i], standard_lhs[i], standard_rhs[i], standard_margin[i],
               rescaled_rhs[i], rescaled_margin[i]});
  return t;
}

// ---------------------------------------------------------------- decay estimate

double decay_weight_rate(double gamma, const EvolutionCoefficients& coef, double t) {
  return gamma * coef.a / (coef.a + 4.0 * gamma * (coef.a * coef.a + coef.b * coef.b) * t);
}

DecayReport decay_estimate_check(const Trajectory& traj, double gamma, const EvolutionCoefficients& coef,
                                 const Forcing& forcing, double m_t, double tol) {
  if (!(coef.a > 0.0)) throw InvalidArgument("decay_estimate_check needs a > 0");
  if (traj.size() < 2) throw InvalidArgument("decay_estimate_check: need at least two samples");
  DecayReport r;
  const auto times = traj.times();
  const Field& u0 = traj.states.front();
  const Field& uT = traj.states.back();
  const double T = times.back();
  const double w0 = weighted_l2_norm(u0, WeightProfile::gaussian(u0.grid(), gamma));
  const double wT = weighted_l2_norm(uT, WeightProfile::gaussian(uT.grid(), decay_weight_rate(gamma, coef, T)));

  double f_int = 0.0;
  if (forcing) {
    std::vector<double> vals;
    for (double t : times) {
      const Field F = forcing(t);
      vals.push_back(weighted_l2_norm(F, WeightProfile::gaussian(F.grid(), decay_weight_rate(gamma, coef, t))));
    }
    for (std::size_t i = 1; i < times.size(); ++i) f_int += 0.5 * (times[i] - times[i - 1]) * (vals[i] + vals[i - 1]);
  }
  r.forcing_term = coef.kappa() * f_int;
  r.lhs_printed = std::exp(m_t) * wT;
  r.rhs_printed = m_t * w0 + r.forcing_term;
  r.margin_printed = r.rhs_printed - r.lhs_printed;
  r.lhs = wT;
  r.rhs = std::exp(m_t) * (w0 + r.forcing_term);
  r.margin = r.rhs - r.lhs;
  r.contraction_margin = l2_norm(u0) - l2_norm(uT);
  r.pass = r.margin >= -tol * std::max(1.0, r.rhs);
  return r;
}

// ---------------------------------------------------------------- Hardy envelopes

namespace {

// sqrt(max scale * |z|^2 / log(C / |f|)) over samples inside the window
double envelope_fit(const std::vector<double>& mag, const std::vector<double>& z2, double scale, double lo, double hi,
                    std::size_t& used) {
  const double c = *std::max_element(mag.begin(), mag.end());
  if (!(c > 0.0)) throw InvalidArgument("hardy_envelope: field is zero");
  double best = 0.0;
  used = 0;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    const double ratio = mag[i] / c;
    if (ratio < lo || ratio > hi) continue;
    best = std::max(best, scale * z2[i] / std::log(c / mag[i]));
    ++used;
  }
  if (used < 8) throw InvalidArgument("hardy_envelope: decay is not resolved (fewer than 8 samples in the fit window)");
  return std::sqrt(best);
}

}  // namespace

double spatial_envelope(const Field& f, double lo, double hi) {
  const auto n2 = pointwise_norm_sq(f);
  std::vector<double> mag(n2.size()), r2(n2.size());
  for (std::size_t p = 0; p < n2.size(); ++p) {
    mag[p] = std::sqrt(n2[p]);
    r2[p] = f.grid().radius_sq(p);
  }
  std::size_t used = 0;
  return envelope_fit(mag, r2, 1.0, lo, hi, used);
}

HardyEnvelope hardy_envelope(const Field& f, double lo, double hi) {
  if (f.is_zero()) throw InvalidArgument("hardy_envelope: field is zero");
  require_tail_resolved(f, WeightProfile::unit(f.grid()), "hardy_envelope");
  HardyEnvelope h;
  const Grid& g = f.grid();
  const auto n2 = pointwise_norm_sq(f);
  std::vector<double> mag(n2.size()), r2(n2.size());
  for (std::size_t p = 0; p < n2.size(); ++p) {
    mag[p] = std::sqrt(n2[p]);
    r2[p] = g.radius_sq(p);
  }
  h.beta_hat = envelope_fit(mag, r2, 1.0, lo, hi, h.spatial_points);

  const auto s = forward_transform(f);
  std::vector<double> smag(g.point_count(), 0.0), xi2(g.point_count());
  for (std::size_t k = 0; k < g.point_count(); ++k) {
    double acc = 0.0;
    for (int c = 0; c < g.components(); ++c) acc += std::norm(s(k, c));
    smag[k] = std::sqrt(acc);
    xi2[k] = g.frequency_sq(k);
  }
  h.alpha_hat = envelope_fit(smag, xi2, 4.0, lo, hi, h.spectral_points);
  h.product = h.alpha_hat * h.beta_hat;
  return h;
}

Field sharp_gaussian_initial(const WeightSpec& w, double T, const Grid& grid) {
  if (!(T > 0.0)) throw InvalidArgument("sharp_gaussian_initial: T must be positive");
  if (std::abs(w.alpha * w.beta - 4.0 * T) > 1e-12 * std::max(1.0, 4.0 * T))
    throw InvalidArgument("sharp_gaussian_initial: parameters are off the threshold alpha beta = 4T");
  const cplx c(1.0 / (w.beta * w.beta), 1.0 / (4.0 * T));
  return Field::sample(grid, [&](const Point& x, int) { return std::exp(-c * (x[0] * x[0] + x[1] * x[1])); });
}

}  // namespace hardylab

#include "hardylab/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace hardylab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double bump(double s) { return s * s < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0; }

void check_test_function(const TestFunction& v) {
  if (v.size() < 5 || v.times.size() != v.size()) throw InvalidArgument("test function needs at least 5 time samples");
  const double dt = 1.0 / (v.size() - 1);
  for (std::size_t j = 0; j < v.size(); ++j)
    if (std::abs(v.times[j] - j * dt) > 1e-12) throw InvalidArgument("test function times must be uniform on [0, 1]");
}

// e^{phi - shift} v
Field weighted(const Field& v, const std::vector<double>& phi, double shift) {
  Field f = v;
  for (int c = 0; c < v.components(); ++c) {
    auto comp = f.component(c);
    for (std::size_t p = 0; p < v.points(); ++p) comp[p] *= std::exp(phi[p] - shift);
  }
  return f;
}

// largest phi over the points where v is nonzero at some time
double global_shift(const TestFunction& v, const CarlemanParams& par, Regime regime) {
  double m = -std::numeric_limits<double>::infinity();
  const Grid& g = v.grid();
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (v.values[j].is_zero()) continue;
    const auto n2 = pointwise_norm_sq(v.values[j]);
    for (std::size_t p = 0; p < n2.size(); ++p)
      if (n2[p] > 0.0) m = std::max(m, par.log_weight(g.position(p), v.times[j], regime));
  }
  return std::isfinite(m) ? m : 0.0;
}

double sq(double x) { return x * x; }

CarlemanReport carleman_check(const TestFunction& v, const MatrixPotential& a, const CarlemanParams& par,
                              Regime regime, double tol) {
  check_test_function(v);
  if (!(par.r > 0.0)) throw InvalidArgument("carleman check needs r > 0");
  if (a.size() != v.grid().components()) throw InvalidArgument("A does not match the test function");
  CarlemanReport rep;
  rep.regime = regime_name(regime);
  rep.tol = tol;
  rep.times = v.times;
  const std::size_t n = v.size();
  rep.lhs_density.assign(n, 0.0);
  rep.rhs_density.assign(n, 0.0);
  if (std::all_of(v.values.begin(), v.values.end(), [](const Field& f) { return f.is_zero(); })) {
    rep.degenerate = true;
    return rep;
  }
  const Grid& g = v.grid();
  const double dt = v.times[1] - v.times[0];
  const cplx c = regime == Regime::parabolic ? cplx(1.0) : cplx(0.0, 1.0);
  rep.log_scale = global_shift(v, par, regime);

  double lhs2 = 0.0, rhs2 = 0.0, d1 = 0.0, dgap = 0.0;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const WeightSample w = par.weight(g, v.times[j], regime);
    const Field f = weighted(v.values[j], w.phi, rep.log_scale);
    const Field dv = (1.0 / (2.0 * dt)) * (v.values[j + 1] - v.values[j - 1]);
    // e^{phi} (Lap + A) v through f, so FFT roundoff is not multiplied by the weight
    Field op = laplacian(f);
    const auto gf = gradient(f);
    for (int comp = 0; comp < g.components(); ++comp) {
      auto oc = op.component(comp);
      auto fc = f.component(comp);
      for (std::size_t p = 0; p < g.point_count(); ++p) {
        double g2 = 0.0;
        cplx adv = 0.0;
        for (int k = 0; k < g.dim(); ++k) {
          g2 += sq(w.grad[k][p]);
          adv += w.grad[k][p] * gf[k](p, comp);
        }
        oc[p] += -2.0 * adv + (g2 - w.lap[p]) * fc[p];
      }
    }
    op += apply_potential(a, f);
    Field lv = weighted(dv, w.phi, rep.log_scale);
    lv.axpy(-c, op);
    const double l = sq(l2_norm(f));
    const double r = sq(l2_norm(lv));
    rep.lhs_density[j] = l;
    rep.rhs_density[j] = r;
    lhs2 += dt * l;
    rhs2 += dt * r;
    if (j >= 2 && j + 2 < n) {
      const Field d2 = (1.0 / (4.0 * dt)) * (v.values[j + 2] - v.values[j - 2]);
      d1 += sq(l2_norm(weighted(dv, w.phi, rep.log_scale)));
      dgap += sq(l2_norm(weighted(dv - d2, w.phi, rep.log_scale)));
    }
  }
  rep.dt_gap = d1 > 0.0 ? std::sqrt(dgap / d1) : 0.0;
  if (rep.dt_gap > 0.1)
    throw ConvergenceFailure("carleman check: time lattice too coarse (difference stencils disagree by " +
                             format_double(rep.dt_gap) + ")");
  rep.lhs = par.r * std::sqrt(par.eps / (8.0 * par.mu)) * std::sqrt(lhs2);
  rep.rhs = std::sqrt(rhs2);
  rep.ratio = rep.lhs > 0.0 ? rep.rhs / rep.lhs : std::numeric_limits<double>::infinity();
  rep.pass = rep.ratio >= 1.0 - tol;
  return rep;
}

}  // namespace

CarlemanParams CarlemanParams::make(double mu, double r, double eps) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidArgument("carleman: mu must be positive");
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("carleman: r must be >= 0");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("carleman: eps must be positive");
  return {mu, r, eps};
}

double CarlemanParams::kappa(const Point& x, double t) const {
  const double y1 = x[0] + drift(t);
  return mu * (y1 * y1 + x[1] * x[1]) - r * r * t * (1.0 - t) / (8.0 * mu);
}

double CarlemanParams::log_weight(const Point& x, double t, Regime regime) const {
  double phi = kappa(x, t) - sigma(t);
  if (regime == Regime::parabolic) phi += chi(t);
  return phi;
}

WeightSample CarlemanParams::weight(const Grid& grid, double t, Regime regime) const {
  WeightSample w;
  w.kind = WeightSample::Kind::general;
  w.time = t;
  const std::size_t P = grid.point_count();
  const int n = grid.dim();
  const double c1 = r * (1.0 - 2.0 * t);
  const double sig_t = (1.0 + eps) * (1.0 - 2.0 * t) / (16.0 * mu);
  const double sig_tt = -(1.0 + eps) / (8.0 * mu);
  const bool par = regime == Regime::parabolic;
  const double chi_t = par ? r * r * (1.0 - 6.0 * t + 6.0 * t * t) / 6.0 : 0.0;
  const double chi_tt = par ? r * r * (2.0 * t - 1.0) : 0.0;
  w.phi.resize(P);
  w.lap.assign(P, 2.0 * mu * n);
  w.phi_t.resize(P);
  w.lap_t.assign(P, 0.0);
  w.phi_tt.resize(P);
  w.grad.assign(n, std::vector<double>(P));
  w.grad_t.assign(n, std::vector<double>(P, 0.0));
  for (std::size_t p = 0; p < P; ++p) {
    const Point x = grid.position(p);
    const double y1 = x[0] + drift(t);
    w.phi[p] = log_weight(x, t, regime);
    w.grad[0][p] = 2.0 * mu * y1;
    if (n > 1) w.grad[1][p] = 2.0 * mu * x[1];
    w.grad_t[0][p] = 2.0 * mu * c1;
    w.phi_t[p] = 2.0 * mu * y1 * c1 - r * r * (1.0 - 2.0 * t) / (8.0 * mu) - sig_t + chi_t;
    w.phi_tt[p] = 2.0 * mu * c1 * c1 - 4.0 * mu * r * y1 + r * r / (4.0 * mu) - sig_tt + chi_tt;
  }
  return w;
}

TestFunction TestFunction::scaled(cplx c) const {
  TestFunction out = *this;
  for (auto& f : out.values) f *= c;
  return out;
}

TestFunction make_bump_test_function(const Grid& grid, std::size_t time_samples, std::uint64_t seed,
                                     const BumpOptions& opt) {
  if (time_samples < 5) throw InvalidArgument("bump test function needs at least 5 time samples");
  if (!(0.0 < opt.t_lo && opt.t_lo < opt.t_hi && opt.t_hi < 1.0)) throw InvalidArgument("bad time margins");
  if (!(opt.support > 0.0 && opt.support <= 0.9)) throw InvalidArgument("spatial support must be within 0.9 L");
  if (opt.modes < 0) throw InvalidArgument("modes must be >= 0");
  const int n = grid.dim(), N = grid.components();
  const double L = grid.half_width(), R = opt.support * L;

  struct Mode {
    int k1, k2, comp;
    cplx al, be, ga;
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto draw = [&] { return cplx(u(rng), u(rng)); };
  std::vector<Mode> modes;
  const int K = opt.modes;
  for (int comp = 0; comp < N; ++comp)
    for (int k1 = -K; k1 <= K; ++k1)
      for (int k2 = (n > 1 ? -K : 0); k2 <= (n > 1 ? K : 0); ++k2) {
        Mode m{k1, k2, comp, draw(), draw(), draw()};
        modes.push_back(m);
      }

  std::vector<double> envelope(grid.point_count());
  for (std::size_t p = 0; p < envelope.size(); ++p) {
    const double r2 = grid.radius_sq(p);
    envelope[p] = bump(std::sqrt(r2) / R) * std::exp(-opt.taper * r2 / (L * L));
  }
  const double w0 = std::numbers::pi / L;

  TestFunction v;
  v.t_lo = opt.t_lo;
  v.t_hi = opt.t_hi;
  const double mid = 0.5 * (opt.t_lo + opt.t_hi), half = 0.5 * (opt.t_hi - opt.t_lo);
  for (std::size_t j = 0; j < time_samples; ++j) {
    const double t = static_cast<double>(j) / (time_samples - 1);
    v.times.push_back(t);
    Field f(grid, t);
    const double tb = bump((t - mid) / half);
    if (tb > 0.0) {
      const double ct = std::cos(kTwoPi * t), st = std::sin(kTwoPi * t);
      for (const auto& m : modes) {
        const cplx coef = tb * (m.al + m.be * ct + m.ga * st);
        auto comp = f.component(m.comp);
        for (std::size_t p = 0; p < envelope.size(); ++p) {
          if (envelope[p] == 0.0) continue;
          const Point x = grid.position(p);
          comp[p] += coef * envelope[p] * std::exp(cplx(0.0, w0 * (m.k1 * x[0] + m.k2 * x[1])));
        }
      }
    }
    v.values.push_back(std::move(f));
  }
  return v;
}

double spectral_tail(const TestFunction& v) {
  double worst = 0.0;
  const Grid& g = v.grid();
  const int M = g.points_per_axis();
  for (const auto& f : v.values) {
    if (f.is_zero()) continue;
    const auto s = forward_transform(f);
    double top = 0.0, ring = 0.0;
    for (std::size_t k = 0; k < g.point_count(); ++k) {
      bool on_ring = false;
      for (int ax = 0; ax < g.dim(); ++ax) on_ring = on_ring || g.axis_index(k, ax) == M / 2;
      for (int c = 0; c < g.components(); ++c) {
        const double m = std::abs(s(k, c));
        top = std::max(top, m);
        if (on_ring) ring = std::max(ring, m);
      }
    }
    worst = std::max(worst, ring / top);
  }
  return worst;
}

CarlemanReport carleman_schrodinger_check(const TestFunction& v, const MatrixPotential& a, const CarlemanParams& p,
                                          double tol) {
  return carleman_check(v, a, p, Regime::schrodinger, tol);
}

CarlemanReport carleman_parabolic_check(const TestFunction& v, const MatrixPotential& a, const CarlemanParams& p,
                                        double tol) {
  return carleman_check(v, a, p, Regime::parabolic, tol);
}

Table CarlemanReport::table() const {
  Table t({"t", "lhs_density", "rhs_density"});
  for (std::size_t i = 0; i < times.size(); ++i) t.add_row({times[i], lhs_density[i], rhs_density[i]});
  return t;
}

// ---------------------------------------------------------------- commutator

CommutatorBoundReport commutator_lower_bound(const TestFunction& v, const MatrixPotential& a, const CarlemanParams& par,
                                             Regime regime, double margin_tol) {
  check_test_function(v);
  if (regime == Regime::mixed) throw InvalidArgument("commutator_lower_bound: regime must be schrodinger or parabolic");
  if (!a.is_constant()) throw InvalidArgument("commutator_lower_bound: A must be constant");
  const Grid& g = v.grid();
  const bool schr = regime == Regime::schrodinger;
  const double mu = par.mu, r = par.r;

  CommutatorBoundReport rep;
  rep.regime = regime_name(regime);
  rep.term_names = schr ? std::vector<std::string>{"square_moment", "square_transverse", "square_axial", "constant"}
                        : std::vector<std::string>{"square_moment", "square_gradient", "constant"};
  rep.terms.assign(rep.term_names.size(), {});
  rep.log_scale = global_shift(v, par, regime);
  const TimePotential v0 = TimePotential::zero(g.components());

  double agg_scale = 0.0, worst_gap = 0.0;
  std::vector<double> agg_abs;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double t = v.times[j];
    const WeightSample w = par.weight(g, t, regime);
    const Field f = weighted(v.values[j], w.phi, rep.log_scale);
    // spectral gradient of f, same discretisation as the nested form
    const auto gf = gradient(f);
    const double c1 = schr ? -r / (16.0 * mu * mu) : (4.0 * mu * (1.0 - 2.0 * t) - 1.0) * r / (16.0 * mu * mu);
    std::vector<double> moment(g.point_count());
    for (std::size_t p = 0; p < moment.size(); ++p) {
      const Point x = g.position(p);
      moment[p] = sq(x[0] + par.drift(t) + c1) + (g.dim() > 1 ? sq(x[1]) : 0.0);
    }
    const auto n2 = pointwise_norm_sq(f);
    double mom = 0.0;
    for (std::size_t p = 0; p < n2.size(); ++p) mom += moment[p] * n2[p];
    mom *= g.cell_volume();
    const double fn2 = sq(l2_norm(f));

    std::vector<double> vals;
    vals.push_back(32.0 * mu * mu * mu * mom);
    if (schr) {
      double trans = 0.0;
      for (int k = 1; k < g.dim(); ++k) trans += sq(l2_norm(gf[k]));
      vals.push_back(8.0 * mu * trans);
      Field ax = cplx(0.0, 1.0) * gf[0];
      ax.axpy(-r * (0.5 - t), f);
      vals.push_back(8.0 * mu * sq(l2_norm(ax)));
    } else {
      double all = 0.0;
      for (const auto& d : gf) all += sq(l2_norm(d));
      vals.push_back(8.0 * mu * all);
    }
    vals.push_back(par.constant_term() * fn2);
    double agg = 0.0;
    for (std::size_t k = 0; k < vals.size(); ++k) {
      rep.terms[k].push_back(vals[k]);
      agg += vals[k];
    }

    double nested = 0.0;
    if (fn2 > 0.0) {
      const SKDecomposition dec(a, v0, schr ? 0.0 : 1.0, schr ? 1.0 : 0.0, 1.0, w);
      Field q = dec.apply_St(f);
      q += dec.apply_S(dec.apply_K(f));
      q -= dec.apply_K(dec.apply_S(f));
      nested = inner_product(q, f).real();
    }
    rep.times.push_back(t);
    rep.aggregate.push_back(agg);
    rep.nested.push_back(nested);
    rep.bound.push_back(par.lower_bound_rate() * fn2);
    agg_abs.push_back(std::abs(agg));
    agg_scale = std::max(agg_scale, std::abs(agg));
    worst_gap = std::max(worst_gap, std::abs(agg - nested));
  }

  rep.min_margin = std::numeric_limits<double>::infinity();
  rep.min_square = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rep.times.size(); ++i) {
    const double s = agg_abs[i];
    const double m = s > 0.0 ? (rep.aggregate[i] - rep.bound[i]) / s : 0.0;
    rep.margin.push_back(m);
    if (s <= 0.0) continue;  // v vanishes at this time
    rep.min_margin = std::min(rep.min_margin, m);
    for (std::size_t k = 0; k + 1 < rep.terms.size(); ++k) rep.min_square = std::min(rep.min_square, rep.terms[k][i] / s);
  }
  if (!std::isfinite(rep.min_margin)) rep.min_margin = rep.min_square = 0.0;
  rep.nested_gap = agg_scale > 0.0 ? worst_gap / agg_scale : 0.0;
  rep.squares_nonnegative = rep.min_square >= -1e-12;
  rep.pass = rep.squares_nonnegative && rep.min_margin >= -margin_tol;
  return rep;
}

Table CommutatorBoundReport::table() const {
  std::vector<std::string> cols{"t"};
  for (const auto& n : term_names) cols.push_back(n);
  for (const char* c : {"aggregate", "nested", "bound", "margin"}) cols.emplace_back(c);
  Table tab(cols);
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::vector<double> row{times[i]};
    for (const auto& col : terms) row.push_back(col[i]);
    row.push_back(aggregate[i]);
    row.push_back(nested[i]);
    row.push_back(bound[i]);
    row.push_back(margin[i]);
    tab.add_row(std::move(row));
  }
  return tab;
}

}  // namespace hardylab

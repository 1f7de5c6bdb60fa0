#include <algorithm>
#include <numbers>

#include "hardylab/parallel.hpp"
#include "scenario_util.hpp"

namespace hardylab {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

InitialConfig family(const std::string& name, std::map<std::string, double> params = {}, int component = 0) {
  InitialConfig ic;
  ic.family = name;
  ic.params = std::move(params);
  ic.component = component;
  return ic;
}

ScenarioConfig base_1d(const std::string& name, int points, double L) {
  ScenarioConfig c;
  c.name = name;
  c.output = "out/" + name;
  c.grid = {1, points, L, 1};
  return c;
}

// composite Simpson
template <class F>
double simpson(F&& f, double lo, double hi, int n) {
  if (n % 2) ++n;
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"free-gaussian-sharp", "zero-data", "system-n2", "heat-box", "heat-gaussian", "nonlinear-pair",
          "carleman-probes"};
}

ScenarioConfig builtin_scenario(const std::string& name) {
  if (name == "free-gaussian-sharp") {
    // beta = 2, T = 1, alpha = 4T / beta
    ScenarioConfig c = base_1d(name, 512, 16.0);
    c.evolution = {0.0, 1.0, 1.0, 64, "exact_multiplier"};
    c.alpha = 2.0;
    c.beta = 2.0;
    c.gamma = 0.05;
    c.initial = family("sharp_gaussian");
    c.diagnostics.hardy = true;
    c.diagnostics.convexity = true;
    c.diagnostics.theorem1 = true;
    return c;
  }
  if (name == "zero-data") {
    ScenarioConfig c = base_1d(name, 256, 16.0);
    c.evolution = {0.0, 1.0, 1.0, 32, "auto"};
    c.gamma = 0.05;
    c.initial = family("zero");
    c.diagnostics = {true, true, true, true, false, true, false};
    return c;
  }
  if (name == "system-n2") {
    ScenarioConfig c = base_1d(name, 256, 16.0);
    c.grid.components = 2;
    c.evolution = {0.0, 1.0, 1.0, 200, "strang"};
    c.potential.A = {{0.0, 1.0}, {1.0, 0.0}};
    c.initial = family("gaussian", {{"c", 1.0}}, 0);
    return c;
  }
  if (name == "heat-box" || name == "heat-gaussian") {
    ScenarioConfig c = base_1d(name, 512, 16.0);
    c.evolution = {1.0, 0.0, 1.0, 16, "exact_multiplier"};
    c.initial = name == "heat-box" ? family("box", {{"width", 1.0}}) : family("gaussian", {{"c", 0.25}});
    return c;
  }
  if (name == "nonlinear-pair") {
    ScenarioConfig c = base_1d(name, 256, 16.0);
    c.evolution = {0.0, 1.0, 1.0, 256, "strang"};
    c.alpha = 8.0;
    c.beta = 2.0;
    c.initial = family("gaussian", {{"c", 1.0}});
    c.nonlinearity = NonlinearityConfig{1.0, 1};
    return c;
  }
  if (name == "carleman-probes") {
    ScenarioConfig c;
    c.name = name;
    c.output = "out/" + name;
    c.grid = {2, 32, 8.0, 1};
    c.evolution = {0.0, 1.0, 1.0, 4, "exact_multiplier"};
    c.initial = family("gaussian", {{"c", 1.0}});
    c.diagnostics.carleman = true;
    c.carleman = {1.0, 2.0, 1.0, 4, 61, 64, 4.0};
    return c;
  }
  throw ConfigError("unknown built-in scenario '" + name + "'");
}

// ---------------------------------------------------------------- uniqueness frontier

Table FrontierReport::table() const {
  Table t({"family", "alpha", "beta", "admissible", "log_norm0", "log_norm1", "finite0", "finite1", "solution_norm",
           "candidate"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    // family index in order of first appearance
    double fam = 0.0;
    for (std::size_t k = 0, seen = 0; k < i; ++k)
      if (k == 0 || rows[k].family != rows[k - 1].family) {
        if (rows[k].family == r.family) break;
        fam = static_cast<double>(++seen);
      }
    t.add_row({fam, r.alpha, r.beta, double(r.admissible), r.log_norm0, r.log_norm1, double(r.finite0),
               double(r.finite1), r.solution_norm, double(r.candidate)});
  }
  return t;
}

FrontierReport theorem1_falsification_sweep(const ScenarioConfig& base, const std::vector<double>& alphas,
                                            const std::vector<double>& betas,
                                            const std::vector<InitialConfig>& families, double falsification_tol) {
  if (base.evolution.t_final != 1.0) throw ConfigError("evolution.t_final: the frontier sweep needs t_final = 1");
  FrontierReport rep;
  rep.falsification_tol = falsification_tol;

  struct FamilyRun {
    Trajectory traj;
    double sol = 0.0;
    bool dilation = true, im = true;
  };
  std::vector<FamilyRun> runs(families.size());
  parallel_for(families.size(), worker_count(), [&](std::size_t i) {
    ScenarioConfig c = base;
    c.initial = families[i];
    const ScenarioSetup s = build_setup(c);
    FamilyRun& r = runs[i];
    r.traj = detail::run_evolution(s);
    for (const auto& f : r.traj.states) r.sol = std::max(r.sol, l2_norm(f));
    if (!s.u0.is_zero()) {
      std::vector<Field> probes{r.traj.states.front(), r.traj.states[r.traj.size() / 2], r.traj.states.back()};
      r.dilation = check_dilation_positivity(s.A, probes).pass;
      r.im = check_im_positivity(s.A, s.V, probes, default_time_samples(9)).holds;
    }
  });

  for (std::size_t i = 0; i < families.size(); ++i) {
    const FamilyRun& r = runs[i];
    rep.hypotheses_hold = rep.hypotheses_hold && r.dilation && r.im;
    for (double a : alphas)
      for (double b : betas) {
        FrontierRow row;
        row.family = families[i].family;
        row.alpha = a;
        row.beta = b;
        row.admissible = a * b < 2.0;
        const auto e0 = detail::endpoint_norm(r.traj.states.front(), 1.0 / (b * b));
        const auto e1 = detail::endpoint_norm(r.traj.states.back(), 1.0 / (a * a));
        row.log_norm0 = e0.log_norm;
        row.log_norm1 = e1.log_norm;
        row.finite0 = e0.finite;
        row.finite1 = e1.finite;
        row.solution_norm = r.sol;
        row.candidate = row.admissible && row.finite0 && row.finite1 && r.sol > falsification_tol;
        rep.candidates += row.candidate;
        rep.rows.push_back(row);
      }
  }

  // sharp datum: beta = 2, T = 1, alpha = 4T / beta; endpoint norms with 25% slack on a box where
  // the weighted tail is resolvable in double precision
  const double T = 1.0, beta = 2.0, alpha = 4.0 * T / beta, slack = 0.25;
  rep.sharp_alpha = alpha;
  rep.sharp_beta = beta;
  const Grid g = Grid::make(1, 512, 12.0, 1);
  const Field u0 = sharp_gaussian_initial(WeightSpec::make(alpha, beta), T, g);
  const Field u1 = free_propagate(u0, MatrixPotential::zero(g), EvolutionCoefficients::make(0.0, 1.0), T);
  rep.sharp_product = spatial_envelope(u0) * spatial_envelope(u1);
  rep.sharp_norm = l2_norm(u1);
  const auto s0 = detail::endpoint_norm(u0, 1.0 / std::pow(beta * (1.0 + slack), 2));
  const auto s1 = detail::endpoint_norm(u1, 1.0 / std::pow(alpha * (1.0 + slack), 2));
  rep.sharp_finite = s0.finite && s1.finite;
  rep.sharp_survives = rep.sharp_finite && rep.sharp_norm > falsification_tol &&
                       std::abs(rep.sharp_product / (4.0 * T) - 1.0) <= 2e-2;
  return rep;
}

// ---------------------------------------------------------------- heat flow at t = 1

Table Theorem4Report::table() const {
  Table t({"delta", "log_norm", "oracle_log_norm", "finite"});
  for (std::size_t i = 0; i < deltas.size(); ++i)
    t.add_row({deltas[i], log_norms[i], oracle_log_norms[i], double(finite[i])});
  return t;
}

Theorem4Report theorem4_parabolic_scenario(const ScenarioConfig& c, const std::vector<double>& deltas) {
  if (!(c.evolution.a > 0.0)) throw InvalidArgument("theorem4 scenario needs a > 0");
  if (c.evolution.t_final != 1.0) throw ConfigError("evolution.t_final: the heat scenario needs t_final = 1");
  const ScenarioSetup s = build_setup(c);
  const Trajectory traj = detail::run_evolution(s);
  const Field& u1 = traj.states.back();
  Theorem4Report rep;
  rep.degenerate = s.u0.is_zero();
  const int n = s.grid.dim();
  const double a = c.evolution.a;
  const bool closed = c.evolution.b == 0.0 && s.A.is_zero() && s.V.is_zero() && s.grid.components() == 1;

  // closed forms for u(x, 1) and log |e^{|x|^2/delta^2} u(1)|
  std::function<double(const Point&)> exact;
  std::function<double(double)> oracle;
  if (closed && c.initial.family == "gaussian" && c.initial.params.count("c_im") == 0 &&
      c.initial.params.count("x0") == 0 && c.initial.params.count("y0") == 0) {
    const double c0 = c.initial.params.count("c") ? c.initial.params.at("c") : 1.0;
    const double amp = c.initial.params.count("amplitude") ? c.initial.params.at("amplitude") : 1.0;
    const double d = 1.0 + 4.0 * a * c0, c1 = c0 / d;
    exact = [=](const Point& x) { return amp * std::pow(d, -0.5 * n) * std::exp(-c1 * (x[0] * x[0] + x[1] * x[1])); };
    oracle = [=](double delta) {
      const double w = 1.0 / (delta * delta);
      if (w >= c1) return kInf;
      return std::log(std::abs(amp)) - 0.5 * n * std::log(d) + 0.25 * n * std::log(std::numbers::pi / (2.0 * (c1 - w)));
    };
  } else if (closed && c.initial.family == "box") {
    const double w = c.initial.params.count("width") ? c.initial.params.at("width") : 1.0;
    const double s4 = std::sqrt(4.0 * a);
    auto g = [=](double x) { return 0.5 * (std::erf((w - x) / s4) + std::erf((w + x) / s4)); };
    exact = [=](const Point& x) { return n > 1 ? g(x[0]) * g(x[1]) : g(x[0]); };
    oracle = [=](double delta) {
      const double wt = 1.0 / (delta * delta);
      if (wt >= 1.0 / (4.0 * a)) return kInf;
      // separable: |.|^2 = (int e^{2 wt x^2} g(x)^2 dx)^n
      // erfc form keeps the far tail of g instead of cancelling to zero
      auto log_g = [=](double x) {
        x = std::abs(x);
        return std::log(0.5 * (std::erfc((x - w) / s4) - std::erfc((x + w) / s4)));
      };
      const double one =
          2.0 * simpson([&](double x) { return std::exp(2.0 * wt * x * x + 2.0 * log_g(x)); }, 0.0, 80.0, 200000);
      return 0.5 * n * std::log(one);
    };
  }

  if (exact && !rep.degenerate) {
    double top = 0.0, gap = 0.0;
    for (std::size_t p = 0; p < s.grid.point_count(); ++p) {
      const double e = exact(s.grid.position(p));
      top = std::max(top, std::abs(e));
      gap = std::max(gap, std::abs(u1(p, 0) - e));
    }
    rep.solution_gap = gap / top;
  }
  if (!rep.degenerate) rep.fitted_delta = spatial_envelope(u1);

  for (double delta : deltas) {
    const auto e = detail::endpoint_norm(u1, 1.0 / (delta * delta));
    rep.deltas.push_back(delta);
    rep.log_norms.push_back(e.log_norm);
    rep.finite.push_back(e.finite);
    const double o = oracle && !rep.degenerate ? oracle(delta) : std::numeric_limits<double>::quiet_NaN();
    rep.oracle_log_norms.push_back(o);
    if (rep.degenerate) continue;
    if (e.finite && std::isfinite(o)) rep.oracle_gap = std::max(rep.oracle_gap, std::abs(std::expm1(e.log_norm - o)));
    if (delta < 1.0 && e.finite) rep.below_one_finite = true;
    if (delta <= 0.9 * rep.fitted_delta && e.finite) rep.consistent = false;
    if (delta >= 1.5 * rep.fitted_delta && !e.finite) rep.consistent = false;
  }
  return rep;
}

// ---------------------------------------------------------------- coupled system

Table SystemReport::table() const {
  std::vector<std::string> cols{"t", "norm"};
  for (std::size_t c = 0; c < component_norms.size(); ++c) cols.push_back("norm_c" + std::to_string(c));
  Table t(cols);
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::vector<double> row{times[i], total_norm[i]};
    for (const auto& cn : component_norms) row.push_back(cn[i]);
    t.add_row(std::move(row));
  }
  return t;
}

SystemReport system_scenario_n(const ScenarioConfig& c) {
  const ScenarioSetup s = build_setup(c);
  if (!s.A.is_constant()) throw ConfigError("potential.A: the system scenario needs a constant matrix");
  if (!s.V.is_zero()) throw ConfigError("potential: the system scenario takes no V");
  if (c.nonlinearity) throw ConfigError("nonlinearity: not allowed in the system scenario");
  const Trajectory traj = detail::run_evolution(s);
  const Grid& g = s.grid;
  const int N = g.components();
  const ComplexMatrix A = s.A.constant_value().cast<cplx>();
  const cplx cf = s.coef.c();
  const SpectralField h0 = forward_transform(s.u0);

  SystemReport rep;
  rep.component_norms.assign(N, {});
  double top0 = 0.0;
  for (const cplx& z : s.u0.values()) top0 = std::max(top0, std::abs(z));
  const double n0 = l2_norm(s.u0);
  std::vector<double> c0(N);
  for (const Field& f : traj.states) {
    const double t = f.time();
    rep.times.push_back(t);
    rep.total_norm.push_back(l2_norm(f));
    for (int k = 0; k < N; ++k) {
      double acc = 0.0;
      for (const cplx& z : f.component(k)) acc += std::norm(z);
      rep.component_norms[k].push_back(std::sqrt(acc * g.cell_volume()));
    }
    if (n0 > 0.0) rep.norm_drift = std::max(rep.norm_drift, std::abs(rep.total_norm.back() / n0 - 1.0));
    // oracle: hat u(xi, t) = e^{c t (A - |xi|^2)} hat u0(xi)
    const ComplexMatrix E = matrix_exp(A, cf * t);
    SpectralField h = h0;
    for (std::size_t q = 0; q < g.point_count(); ++q) {
      ComplexVector v(N);
      for (int k = 0; k < N; ++k) v(k) = h0(q, k);
      const ComplexVector w = std::exp(-cf * t * g.frequency_sq(q)) * (E * v);
      for (int k = 0; k < N; ++k) h(q, k) = w(k);
    }
    const Field o = inverse_transform(h);
    double gap = 0.0;
    for (std::size_t i = 0; i < o.values().size(); ++i) gap = std::max(gap, std::abs(o.values()[i] - f.values()[i]));
    if (top0 > 0.0) rep.oracle_gap = std::max(rep.oracle_gap, gap / top0);
  }
  for (int k = 0; k < N; ++k) {
    const auto& cn = rep.component_norms[k];
    const auto [lo, hi] = std::minmax_element(cn.begin(), cn.end());
    if (n0 > 0.0 && *hi - *lo > 1e-2 * n0) rep.exchange = true;
  }
  return rep;
}

// ---------------------------------------------------------------- two nonlinear solutions

Table NonlinearReport::table() const {
  Table t({"t", "w_norm", "linear_gap"});
  for (std::size_t i = 0; i < times.size(); ++i) t.add_row({times[i], w_norm[i], linear_gap[i]});
  return t;
}

NonlinearReport nonlinear_difference_scenario(const ScenarioConfig& c, const InitialConfig& second) {
  if (!c.nonlinearity) throw ConfigError("nonlinearity: the two-solution scenario needs a power nonlinearity");
  const ScenarioSetup s1 = build_setup(c);
  if (s1.plan.method != Method::strang) throw ConfigError("evolution.method: the two-solution scenario uses strang");
  ScenarioConfig c2 = c;
  c2.initial = second;
  const ScenarioSetup s2 = build_setup(c2);
  const Trajectory u1 = detail::run_evolution(s1), u2 = detail::run_evolution(s2);

  // linear propagation of w(0), compared when lambda = 0
  const bool linear = c.nonlinearity->lambda == 0.0;
  Trajectory lin;
  const Field w0 = s1.u0 - s2.u0;
  if (linear) {
    EvolutionPlan plan = s1.plan;
    plan.nonlinearity.reset();
    plan.check_initial_tail = false;
    lin = evolve(plan, w0, s1.A, s1.V);
  }
  NonlinearReport rep;
  const double n0 = l2_norm(w0);
  for (std::size_t i = 0; i < u1.size(); ++i) {
    const Field w = u1[i] - u2[i];
    const double t = u1[i].time();
    rep.times.push_back(t);
    rep.w_norm.push_back(l2_norm(w));
    rep.max_w = std::max(rep.max_w, rep.w_norm.back());
    rep.linear_gap.push_back(linear ? l2_norm(w - lin[i]) : std::numeric_limits<double>::quiet_NaN());
    if (t > 0.0 && n0 > 0.0 && rep.w_norm.back() > 0.0)
      rep.growth_rate = std::max(rep.growth_rate, std::log(rep.w_norm.back() / n0) / t);
  }
  const auto e0 = detail::endpoint_norm(u1.states.front() - u2.states.front(), 1.0 / (c.beta * c.beta));
  const auto e1 = detail::endpoint_norm(u1.states.back() - u2.states.back(), 1.0 / (c.alpha * c.alpha));
  rep.log_norm0 = e0.log_norm;
  rep.log_norm1 = e1.log_norm;
  rep.finite0 = e0.finite;
  rep.finite1 = e1.finite;
  return rep;
}

}  // namespace hardylab

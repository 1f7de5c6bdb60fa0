#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "hardylab/appell.hpp"
#include "hardylab/parallel.hpp"
#include "scenario_util.hpp"

namespace hardylab {

using nlohmann::json;

namespace detail {

namespace {

Expression entry_expression(const json& e) {
  return e.is_number() ? Expression::constant(e.get<double>()) : Expression::parse(e.get<std::string>());
}

std::vector<std::vector<Expression>> expressions(const EntryMatrix& m, int n, const std::string& what) {
  std::vector<std::vector<Expression>> out;
  if (m.empty()) {
    for (int i = 0; i < n; ++i) out.emplace_back(n, Expression::constant(0.0));
    return out;
  }
  if (static_cast<int>(m.size()) != n)
    throw ConfigError(what + ": expected " + std::to_string(n) + " x " + std::to_string(n) + " entries");
  for (const auto& row : m) {
    std::vector<Expression> r;
    for (const auto& e : row) r.push_back(entry_expression(e));
    out.push_back(std::move(r));
  }
  return out;
}

bool depends_on_x(const std::vector<std::vector<Expression>>& m) {
  for (const auto& row : m)
    for (const auto& e : row)
      if (e.depends_on(Expression::Var::x1) || e.depends_on(Expression::Var::x2)) return true;
  return false;
}

bool depends_on_t(const std::vector<std::vector<Expression>>& m) {
  for (const auto& row : m)
    for (const auto& e : row)
      if (e.depends_on(Expression::Var::t)) return true;
  return false;
}

}  // namespace

MatrixPotential build_matrix_potential(const EntryMatrix& m, const Grid& grid) {
  if (m.empty()) return MatrixPotential::zero(grid);
  const auto ex = expressions(m, grid.components(), "potential.A");
  if (depends_on_t(ex)) throw ConfigError("potential.A: entries must not depend on t");
  try {
    return MatrixPotential::from_expressions(grid, ex);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("potential.A: ") + e.what());
  }
}

TimePotential build_time_potential(const PotentialConfig& p, const Grid& grid) {
  const int n = grid.components();
  const bool has1 = !p.v1_re.empty() || !p.v1_im.empty();
  const bool has2 = !p.v2_re.empty() || !p.v2_im.empty();
  if (!has1 && !has2) return TimePotential::zero(n);
  const auto r1 = expressions(p.v1_re, n, "potential.V1.re"), i1 = expressions(p.v1_im, n, "potential.V1.im");
  const auto r2 = expressions(p.v2_re, n, "potential.V2.re"), i2 = expressions(p.v2_im, n, "potential.V2.im");
  if (depends_on_t(r1) || depends_on_t(i1)) throw ConfigError("potential.V1: entries must not depend on t");
  auto eval = [n](const std::vector<std::vector<Expression>>& re, const std::vector<std::vector<Expression>>& im,
                  const Point& x, double t) {
    ComplexMatrix m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = cplx(re[i][j].evaluate(x[0], x[1], t), im[i][j].evaluate(x[0], x[1], t));
    return m;
  };
  TimePotential::StaticFn v1;
  TimePotential::DynamicFn v2;
  if (has1) v1 = [=](const Point& x) { return eval(r1, i1, x, 0.0); };
  if (has2) v2 = [=](const Point& x, double t) { return eval(r2, i2, x, t); };
  TimePotential v = TimePotential::make(n, v1, v2);
  const bool xfree = !depends_on_x(r1) && !depends_on_x(i1) && !depends_on_x(r2) && !depends_on_x(i2);
  v.mark_spatially_constant(xfree);
  v.mark_time_independent(!depends_on_t(r2) && !depends_on_t(i2));
  return v;
}

Trajectory run_evolution(const ScenarioSetup& s) { return evolve(s.plan, s.u0, s.A, s.V); }

}  // namespace detail

namespace {

const std::map<std::string, std::set<std::string>> kFamilyParams{
    {"zero", {}},
    {"gaussian", {"c", "c_im", "amplitude", "x0", "y0"}},
    {"hermite", {"c", "degree"}},
    {"super_gaussian", {"c", "power"}},
    {"sharp_gaussian", {}},
    {"box", {"width"}},
    {"random_smooth", {"terms", "degree"}},
    {"file", {}},
};

double param(const InitialConfig& ic, const char* key, double def) {
  auto it = ic.params.find(key);
  return it == ic.params.end() ? def : it->second;
}

// scalar profile into the selected components
Field fill(const Grid& grid, int component, const std::vector<cplx>& scalar) {
  Field f(grid);
  for (int c = 0; c < grid.components(); ++c) {
    if (component >= 0 && c != component) continue;
    auto comp = f.component(c);
    std::copy(scalar.begin(), scalar.end(), comp.begin());
  }
  return f;
}

template <class Fn>
std::vector<cplx> sample_scalar(const Grid& grid, Fn&& fn) {
  std::vector<cplx> out(grid.point_count());
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = fn(grid.position(p));
  return out;
}

double hermite(int n, double y) {
  double h0 = 1.0, h1 = 2.0 * y;
  if (n == 0) return h0;
  for (int k = 1; k < n; ++k) {
    const double h2 = 2.0 * y * h1 - 2.0 * k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

}  // namespace

Field build_initial(const InitialConfig& ic, const Grid& grid, const WeightSpec& w, double t_final,
                    std::uint64_t seed) {
  auto fam = kFamilyParams.find(ic.family);
  if (fam == kFamilyParams.end()) throw ConfigError("initial.family: unknown family '" + ic.family + "'");
  for (const auto& [k, v] : ic.params)
    if (!fam->second.count(k)) throw ConfigError("initial.params." + k + ": not a parameter of family '" + ic.family + "'");
  if (ic.component < -1 || ic.component >= grid.components())
    throw ConfigError("initial.component: must be -1 or a component index below " + std::to_string(grid.components()));
  const int n = grid.dim();
  auto r2 = [n](const Point& x) { return x[0] * x[0] + (n > 1 ? x[1] * x[1] : 0.0); };

  if (ic.family == "zero") return Field(grid);
  if (ic.family == "gaussian") {
    const cplx c(param(ic, "c", 1.0), param(ic, "c_im", 0.0));
    const double amp = param(ic, "amplitude", 1.0), x0 = param(ic, "x0", 0.0), y0 = param(ic, "y0", 0.0);
    if (!(c.real() > 0.0)) throw ConfigError("initial.params.c: must be positive");
    return fill(grid, ic.component, sample_scalar(grid, [&](const Point& x) {
                  const Point y{x[0] - x0, x[1] - y0};
                  return amp * std::exp(-c * r2(y));
                }));
  }
  if (ic.family == "hermite") {
    const double c = param(ic, "c", 1.0);
    const int deg = static_cast<int>(param(ic, "degree", 1.0));
    if (!(c > 0.0)) throw ConfigError("initial.params.c: must be positive");
    if (deg < 0 || deg > 12 || deg != param(ic, "degree", 1.0)) throw ConfigError("initial.params.degree: integer in [0, 12]");
    return fill(grid, ic.component, sample_scalar(grid, [&](const Point& x) {
                  return cplx(hermite(deg, std::sqrt(2.0 * c) * x[0]) * std::exp(-c * r2(x)));
                }));
  }
  if (ic.family == "super_gaussian") {
    const double c = param(ic, "c", 1.0), pw = param(ic, "power", 4.0);
    if (!(c > 0.0)) throw ConfigError("initial.params.c: must be positive");
    if (!(pw >= 2.0)) throw ConfigError("initial.params.power: must be >= 2");
    return fill(grid, ic.component,
                sample_scalar(grid, [&](const Point& x) { return cplx(std::exp(-c * std::pow(r2(x), 0.5 * pw))); }));
  }
  if (ic.family == "sharp_gaussian") {
    Field s = sharp_gaussian_initial(w, t_final, grid.with_components(1));
    return fill(grid, ic.component, s.values());
  }
  if (ic.family == "box") {
    // indicator of |x_k| <= width, built from its exact transform sqrt(2/pi) sin(w xi) / xi
    const double wd = param(ic, "width", 1.0);
    if (!(wd > 0.0 && wd < grid.half_width())) throw ConfigError("initial.params.width: must lie in (0, L)");
    const Grid g1 = grid.with_components(1);
    std::vector<cplx> spec(g1.point_count());
    const SpectralField probe(g1, spec);
    for (std::size_t k = 0; k < spec.size(); ++k) {
      const auto xi = probe.frequency(k);
      double v = 1.0;
      for (int a = 0; a < n; ++a)
        v *= xi[a] == 0.0 ? std::sqrt(2.0 / std::numbers::pi) * wd
                          : std::sqrt(2.0 / std::numbers::pi) * std::sin(wd * xi[a]) / xi[a];
      spec[k] = v;
    }
    const Field f = inverse_transform(SpectralField(g1, std::move(spec)));
    return fill(grid, ic.component, f.values());
  }
  if (ic.family == "random_smooth") {
    const int terms = static_cast<int>(param(ic, "terms", 3.0)), deg = static_cast<int>(param(ic, "degree", 2.0));
    if (terms < 1 || terms > 16) throw ConfigError("initial.params.terms: integer in [1, 16]");
    if (deg < 0 || deg > 4) throw ConfigError("initial.params.degree: integer in [0, 4]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    struct Term {
      Point x0;
      double c;
      cplx amp;
      std::vector<std::array<double, 3>> mono;  // (i, j, coefficient)
    };
    std::vector<Term> ts;
    for (int k = 0; k < terms; ++k) {
      Term t;
      t.x0 = {1.5 * u(rng), n > 1 ? 1.5 * u(rng) : 0.0};
      t.c = 1.0 + 0.6 * u(rng);
      t.amp = {u(rng), u(rng)};
      for (int i = 0; i <= deg; ++i)
        for (int j = 0; i + j <= deg && (n > 1 || j == 0); ++j) t.mono.push_back({double(i), double(j), u(rng)});
      ts.push_back(std::move(t));
    }
    return fill(grid, ic.component, sample_scalar(grid, [&](const Point& x) {
                  cplx s = 0.0;
                  for (const auto& t : ts) {
                    const Point y{x[0] - t.x0[0], x[1] - t.x0[1]};
                    double poly = 0.0;
                    for (const auto& m : t.mono) poly += m[2] * std::pow(y[0], m[0]) * std::pow(y[1], m[1]);
                    s += t.amp * poly * std::exp(-t.c * r2(y));
                  }
                  return s;
                }));
  }
  // file
  if (ic.path.empty()) throw ConfigError("initial.path: required for family 'file'");
  Field f = [&] {
    try {
      return read_snapshot(ic.path);
    } catch (const Error& e) {
      throw ConfigError(std::string("initial.path: ") + e.what());
    }
  }();
  if (!(f.grid() == grid)) throw ConfigError("initial.path: snapshot grid does not match the configured grid");
  f.set_time(0.0);
  return f;
}

ScenarioSetup build_setup(const ScenarioConfig& c) {
  auto guarded = [](const std::string& where, auto&& fn) {
    try {
      return fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const ExpressionError& e) {
      throw ConfigError(where + ": " + e.what());
    } catch (const Error& e) {
      throw ConfigError(where + ": " + e.what());
    }
  };
  const Grid grid = guarded("grid", [&] {
    return Grid::make(c.grid.dim, c.grid.points, c.grid.half_width, c.grid.components);
  });
  const auto coef = guarded("evolution", [&] { return EvolutionCoefficients::make(c.evolution.a, c.evolution.b); });
  const auto weights = guarded("weights", [&] { return WeightSpec::make(c.alpha, c.beta, c.gamma); });
  MatrixPotential A = detail::build_matrix_potential(c.potential.A, grid);
  TimePotential V = detail::build_time_potential(c.potential, grid);
  Field u0 = guarded("initial", [&] { return build_initial(c.initial, grid, weights, c.evolution.t_final, c.seed); });

  EvolutionPlan plan;
  plan.coefficients = coef;
  plan.t_final = c.evolution.t_final;
  plan.step_count = c.evolution.steps;
  if (c.nonlinearity) plan.nonlinearity = PowerNonlinearity{c.nonlinearity->lambda, c.nonlinearity->sigma};
  if (c.evolution.method == "auto")
    plan.method = (A.is_constant() && V.is_zero() && !plan.nonlinearity) ? Method::exact_multiplier : Method::strang;
  else
    plan.method = parse_method(c.evolution.method);
  if (plan.method == Method::exact_multiplier && !(A.is_constant() && V.is_zero() && !plan.nonlinearity))
    throw ConfigError("evolution.method: exact_multiplier needs constant A, no V and no nonlinearity");
  if (plan.method == Method::duhamel_picard && plan.nonlinearity)
    throw ConfigError("evolution.method: duhamel_picard does not take a nonlinearity");
  // zero data has nothing to resolve; the box carries sinc ringing from its truncated transform
  plan.check_initial_tail = !u0.is_zero() && c.initial.family != "box";
  if (plan.check_initial_tail) {
    try {
      require_tail_resolved(u0, WeightProfile::unit(grid), "initial data");
    } catch (const TailNotResolved& e) {
      throw ConfigError(std::string("initial: ") + e.what());
    }
  }
  return {grid, coef, std::move(A), std::move(V), std::move(u0), weights, plan};
}

// ---------------------------------------------------------------- run

bool RunManifest::pass() const {
  return std::all_of(summary.begin(), summary.end(), [](const auto& s) { return s.second; });
}

json RunManifest::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["tool_version"] = tool_version;
  j["files"] = files;
  json s = json::object();
  for (const auto& [k, v] : summary) s[k] = v;
  j["summary"] = s;
  j["pass"] = pass();
  j["notes"] = notes;
  if (!timings.empty()) {
    json t = json::object();
    for (const auto& [k, v] : timings) t[k] = json_number(v);
    j["timings"] = t;
  }
  return j;
}

namespace {

class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
    // drop what an earlier run in this directory listed
    const fs::path old = root_ / "manifest.json";
    if (fs::exists(old)) {
      try {
        const json j = json::parse(read_file(old));
        for (const auto& f : j.at("files")) fs::remove(root_ / f.get<std::string>());
      } catch (...) {
      }
    }
  }
  void write(const std::string& rel, std::string_view content) {
    write_file_atomic(root_ / rel, content);
    files_.insert(rel);
  }
  void snapshot(const std::string& rel, const Field& f) {
    write_snapshot(root_ / rel, f);
    files_.insert(rel);
  }
  std::vector<std::string> files() const { return {files_.begin(), files_.end()}; }
  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  std::set<std::string> files_;
};

template <class Fn>
auto staged(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const ScenarioError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ScenarioError(stage, e.what());
  }
}

Table norm_table(const Trajectory& traj) {
  const int N = traj.grid().components();
  std::vector<std::string> cols{"t", "norm"};
  for (int c = 0; c < N && N > 1; ++c) cols.push_back("norm_c" + std::to_string(c));
  Table t(cols);
  for (const auto& f : traj.states) {
    std::vector<double> row{f.time(), l2_norm(f)};
    if (N > 1)
      for (int c = 0; c < N; ++c) {
        double s = 0.0;
        for (const cplx& z : f.component(c)) s += std::norm(z);
        row.push_back(std::sqrt(s * f.grid().cell_volume()));
      }
    t.add_row(std::move(row));
  }
  return t;
}

struct Diagnostic {
  explicit Diagnostic(std::string n) : name(std::move(n)) {}
  std::string name;
  bool pass = true;
  Table table;
  json extra = json::object();
};

Diagnostic convexity_diag(const ScenarioSetup& s, const Trajectory& traj) {
  Diagnostic d{"convexity"};
  const double g = s.weights.gamma;
  const SKDecomposition dec = build_sk(s.A, s.V, s.coef.a, s.coef.b, g, WeightSample::quadratic(s.grid));
  const ConvexityTrace q = q_trace(traj, g, dec);
  d.table = q.table();
  d.pass = q.min_d2logQ >= -5e-4 * q.max_abs_logQ && q.convexity_slack <= 1e-3;
  d.extra = {{"gamma", json_number(g)},
             {"min_d2logQ", json_number(q.min_d2logQ)},
             {"max_abs_logQ", json_number(q.max_abs_logQ)},
             {"convexity_slack", json_number(q.convexity_slack)},
             {"second_difference_tol", json_number(-5e-4 * q.max_abs_logQ)},
             {"slack_tol", json_number(1e-3)}};
  return d;
}

Diagnostic interpolation_diag(const ScenarioSetup& s, const Trajectory& traj) {
  Diagnostic d{"interpolation_bound"};
  const TheoremBoundReport r = interpolation_bound_check(traj, s.weights, s.V);
  d.table = r.table();
  d.pass = r.pass;
  d.extra = {{"n_hat", json_number(r.n_hat)},
             {"n_hat_rescaled", json_number(r.n_hat_rescaled)},
             {"standard_pass", r.standard_pass},
             {"rescaled_pass", r.rescaled_pass},
             {"m1", json_number(r.m1)},
             {"m2", json_number(r.m2)},
             {"b_v2", json_number(r.b_v2)},
             {"degenerate", r.degenerate}};
  return d;
}

Diagnostic hardy_diag(const ScenarioConfig& c, const Trajectory& traj) {
  Diagnostic d{"hardy"};
  const Field& u0 = traj.states.front();
  const Field& uT = traj.states.back();
  const double T = uT.time();
  const HardyEnvelope h0 = hardy_envelope(u0), hT = hardy_envelope(uT);
  d.table = Table({"t", "beta_hat", "alpha_hat", "product"});
  d.table.add_row({0.0, h0.beta_hat, h0.alpha_hat, h0.product});
  d.table.add_row({T, hT.beta_hat, hT.alpha_hat, hT.product});
  const double endpoint = h0.beta_hat * hT.beta_hat;
  const double floor = 4.0 * (1.0 - 5e-2);
  d.pass = h0.product >= floor && hT.product >= floor;
  d.extra = {{"endpoint_product", json_number(endpoint)}, {"four_T", json_number(4.0 * T)}, {"static_floor", floor}};
  if (c.initial.family == "sharp_gaussian") {
    const double rel = std::abs(endpoint / (4.0 * T) - 1.0);
    d.extra["endpoint_rel_gap"] = json_number(rel);
    d.pass = d.pass && rel <= 2e-2;
  }
  return d;
}

Diagnostic appell_diag(const ScenarioSetup& s, const Trajectory& traj) {
  Diagnostic d{"appell"};
  const AppellMap map = AppellMap::make(s.weights, s.coef);
  const AppellIdentityReport r = appell_identity_check(traj, map, s.weights.gamma);
  d.table = r.table();
  const double gap = s.coef.a == 0.0 ? r.unweighted_gap : r.derived.gap;
  d.pass = gap <= 1e-5 && r.derived.resolved && r.derived.gap <= 1e-5;
  d.extra = {{"unweighted_gap", json_number(r.unweighted_gap)},
             {"derived_gap", json_number(r.derived.gap)},
             {"derived_resolved", r.derived.resolved},
             {"winner", r.winner}};
  return d;
}

Diagnostic carleman_diag(const ScenarioConfig& c) {
  Diagnostic d{"carleman"};
  const auto& K = c.carleman;
  const Grid g = Grid::make(c.grid.dim, K.points, K.half_width, c.grid.components);
  const MatrixPotential A = detail::build_matrix_potential(c.potential.A, g);
  const CarlemanParams p = CarlemanParams::make(K.mu, K.r, K.eps);
  const std::size_t n = static_cast<std::size_t>(K.probes);
  struct Row {
    double ratio[2], refined[2], margin[2], gap[2];
  };
  std::vector<Row> rows(n);
  parallel_for(n, worker_count(), [&](std::size_t i) {
    const auto v = make_bump_test_function(g, K.time_samples, c.seed + i);
    const auto v2 = make_bump_test_function(g, 2 * K.time_samples - 1, c.seed + i);
    for (int k = 0; k < 2; ++k) {
      const Regime reg = k == 0 ? Regime::schrodinger : Regime::parabolic;
      auto check = [&](const TestFunction& u) {
        return k == 0 ? carleman_schrodinger_check(u, A, p) : carleman_parabolic_check(u, A, p);
      };
      rows[i].ratio[k] = check(v).ratio;
      rows[i].refined[k] = check(v2).ratio;
      if (A.is_constant()) {
        const auto cb = commutator_lower_bound(v, A, p, reg);
        rows[i].margin[k] = cb.min_margin;
        rows[i].gap[k] = cb.nested_gap;
      } else {
        rows[i].margin[k] = rows[i].gap[k] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  });
  d.table = Table({"seed", "regime", "ratio", "ratio_refined", "refinement_drift", "commutator_margin", "nested_gap"});
  double worst = std::numeric_limits<double>::infinity(), drift = 0.0, margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < 2; ++k) {
      const Row& r = rows[i];
      const double dr = std::abs(r.refined[k] - r.ratio[k]) / r.ratio[k];
      d.table.add_row({double(c.seed + i), double(k), r.ratio[k], r.refined[k], dr, r.margin[k], r.gap[k]});
      worst = std::min(worst, r.ratio[k]);
      drift = std::max(drift, dr);
      if (!std::isnan(r.margin[k])) margin = std::min(margin, r.margin[k]);
    }
  d.pass = worst >= 1.0 - 2e-2 && drift < 2e-2 && !(margin < -1e-8);
  d.extra = {{"min_ratio", json_number(worst)},
             {"max_refinement_drift", json_number(drift)},
             {"min_commutator_margin", json_number(margin)},
             {"regimes", {"schrodinger", "parabolic"}}};
  return d;
}

Diagnostic theorem1_diag(const ScenarioSetup& s, const Trajectory& traj, std::vector<std::string>& notes) {
  Diagnostic d{"theorem1"};
  const auto e0 = detail::endpoint_norm(traj.states.front(), 1.0 / (s.weights.beta * s.weights.beta));
  const auto e1 = detail::endpoint_norm(traj.states.back(), 1.0 / (s.weights.alpha * s.weights.alpha));
  double sol = 0.0;
  for (const auto& f : traj.states) sol = std::max(sol, l2_norm(f));
  const bool admissible = s.weights.admissible();
  const bool candidate = admissible && e0.finite && e1.finite && sol > 1e-8;
  d.table = Table({"alpha", "beta", "admissible", "log_norm0", "log_norm1", "finite0", "finite1", "solution_norm",
                   "candidate"});
  d.table.add_row({s.weights.alpha, s.weights.beta, double(admissible), e0.log_norm, e1.log_norm, double(e0.finite),
                   double(e1.finite), sol, double(candidate)});
  d.pass = !candidate;
  if (!admissible) {
    d.extra["status"] = "outside uniqueness admissibility (alpha beta < 2)";
    notes.push_back("theorem1: outside uniqueness admissibility (alpha beta < 2)");
  } else {
    d.extra["status"] = candidate ? "counterexample candidate" : "consistent";
  }
  return d;
}

}  // namespace

RunManifest run_scenario(const ScenarioConfig& c, const RunOptions& opt) {
  const ScenarioSetup s = build_setup(c);
  const auto& D = c.diagnostics;
  if ((D.interpolation_bound || D.appell || D.theorem1) && c.evolution.t_final != 1.0)
    throw ConfigError("evolution.t_final: interpolation_bound, appell and theorem1 need t_final = 1");

  OutputDir out(opt.output ? *opt.output : fs::path(c.output));
  RunManifest m;
  m.config_hash = config_hash(c);
  detail::Stopwatch total;

  detail::Stopwatch sw;
  const Trajectory traj = staged("evolve", [&] { return detail::run_evolution(s); });
  m.timings.emplace_back("evolve", sw.seconds());
  const bool zero = s.u0.is_zero();

  out.write("config.json", serialize_config(c));
  const Table norms = norm_table(traj);
  out.write("norms.csv", norms.to_csv());

  std::vector<Diagnostic> diags;
  auto run = [&](bool on, const std::string& name, auto&& fn) {
    if (!on) return;
    detail::Stopwatch t;
    if (zero && name != "carleman") {
      Diagnostic d{name};
      d.extra["degenerate"] = true;
      diags.push_back(std::move(d));
    } else {
      diags.push_back(staged(name, fn));
    }
    m.timings.emplace_back(name, t.seconds());
  };
  run(D.convexity, "convexity", [&] { return convexity_diag(s, traj); });
  run(D.interpolation_bound, "interpolation_bound", [&] { return interpolation_diag(s, traj); });
  run(D.hardy, "hardy", [&] { return hardy_diag(c, traj); });
  run(D.appell, "appell", [&] { return appell_diag(s, traj); });
  run(D.carleman, "carleman", [&] { return carleman_diag(c); });
  run(D.theorem1, "theorem1", [&] { return theorem1_diag(s, traj, m.notes); });

  json report;
  report["name"] = c.name;
  report["config_hash"] = m.config_hash;
  report["tool_version"] = m.tool_version;
  report["degenerate"] = zero;
  report["norms"] = norms.to_json();
  report["diagnostics"] = json::object();
  for (const auto& d : diags) {
    if (d.table.columns().size()) out.write(d.name + ".csv", d.table.to_csv());
    json jd = d.extra;
    jd["pass"] = d.pass;
    if (d.table.columns().size()) jd["table"] = d.table.to_json();
    report["diagnostics"][d.name] = jd;
    m.summary.emplace_back(d.name, d.pass);
  }
  if (D.snapshots) {
    out.snapshot("u_initial.snap", traj.states.front());
    out.snapshot("u_final.snap", traj.states.back());
  }
  report["pass"] = m.pass();
  out.write("report.json", report.dump(2) + "\n");

  m.files = out.files();
  m.files.push_back("manifest.json");
  std::sort(m.files.begin(), m.files.end());
  m.timings.emplace_back("total", total.seconds());
  if (!opt.timings) m.timings.clear();
  out.write("manifest.json", m.to_json().dump(2) + "\n");
  return m;
}

}  // namespace hardylab

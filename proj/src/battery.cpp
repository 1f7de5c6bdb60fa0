#include "hardylab/battery.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hardylab/appell.hpp"
#include "hardylab/carleman.hpp"
#include "hardylab/io.hpp"
#include "hardylab/parallel.hpp"
#include "scenario_util.hpp"

namespace hardylab {

using nlohmann::json;

bool BatteryReport::pass() const {
  for (const auto& c : criteria)
    if (!c.ok()) return false;
  for (const auto& [name, ok] : catalog)
    if (!ok) return false;
  return true;
}

namespace {

const EvolutionCoefficients kSchr{0.0, 1.0};

Field gaussian(const Grid& g, double c, double amp = 1.0) {
  return Field::sample(g, [=](const Point& x, int k) {
    return k == 0 ? cplx(amp * std::exp(-c * (x[0] * x[0] + x[1] * x[1]))) : cplx(0.0);
  });
}

double sup_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

Trajectory run_free(const Field& u0, const EvolutionCoefficients& coef, double T, int steps) {
  EvolutionPlan plan;
  plan.coefficients = coef;
  plan.t_final = T;
  plan.step_count = steps;
  plan.method = Method::exact_multiplier;
  return evolve(plan, u0, MatrixPotential::zero(u0.grid()), TimePotential::zero(u0.grid().components()));
}

struct Outcome {
  bool pass = true;
  json metrics = json::object();
  Table table;
};

// ---------------------------------------------------------------- 1

Outcome free_gaussian() {
  Outcome o;
  const Grid g = Grid::make(1, 512, 16.0, 1);
  const Field u0 = gaussian(g, 1.0);
  const auto A = MatrixPotential::zero(g);
  o.table = Table({"t", "sup_error_multiplier", "sup_error_strang"});
  double worst = 0.0;
  for (double t : {0.1, 0.25, 0.5}) {
    const Field exact = Field::sample(
        g,
        [t](const Point& x, int) {
          const cplx d(1.0, 4.0 * t);
          return std::exp(-x[0] * x[0] / d) / std::sqrt(d);
        },
        t);
    const double e1 = sup_diff(free_propagate(u0, A, kSchr, t), exact);
    EvolutionPlan plan;
    plan.t_final = t;
    plan.step_count = 50;
    plan.method = Method::strang;
    const double e2 = sup_diff(evolve(plan, u0, A, TimePotential::zero(1)).states.back(), exact);
    o.table.add_row({t, e1, e2});
    worst = std::max({worst, e1, e2});
  }
  o.pass = worst <= 1e-8;
  o.metrics = {{"max_sup_error", json_number(worst)}, {"tol", 1e-8}};
  return o;
}

// ---------------------------------------------------------------- 2

Outcome unitarity() {
  Outcome o;
  o.table = Table({"components", "norm_drift", "group_gap_strang", "group_gap_multiplier"});
  double drift = 0.0, gap = 0.0;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 1; n <= 4; ++n) {
    const Grid g = Grid::make(1, 256, 16.0, n);
    RealMatrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = u(rng);
    const auto A = MatrixPotential::constant(g, a);
    const auto V = TimePotential::make(
        n, [n](const Point& x) { return ComplexMatrix(0.5 * std::exp(-x[0] * x[0]) * ComplexMatrix::Identity(n, n)); },
        nullptr);
    const Field u0 = Field::sample(g, [](const Point& x, int k) {
      return cplx(std::exp(-(x[0] - 0.5 * k) * (x[0] - 0.5 * k)), 0.3 * k * x[0] * std::exp(-x[0] * x[0]));
    });
    EvolutionPlan plan;
    plan.method = Method::strang;
    plan.t_final = 1.0;
    plan.step_count = 1000;
    const Trajectory traj = evolve(plan, u0, A, V);
    const double n0 = l2_norm(u0);
    double d = 0.0;
    for (const Field& f : traj.states) d = std::max(d, std::abs(l2_norm(f) / n0 - 1.0));

    // U(0.3) U(0.2) against U(0.5) at the same step size
    auto strang_to = [&](const Field& f, double T, int steps) {
      EvolutionPlan p = plan;
      p.t_final = T;
      p.step_count = steps;
      p.check_initial_tail = false;
      return evolve(p, f, A, V).states.back();
    };
    const Field whole = strang_to(u0, 0.5, 500);
    const double gs = l2_norm(strang_to(strang_to(u0, 0.2, 200), 0.3, 300) - whole) / l2_norm(whole);
    const Field ex = free_propagate(u0, A, kSchr, 0.5);
    const double gm = l2_norm(free_propagate(free_propagate(u0, A, kSchr, 0.2), A, kSchr, 0.3) - ex) / l2_norm(ex);
    o.table.add_row({double(n), d, gs, gm});
    drift = std::max(drift, d);
    gap = std::max({gap, gs, gm});
  }
  o.pass = drift <= 1e-8 && gap <= 1e-10;
  o.metrics = {{"max_norm_drift", json_number(drift)}, {"max_group_gap", json_number(gap)}};
  return o;
}

// ---------------------------------------------------------------- 3

Outcome hardy() {
  Outcome o;
  o.table = Table({"kind", "beta_or_seed", "T", "product", "target"});
  double sharp_dev = 0.0;
  for (auto [beta, T] : {std::pair{2.0, 1.0}, std::pair{1.0, 0.5}}) {
    const Grid g = Grid::make(1, 512, 16.0, 1);
    const WeightSpec w = WeightSpec::make(4.0 * T / beta, beta);
    const Field u0 = sharp_gaussian_initial(w, T, g);
    const Field uT = free_propagate(u0, MatrixPotential::zero(g), kSchr, T);
    const double prod = spatial_envelope(u0) * spatial_envelope(uT);
    o.table.add_row({0.0, beta, T, prod, 4.0 * T});
    sharp_dev = std::max(sharp_dev, std::abs(prod / (4.0 * T) - 1.0));
  }
  const Grid g = Grid::make(1, 512, 16.0, 1);
  InitialConfig ic;
  ic.family = "random_smooth";
  double lowest = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Field f = build_initial(ic, g, WeightSpec{}, 1.0, seed);
    const double p = hardy_envelope(f).product;
    o.table.add_row({1.0, double(seed), 0.0, p, 4.0});
    lowest = std::min(lowest, p);
  }
  o.pass = sharp_dev <= 2e-2 && lowest >= 4.0 * (1.0 - 5e-2);
  o.metrics = {{"sharp_max_relative_deviation", json_number(sharp_dev)},
               {"random_min_product", json_number(lowest)},
               {"random_fields", 50}};
  return o;
}

// ---------------------------------------------------------------- 4

Outcome convexity() {
  Outcome o;
  o.table = Table({"gamma", "min_d2logQ", "max_abs_logQ", "convexity_slack"});
  const Grid g = Grid::make(1, 256, 12.0, 1);
  // |u(t)|^2 ~ e^{-2 c |x|^2 / (1 + 16 c^2 t^2)}: c = 1/2 on [0, 1/2] keeps both weights resolved
  const Trajectory traj = run_free(gaussian(g, 0.5), kSchr, 0.5, 63);
  bool pass = true;
  double worst_d2 = std::numeric_limits<double>::infinity(), slack = 0.0;
  for (double gamma : {0.05, 0.1}) {
    const auto dec = build_sk(MatrixPotential::zero(g), TimePotential::zero(1), 0.0, 1.0, gamma,
                              WeightSample::quadratic(g));
    const ConvexityTrace q = q_trace(traj, gamma, dec);
    o.table.add_row({gamma, q.min_d2logQ, q.max_abs_logQ, q.convexity_slack});
    pass = pass && q.min_d2logQ >= -5e-4 * q.max_abs_logQ && q.convexity_slack <= 1e-3;
    worst_d2 = std::min(worst_d2, q.min_d2logQ);
    slack = std::max(slack, q.convexity_slack);
  }
  o.pass = pass;
  o.metrics = {{"samples", traj.size()},
               {"t_final", 0.5},
               {"min_d2logQ", json_number(worst_d2)},
               {"max_convexity_slack", json_number(slack)}};
  return o;
}

// ---------------------------------------------------------------- 5

Outcome appell() {
  Outcome o;
  const Grid g = Grid::make(1, 512, 20.0, 1);
  const Trajectory u = run_free(gaussian(g, 0.5), kSchr, 1.0, 1023);
  const auto A = MatrixPotential::zero(g);
  const auto V = TimePotential::zero(1);
  const auto m = AppellMap::make(WeightSpec::make(1.0, 2.0), kSchr);

  const double unweighted = appell_identity_check(u, m, 0.0).unweighted_gap;

  const auto id = AppellMap::make(WeightSpec::make(1.3, 1.3), kSchr);
  const Trajectory same = appell_trajectory(u, id);
  double degeneracy = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) degeneracy = std::max(degeneracy, l2_norm(same[i] - u[i]) / l2_norm(u[i]));
  degeneracy = std::max(degeneracy, appell_identity_check(u, id, 0.0).unweighted_gap);

  const Trajectory w = appell_trajectory(u, m);
  const Trajectory back = appell_trajectory(w, m.inverse());
  double inverse = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) inverse = std::max(inverse, l2_norm(back[i] - u[i]) / l2_norm(u[i]));

  const double residual = appell_pde_residual(u, m, A, V);

  o.table = Table({"unweighted_gap", "degeneracy_gap", "inverse_gap", "pde_residual"});
  o.table.add_row({unweighted, degeneracy, inverse, residual});
  o.pass = unweighted <= 1e-5 && degeneracy <= 1e-10 && inverse <= 1e-4 && residual <= 1e-4;
  o.metrics = {{"unweighted_gap", json_number(unweighted)},
               {"degeneracy_gap", json_number(degeneracy)},
               {"inverse_gap", json_number(inverse)},
               {"pde_residual", json_number(residual)},
               {"time_samples", u.size()}};
  return o;
}

// ---------------------------------------------------------------- 6

Outcome commutators() {
  Outcome o;
  o.table = Table({"kind", "case", "value", "tol"});
  // closed form against nested operators on Gaussian probes
  const Grid g = Grid::make(1, 256, 8.0, 2);
  RealMatrix a(2, 2);
  a << 0.5, -1.0, -1.0, 0.2;
  const Field f = Field::sample(g, [](const Point& x, int k) {
    return cplx(std::exp(-(k == 0 ? 1.0 : 0.7) * x[0] * x[0]));
  });
  double closed = 0.0;
  int idx = 0;
  for (auto [ca, cb] : {std::pair{0.0, 1.0}, std::pair{1.0, 0.0}, std::pair{0.6, 0.8}}) {
    const auto dec = build_sk(MatrixPotential::constant(g, a), TimePotential::zero(2), ca, cb, 1.0,
                              WeightSample::quadratic(g));
    const double r = commutator_form(dec, f, 0.0).relative_gap;
    o.table.add_row({0.0, double(idx++), r, 1e-5});
    closed = std::max(closed, r);
  }

  // aggregate lower bound on 20 seeded probes, both regimes
  const Grid g2 = Grid::make(2, 64, 4.0, 1);
  const auto A0 = MatrixPotential::zero(g2);
  const auto p = CarlemanParams::make(1.0, 2.0, 1.0);
  std::vector<double> margins(40);
  parallel_for(20, worker_count(), [&](std::size_t i) {
    const auto v = make_bump_test_function(g2, 21, i + 1);
    margins[2 * i] = commutator_lower_bound(v, A0, p, Regime::schrodinger).min_margin;
    margins[2 * i + 1] = commutator_lower_bound(v, A0, p, Regime::parabolic).min_margin;
  });
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < margins.size(); ++i) {
    o.table.add_row({1.0 + double(i % 2), double(i / 2 + 1), margins[i], -1e-8});
    worst = std::min(worst, margins[i]);
  }
  o.pass = closed <= 1e-5 && worst >= -1e-8;
  o.metrics = {{"max_closed_nested_gap", json_number(closed)}, {"min_aggregate_margin", json_number(worst)}};
  return o;
}

// ---------------------------------------------------------------- 7

Outcome carleman() {
  Outcome o;
  o.table = Table({"regime", "seed", "ratio", "ratio_refined", "refinement_drift"});
  const Grid g = Grid::make(2, 64, 4.0, 1);
  const auto A = MatrixPotential::zero(g);
  struct Case {
    Regime reg;
    CarlemanParams p;
  };
  const Case cases[] = {{Regime::schrodinger, CarlemanParams::make(0.5, 0.5, 1.0)},
                        {Regime::parabolic, CarlemanParams::make(1.0, 4.0, 0.5)}};
  double worst = std::numeric_limits<double>::infinity(), drift = 0.0;
  for (int k = 0; k < 2; ++k) {
    const Case& cs = cases[k];
    std::vector<std::pair<double, double>> r(20);
    parallel_for(20, worker_count(), [&](std::size_t i) {
      auto check = [&](const TestFunction& v) {
        return cs.reg == Regime::parabolic ? carleman_parabolic_check(v, A, cs.p) : carleman_schrodinger_check(v, A, cs.p);
      };
      r[i] = {check(make_bump_test_function(g, 61, i + 1)).ratio, check(make_bump_test_function(g, 121, i + 1)).ratio};
    });
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double d = std::abs(r[i].second - r[i].first) / r[i].first;
      o.table.add_row({double(k), double(i + 1), r[i].first, r[i].second, d});
      worst = std::min(worst, r[i].first);
      drift = std::max(drift, d);
    }
  }
  o.pass = worst >= 1.0 - 2e-2 && drift < 2e-2;
  o.metrics = {{"min_ratio", json_number(worst)}, {"max_refinement_drift", json_number(drift)}};
  return o;
}

// ---------------------------------------------------------------- 8

Outcome frontier() {
  Outcome o;
  ScenarioConfig base;
  base.grid = {1, 512, 16.0, 1};
  base.evolution = {0.0, 1.0, 1.0, 64, "exact_multiplier"};
  std::vector<InitialConfig> fams(3);
  fams[0].family = "gaussian";
  fams[0].params = {{"c", 1.0}};
  fams[1].family = "hermite";
  fams[1].params = {{"c", 0.5}, {"degree", 3.0}};
  fams[2].family = "super_gaussian";
  fams[2].params = {{"c", 0.25}, {"power", 4.0}};
  const std::vector<double> grid{0.5, 1.0, 2.0, 4.0, 8.0};
  const FrontierReport r = theorem1_falsification_sweep(base, grid, grid, fams);
  o.table = r.table();
  o.pass = r.pass();
  o.metrics = {{"candidates", r.candidates},
               {"sharp_product", json_number(r.sharp_product)},
               {"sharp_norm", json_number(r.sharp_norm)},
               {"sharp_finite", r.sharp_finite},
               {"sharp_survives", r.sharp_survives},
               {"hypotheses_hold", r.hypotheses_hold}};
  return o;
}

// ---------------------------------------------------------------- 9

Outcome system() {
  Outcome o;
  const ScenarioConfig c = builtin_scenario("system-n2");
  const SystemReport r = system_scenario_n(c);
  o.table = r.table();
  // u = (cos t e^{it Lap} g, i sin t e^{it Lap} g)
  const double g0 = r.total_norm.front();
  double trig = 0.0;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    const double t = r.times[i];
    trig = std::max(trig, std::abs(r.component_norms[0][i] - std::abs(std::cos(t)) * g0) / g0);
    trig = std::max(trig, std::abs(r.component_norms[1][i] - std::abs(std::sin(t)) * g0) / g0);
  }
  // a single component reduces to the scalar run
  ScenarioConfig one = c;
  one.grid.components = 1;
  one.potential.A = {{0.0}};
  const SystemReport r1 = system_scenario_n(one);
  ScenarioConfig scalar = one;
  scalar.potential.A.clear();
  const ScenarioSetup s = build_setup(scalar);
  const Trajectory ts = detail::run_evolution(s);
  bool reduces = ts.size() == r1.times.size();
  for (std::size_t i = 0; reduces && i < ts.size(); ++i) reduces = l2_norm(ts[i]) == r1.total_norm[i];

  o.pass = r.oracle_gap <= 1e-6 && r.norm_drift <= 1e-8 && trig <= 1e-6 && r.exchange && reduces;
  o.metrics = {{"oracle_gap", json_number(r.oracle_gap)},
               {"norm_drift", json_number(r.norm_drift)},
               {"trig_gap", json_number(trig)},
               {"exchange", r.exchange},
               {"single_component_reduces", reduces}};
  return o;
}

struct Spec {
  int id;
  const char* key;
  const char* title;
  double budget;
  Outcome (*fn)();
};

const Spec kCriteria[] = {
    {1, "free-gaussian", "free Gaussian against the closed form", 5.0, free_gaussian},
    {2, "unitarity", "norm conservation and group law", 10.0, unitarity},
    {3, "hardy", "Hardy sharp product and random fields", 30.0, hardy},
    {4, "convexity", "log-convexity of the weighted norm", 20.0, convexity},
    {5, "appell", "Appell identities", 60.0, appell},
    {6, "commutators", "commutator closed forms and lower bound", 30.0, commutators},
    {7, "carleman", "Carleman inequalities on seeded probes", 60.0, carleman},
    {8, "frontier", "uniqueness frontier sweep", 90.0, frontier},
    {9, "system", "coupled system against the matrix exponential", 10.0, system},
};

std::string pad2(int i) { return (i < 10 ? "0" : "") + std::to_string(i); }

// criteria 1-9 plus the catalog; timings kept out of the files
BatteryReport run_once(const fs::path& out, const BatteryOptions& opt, bool notify) {
  BatteryReport rep;
  fs::create_directories(out);
  json summary = {{"tool_version", kToolVersion}, {"criteria", json::array()}, {"catalog", json::array()}};
  for (const Spec& s : kCriteria) {
    CriterionResult r;
    r.id = s.id;
    r.key = s.key;
    r.title = s.title;
    r.budget = s.budget;
    const std::string stem = pad2(s.id) + "-" + s.key;
    detail::Stopwatch sw;
    try {
      Outcome o = s.fn();
      r.pass = o.pass;
      r.metrics = std::move(o.metrics);
      write_file_atomic(out / (stem + ".csv"), o.table.to_csv());
    } catch (const std::exception& e) {
      r.pass = false;
      r.error = e.what();
    }
    r.seconds = sw.seconds();
    summary["criteria"].push_back(
        {{"id", r.id}, {"key", r.key}, {"title", r.title}, {"pass", r.pass}, {"metrics", r.metrics}, {"error", r.error}});
    if (notify && opt.on_result) opt.on_result(r);
    rep.criteria.push_back(std::move(r));
  }
  if (opt.catalog) {
    for (const std::string& name : builtin_names()) {
      bool ok = false;
      try {
        RunOptions ro;
        ro.output = out / "catalog" / name;
        ok = run_scenario(builtin_scenario(name), ro).pass();
      } catch (const std::exception&) {
        ok = false;
      }
      rep.catalog.emplace_back(name, ok);
      summary["catalog"].push_back({{"name", name}, {"pass", ok}});
    }
    // heat flow and the two-solution run have no manifest of their own
    const Theorem4Report h = theorem4_parabolic_scenario(builtin_scenario("heat-box"),
                                                         {0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 8.0});
    write_file_atomic(out / "catalog" / "heat-box.csv", h.table().to_csv());
    rep.catalog.emplace_back("heat-box:deltas", h.pass());
    summary["catalog"].push_back({{"name", "heat-box:deltas"},
                                  {"pass", h.pass()},
                                  {"fitted_delta", json_number(h.fitted_delta)},
                                  {"oracle_gap", json_number(h.oracle_gap)}});
    const ScenarioConfig nc = builtin_scenario("nonlinear-pair");
    InitialConfig second = nc.initial;
    second.params["amplitude"] = 1.01;
    const NonlinearReport n = nonlinear_difference_scenario(nc, second);
    write_file_atomic(out / "catalog" / "nonlinear-pair.csv", n.table().to_csv());
    const bool nok = std::isfinite(n.growth_rate);
    rep.catalog.emplace_back("nonlinear-pair:difference", nok);
    summary["catalog"].push_back({{"name", "nonlinear-pair:difference"},
                                  {"pass", nok},
                                  {"growth_rate", json_number(n.growth_rate)},
                                  {"max_w", json_number(n.max_w)}});
  }
  write_file_atomic(out / "battery.json", summary.dump(2) + "\n");
  return rep;
}

}  // namespace

BatteryReport run_battery(const fs::path& out, const BatteryOptions& opt) {
  BatteryReport rep = run_once(out, opt, true);
  if (!opt.determinism) return rep;
  CriterionResult r;
  r.id = 10;
  r.key = "determinism";
  r.title = "byte-identical output trees on rerun";
  detail::Stopwatch sw;
  const fs::path scratch = out.parent_path() / (out.filename().string() + ".rerun");
  try {
    fs::remove_all(scratch);
    BatteryOptions quiet = opt;
    quiet.on_result = nullptr;
    run_once(scratch, quiet, false);
    const TreeDiff d = compare_trees(out, scratch);
    r.pass = d.identical();
    r.metrics = {{"files", list_tree(out).size()},
                 {"only_first", d.only_left},
                 {"only_second", d.only_right},
                 {"differing", d.differing}};
  } catch (const std::exception& e) {
    r.pass = false;
    r.error = e.what();
  }
  std::error_code ec;
  fs::remove_all(scratch, ec);
  r.seconds = sw.seconds();
  if (opt.on_result) opt.on_result(r);
  rep.criteria.push_back(std::move(r));
  return rep;
}

}  // namespace hardylab

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "hardylab/operators.hpp"
#include "oracles.hpp"

using namespace hardylab;

namespace {

Field gaussian(const Grid& g, double c, double shift = 0.0) {
  return Field::sample(g, [=](const Point& x, int comp) {
    const double y = x[0] - shift * comp;
    return cplx(std::exp(-c * (y * y + x[1] * x[1])) / (1.0 + comp));
  });
}

// smooth random field: a few random modes under a Gaussian envelope
Field smooth_random(const Grid& g, std::mt19937_64& rng, double width = 1.0) {
  std::normal_distribution<double> nd;
  std::vector<cplx> amp(6 * g.components());
  for (auto& a : amp) a = cplx(nd(rng), nd(rng));
  return Field::sample(g, [&](const Point& x, int c) {
    cplx s{};
    for (int k = 0; k < 6; ++k) s += amp[c * 6 + k] * std::exp(cplx(0.0, 0.4 * k * (x[0] + 0.5 * x[1])));
    return s * std::exp(-(x[0] * x[0] + x[1] * x[1]) / (2 * width * width));
  });
}

}  // namespace

TEST_CASE("expression grammar") {
  auto e = Expression::parse("-x1^2 + 3*exp(-x2)/2 - cos(pi*t) + abs(x1)");
  CHECK(e.evaluate(2.0, 0.0, 0.0) == doctest::Approx(-4.0 + 1.5 - 1.0 + 2.0));
  CHECK(e.evaluate(-1.0, 1.0, 1.0) == doctest::Approx(-1.0 + 1.5 * std::exp(-1.0) + 1.0 + 1.0));
  auto d = Expression::parse("x1^3*sin(x1) + exp(2*x1)").derivative(Expression::Var::x1);
  const double x = 0.7;
  CHECK(d.evaluate(x, 0, 0) ==
        doctest::Approx(3 * x * x * std::sin(x) + x * x * x * std::cos(x) + 2 * std::exp(2 * x)).epsilon(1e-13));
  CHECK(Expression::parse("x2*t").derivative(Expression::Var::x1).evaluate(1, 2, 3) == 0.0);
  CHECK(Expression::parse("2^x1").derivative(Expression::Var::x1).evaluate(1.5, 0, 0) ==
        doctest::Approx(std::log(2.0) * std::pow(2.0, 1.5)));
  CHECK_THROWS_AS(Expression::parse("x1 + "), ExpressionError);
  CHECK_THROWS_AS(Expression::parse("log(x1)"), ExpressionError);
  CHECK_THROWS_AS(Expression::parse("(x1"), ExpressionError);
}

TEST_CASE("apply_potential") {
  const Grid g = Grid::make(1, 64, 6.0, 2);
  const Field f = gaussian(g, 1.0, 0.5);
  CHECK(l2_norm(apply_potential(MatrixPotential::zero(g), f)) == 0.0);
  CHECK(l2_norm(apply_potential(MatrixPotential::constant(g, RealMatrix::Identity(2, 2)), f) - f) == 0.0);
  RealMatrix swap(2, 2);
  swap << 0, 1, 1, 0;
  const Field s = apply_potential(MatrixPotential::constant(g, swap), f);
  for (std::size_t p = 0; p < g.point_count(); ++p) {
    CHECK(s(p, 0) == f(p, 1));
    CHECK(s(p, 1) == f(p, 0));
  }
  RealMatrix bad(2, 2);
  bad << 0, 1, 2, 0;
  CHECK_THROWS_AS(MatrixPotential::constant(g, bad), InvalidArgument);
  CHECK_THROWS_AS(apply_potential(MatrixPotential::constant(g, swap), gaussian(g.with_components(1), 1.0)),
                  InvalidArgument);

  // linearity with an x-dependent potential
  auto a = MatrixPotential::sampled(g, [](const Point& x) {
    RealMatrix m(2, 2);
    m << std::cos(x[0]), 0.3 * x[0], 0.3 * x[0], -x[0] * x[0];
    return m;
  });
  std::mt19937_64 rng(3);
  const Field u = smooth_random(g, rng), v = smooth_random(g, rng);
  const cplx al(0.3, -1.2), be(-2.0, 0.5);
  Field lhs = apply_potential(a, al * u + be * v);
  Field rhs = al * apply_potential(a, u) + be * apply_potential(a, v);
  CHECK(l2_norm(lhs - rhs) <= 1e-14 * l2_norm(lhs));
}

TEST_CASE("supplied derivatives are checked") {
  const Grid g = Grid::make(1, 64, 4.0, 1);
  auto entry = [](const Point& x) { return RealMatrix::Constant(1, 1, -x[0] * x[0]); };
  auto good = [](const Point& x) { return RealMatrix::Constant(1, 1, -2.0 * x[0]); };
  auto wrong = [](const Point& x) { return RealMatrix::Constant(1, 1, -2.0 * x[0] + 1e-3); };
  auto a = MatrixPotential::sampled(g, entry, {good});
  CHECK(a.derivative_gap() < 1e-9);
  CHECK_THROWS_AS(MatrixPotential::sampled(g, entry, {wrong}), InvalidArgument);

  auto ex = MatrixPotential::from_expressions(g, {{Expression::parse("-x1^2")}});
  CHECK(ex.derivative(0, 10)(0, 0) == doctest::Approx(-2.0 * g.position(10)[0]));
  CHECK(MatrixPotential::from_expressions(g, {{Expression::parse("2.5")}}).is_constant());
}

TEST_CASE("dilation form against brute-force quadrature") {
  const Grid g = Grid::make(1, 256, 8.0, 1);
  const Field f = gaussian(g, 1.0);
  CHECK(dilation_form(MatrixPotential::zero(g), f) == 0.0);

  // A = -x^2: x(-x^2 f' + 2x f) f with f = e^{-x^2}
  auto a = MatrixPotential::from_expressions(g, {{Expression::parse("-x1^2")}});
  const double ref = oracle::simpson(
      [](double x) {
        const double fx = std::exp(-x * x), df = -2 * x * fx;
        return x * (-x * x * df + 2 * x * fx) * fx;
      },
      -8, 8);
  const auto rep = check_dilation_positivity(a, {f});
  CHECK(std::abs(rep.values[0] - ref) < 1e-9);
  CHECK(rep.pass);
  CHECK(ref > 0.0);

  // constant symmetric A on a two-component probe
  const Grid g2 = Grid::make(1, 256, 8.0, 2);
  RealMatrix m(2, 2);
  m << 1.0, 0.4, 0.4, -0.7;
  const Field h = gaussian(g2, 1.0, 1.0);
  auto comp = [](int c, double x) {
    const double y = x - c;
    return std::exp(-y * y) / (1.0 + c);
  };
  auto dcomp = [&](int c, double x) { return -2.0 * (x - c) * comp(c, x); };
  const double ref2 = oracle::simpson(
      [&](double x) {
        double s = 0.0;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) s += x * m(i, j) * dcomp(j, x) * comp(i, x);
        return s;
      },
      -8, 8);
  const double v = dilation_form(MatrixPotential::constant(g2, m), h);
  CHECK(std::abs(v - ref2) < 1e-9);
  // value is -(n/2) int <A f, f>, not 0
  const double af = oracle::simpson(
      [&](double x) {
        double s = 0.0;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) s += m(i, j) * comp(j, x) * comp(i, x);
        return s;
      },
      -8, 8);
  CHECK(std::abs(v + 0.5 * af) < 1e-9);
}

TEST_CASE("imaginary positivity and semiboundedness") {
  const Grid g = Grid::make(1, 64, 6.0, 2);
  std::mt19937_64 rng(11);
  std::vector<Field> probes = {smooth_random(g, rng), smooth_random(g, rng), gaussian(g, 1.0, 0.0)};
  RealMatrix a(2, 2);
  a << -1.0, 0.5, 0.5, -2.0;
  const auto A = MatrixPotential::constant(g, a);
  const auto times = default_time_samples(5);

  ComplexMatrix vr(2, 2);
  vr << 0.3, 1.0, 1.0, -0.4;
  auto real_rep = check_im_positivity(A, TimePotential::constant_dynamic(vr), probes, times);
  CHECK(std::abs(real_rep.c0_probe) < 1e-14);
  CHECK(std::abs(real_rep.c0_matrix) < 1e-14);

  ComplexMatrix vi = cplx(0.0, 1.0) * ComplexMatrix::Identity(2, 2);
  auto id_rep = check_im_positivity(A, TimePotential::constant_dynamic(vi), probes, times);
  CHECK(id_rep.c0_probe == doctest::Approx(1.0));
  CHECK(id_rep.c0_matrix == doctest::Approx(1.0));

  ComplexMatrix vd = ComplexMatrix::Zero(2, 2);
  vd(0, 0) = cplx(0.0, 1.0);
  vd(1, 1) = cplx(0.0, 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((vd.imag()));
  const double oracle_min = es.eigenvalues()(0);
  auto d_rep = check_im_positivity(A, TimePotential::constant_dynamic(vd), probes, times);
  CHECK(d_rep.c0_matrix == doctest::Approx(oracle_min));
  CHECK(d_rep.c0_probe >= oracle_min - 1e-12);
  Field first = Field::sample(g, [](const Point& x, int c) { return cplx(c == 0 ? std::exp(-x[0] * x[0]) : 0.0); });
  CHECK(check_im_positivity(A, TimePotential::constant_dynamic(vd), {first}, times).c0_probe ==
        doctest::Approx(oracle_min));
  CHECK_FALSE(check_im_positivity(A, TimePotential::constant_dynamic(-vd), probes, times).holds);

  // global realness for real symmetric A and real V
  for (const auto& f : probes) CHECK(std::abs(potential_form(A, TimePotential::constant_dynamic(vr), f, 0.3).imag()) < 1e-10);

  Eigen::SelfAdjointEigenSolver<RealMatrix> ea(a);
  const auto sb = check_semiboundedness(A, probes);
  CHECK(sb.d_matrix == doctest::Approx(ea.eigenvalues()(1)));
  CHECK(sb.d_probe <= sb.d_matrix + 1e-12);

  // Phi = a Re - b Im; with V = i I and (a, b) = (0, 1): |Phi| / |u|^2 = 1
  CHECK(check_phi_bound(MatrixPotential::zero(g), TimePotential::constant_dynamic(vi), 0.0, 1.0, probes, times).c0 ==
        doctest::Approx(1.0));
}

TEST_CASE("potential bounds are recomputed") {
  const Grid g = Grid::make(1, 64, 4.0, 2);
  ComplexMatrix m1(2, 2);
  m1 << 1.0, 2.0, 2.0, 1.0;
  auto v = TimePotential::make(
      2, [m1](const Point& x) -> ComplexMatrix { return m1 * std::exp(-x[0] * x[0]); },
      [](const Point&, double t) -> ComplexMatrix {
        ComplexMatrix m = ComplexMatrix::Zero(2, 2);
        m(0, 0) = cplx(t, 5.0);
        return m;
      });
  const auto b = v.bounds(g);
  CHECK(b.m1 == doctest::Approx(3.0));  // eigenvalues 3, -1 at x = 0
  CHECK(b.b_v2 == doctest::Approx(1.0));
  CHECK(b.sup_v2 == doctest::Approx(std::sqrt(26.0)));
  CHECK(b.time_samples == 65);
}

TEST_CASE("S/K decomposition") {
  const Grid g = Grid::make(1, 128, 8.0, 2);
  RealMatrix a(2, 2);
  a << 0.5, -1.0, -1.0, 0.2;
  const auto A = MatrixPotential::constant(g, a);
  std::mt19937_64 rng(5);
  const Field f = smooth_random(g, rng);

  SUBCASE("weightless Schrodinger case") {
    auto dec = build_sk(A, TimePotential::zero(2), 0.0, 1.0, 0.0, WeightSample::quadratic(g));
    Field sum = dec.apply_S(f) + dec.apply_K(f);
    Field expect = cplx(0.0, 1.0) * (laplacian(f) + apply_potential(A, f));
    CHECK(l2_norm(sum - expect) <= 1e-10 * l2_norm(f));
  }

  SUBCASE("symmetry and skewness on random pairs") {
    auto Ax = MatrixPotential::from_expressions(
        g, {{Expression::parse("cos(x1)"), Expression::parse("0.2*x1")},
            {Expression::parse("0.2*x1"), Expression::parse("-x1^2/10")}});
    for (auto coef : {std::pair{0.0, 1.0}, std::pair{1.0, 0.0}, std::pair{0.7, -1.3}}) {
      auto dec = build_sk(Ax, TimePotential::zero(2), coef.first, coef.second, 0.3, WeightSample::quadratic(g));
      for (int i = 0; i < 20; ++i) {
        const Field u = smooth_random(g, rng, 1.5), v = smooth_random(g, rng, 1.5);
        const double scale = l2_norm(u) * l2_norm(v);
        CHECK(std::abs(inner_product(dec.apply_S(u), v) - inner_product(u, dec.apply_S(v))) <= 1e-8 * scale);
        CHECK(std::abs(inner_product(dec.apply_K(u), v) + inner_product(u, dec.apply_K(v))) <= 1e-8 * scale);
      }
    }
  }

  SUBCASE("pointwise spot check of the heat case") {
    const Grid g1 = Grid::make(1, 256, 8.0, 1);
    auto dec = build_sk(MatrixPotential::zero(g1), TimePotential::zero(1), 1.0, 0.0, 1.0, WeightSample::quadratic(g1));
    const Field u = Field::sample(g1, [](const Point& x, int) { return cplx(std::exp(-x[0] * x[0])); });
    const Field s = dec.apply_S(u);
    for (std::size_t p : {100u, 128u, 150u}) {
      const double x = g1.position(p)[0];
      const double hand = (4 * x * x - 2) * std::exp(-x * x) + 4 * x * x * std::exp(-x * x);
      CHECK(std::abs(s(p, 0) - hand) < 1e-10);
    }
  }

  CHECK_THROWS_AS(build_sk(A, TimePotential::zero(2), -0.1, 1.0, 0.0, WeightSample::quadratic(g)), InvalidArgument);
  CHECK_THROWS_AS(build_sk(A, TimePotential::zero(2), 0.0, 0.0, 0.0, WeightSample::quadratic(g)), InvalidArgument);
}

TEST_CASE("commutator closed form against nested operators") {
  const Grid g = Grid::make(1, 256, 8.0, 2);
  RealMatrix a(2, 2);
  a << 0.5, -1.0, -1.0, 0.2;
  const Field f = gaussian(g, 1.0, 0.7);
  for (auto coef : {std::pair{0.0, 1.0}, std::pair{1.0, 0.0}, std::pair{0.6, 0.8}}) {
    auto dec = build_sk(MatrixPotential::constant(g, a), TimePotential::zero(2), coef.first, coef.second, 1.0,
                        WeightSample::quadratic(g));
    const auto r = commutator_form(dec, f, 0.0);
    CHECK(r.relative_gap < 1e-6);
    CHECK(r.closed_form > 0.0);
  }

  // x-dependent A: the A term is 2 gamma k^2 int <(grad phi . grad A) f, f>
  auto Ax = MatrixPotential::from_expressions(
      g, {{Expression::parse("cos(x1)"), Expression::parse("0.2*x1")},
          {Expression::parse("0.2*x1"), Expression::parse("-x1^2/10")}});
  auto dec = build_sk(Ax, TimePotential::zero(2), 0.0, 1.0, 0.5, WeightSample::quadratic(g));
  const auto r = commutator_form(dec, f, 0.0);
  CHECK(r.relative_gap < 1e-6);
  CHECK(std::abs(r.printed - r.nested) > 1e-3 * std::abs(r.nested));

  // A = 0, gamma = 1, f = e^{-x^2}: 8 int |f'|^2 + 32 int x^2 |f|^2
  const Grid g1 = Grid::make(1, 256, 8.0, 1);
  auto d1 = build_sk(MatrixPotential::zero(g1), TimePotential::zero(1), 0.0, 1.0, 1.0, WeightSample::quadratic(g1));
  const Field u = Field::sample(g1, [](const Point& x, int) { return cplx(std::exp(-x[0] * x[0])); });
  const double ref = oracle::simpson(
      [](double x) {
        const double e = std::exp(-x * x);
        return 8 * 4 * x * x * e * e + 32 * x * x * e * e;
      },
      -8, 8);
  const auto r1 = commutator_form(d1, u, 0.0);
  CHECK(r1.closed_form == doctest::Approx(ref).epsilon(1e-10));
  CHECK(r1.nested == doctest::Approx(ref).epsilon(1e-8));
  CHECK(commutator_form(d1, Field(g1), 0.0).closed_form == 0.0);

  auto general = WeightSample::quadratic(g1);
  general.kind = WeightSample::Kind::general;
  CHECK_THROWS_AS(commutator_form(build_sk(MatrixPotential::zero(g1), TimePotential::zero(1), 0.0, 1.0, 1.0, general), u, 0.0),
                  InvalidArgument);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "hardylab/field.hpp"
#include "oracles.hpp"

using namespace hardylab;

namespace {

Field gaussian(const Grid& g, double c) {
  return Field::sample(g, [c](const Point& x, int) { return cplx(std::exp(-c * (x[0] * x[0] + x[1] * x[1]))); });
}

Field random_field(const Grid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Field f(g);
  for (auto& v : f.values()) v = cplx(nd(rng), nd(rng));
  return f;
}

double rel_diff(const Field& a, const Field& b) { return l2_norm(a - b) / std::max(l2_norm(a), 1e-300); }

}  // namespace

TEST_CASE("grid construction") {
  const Grid g = Grid::make(1, 8, 1.0, 1);
  CHECK(g.spacing() == doctest::Approx(0.25));
  const auto xi = g.centered_frequencies();
  REQUIRE(xi.size() == 8);
  for (int k = -4; k <= 3; ++k) CHECK(xi[k + 4] == doctest::Approx(oracle::pi * k));
  CHECK(g.axis_frequencies()[0] == 0.0);

  const Grid g2 = Grid::make(2, 16, 4.0, 3);
  CHECK(g2.point_count() == 256);
  CHECK(g2.components() == 3);
  CHECK(g2.outer_shell().size() == 60);

  CHECK_THROWS_AS(Grid::make(1, 7, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(Grid::make(1, 4, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(Grid::make(1, 8, 0.0, 1), InvalidArgument);
  CHECK_THROWS_AS(Grid::make(1, 8, 1.0, 0), InvalidArgument);
  CHECK_THROWS_AS(Grid::make(3, 8, 1.0, 1), InvalidArgument);
}

TEST_CASE("transform of a constant and of a lattice plane wave") {
  const Grid g = Grid::make(1, 32, 2.0, 2);
  Field c = Field::sample(g, [](const Point&, int comp) { return cplx(1.5, -0.5 * comp); });
  auto s = forward_transform(c);
  for (std::size_t k = 1; k < g.point_count(); ++k) CHECK(std::abs(s(k, 0)) < 1e-14);
  CHECK(std::abs(s(0, 0)) > 1.0);

  const double xi0 = g.frequency_step() * 5;
  Field w = Field::sample(g, [xi0](const Point& x, int) { return std::exp(cplx(0.0, xi0 * x[0])); });
  auto sw = forward_transform(w);
  for (std::size_t k = 0; k < g.point_count(); ++k) {
    if (k == 5) CHECK(std::abs(sw(k, 0)) > 1.0);
    else CHECK(std::abs(sw(k, 0)) < 1e-13);
  }
}

TEST_CASE("Gaussian spectrum matches the analytic Fourier pair") {
  const Grid g = Grid::make(1, 256, 16.0, 1);
  const auto s = forward_transform(gaussian(g, 1.0));
  double err = 0.0;
  for (std::size_t k = 0; k < g.point_count(); ++k) {
    const double xi = s.frequency(k)[0];
    err = std::max(err, std::abs(s(k, 0) - oracle::gaussian_fourier(1.0, xi)));
  }
  CHECK(err < 1e-10);

  const Grid g2 = Grid::make(2, 64, 8.0, 1);
  const auto s2 = forward_transform(gaussian(g2, 0.5));
  double err2 = 0.0;
  for (std::size_t k = 0; k < g2.point_count(); ++k) {
    const auto xi = s2.frequency(k);
    err2 = std::max(err2, std::abs(s2(k, 0) - oracle::gaussian_fourier(0.5, xi[0]) * oracle::gaussian_fourier(0.5, xi[1])));
  }
  CHECK(err2 < 1e-10);
}

TEST_CASE("Parseval and round trip over random fields") {
  std::mt19937_64 rng(7);
  const Grid grids[] = {Grid::make(1, 64, 3.0, 2), Grid::make(2, 16, 1.5, 3), Grid::make(1, 512, 16.0, 1)};
  for (int i = 0; i < 120; ++i) {
    const Grid& g = grids[i % 3];
    const Field f = random_field(g, rng);
    const auto s = forward_transform(f);
    CHECK(std::abs(l2_norm(s) - l2_norm(f)) / l2_norm(f) < 1e-12);
    CHECK(rel_diff(f, inverse_transform(s)) < 1e-12);
  }
}

TEST_CASE("inner products and norms") {
  const Grid g = Grid::make(1, 64, 1.0, 1);
  Field one = Field::sample(g, [](const Point&, int) { return cplx(1.0); });
  CHECK(std::pow(l2_norm(one), 2) == doctest::Approx(2.0).epsilon(1e-14));

  const Grid g4 = Grid::make(1, 64, 4.0, 1);
  const double dk = g4.frequency_step();
  Field e1 = Field::sample(g4, [dk](const Point& x, int) { return std::exp(cplx(0.0, 3 * dk * x[0])); });
  Field e2 = Field::sample(g4, [dk](const Point& x, int) { return std::exp(cplx(0.0, -7 * dk * x[0])); });
  CHECK(std::abs(inner_product(e1, e2)) < 1e-12);

  const Grid gg = Grid::make(1, 512, 16.0, 1);
  const double ref = std::sqrt(oracle::simpson([](double x) { return std::exp(-2 * x * x); }, -16, 16));
  CHECK(std::abs(l2_norm(gaussian(gg, 1.0)) - ref) < 1e-10);
  CHECK(std::abs(ref - std::pow(oracle::pi / 2, 0.25)) < 1e-10);

  const Grid other = Grid::make(1, 32, 16.0, 1);
  CHECK_THROWS_AS(inner_product(gaussian(gg, 1.0), gaussian(other, 1.0)), InvalidArgument);
}

TEST_CASE("weighted norms") {
  const Grid g = Grid::make(1, 512, 16.0, 1);
  const Field f = gaussian(g, 1.0);
  CHECK(weighted_l2_norm(f, WeightProfile::gaussian(g, 0.0)) == l2_norm(f));

  const double ref = std::sqrt(oracle::simpson([](double x) { return std::exp(0.5 * x * x - 2 * x * x); }, -16, 16));
  const double w = weighted_l2_norm(f, WeightProfile::gaussian(g, 0.25));
  CHECK(std::abs(w - ref) < 1e-6);
  CHECK(w == doctest::Approx(1.2030).epsilon(1e-4));
  CHECK(std::exp(log_weighted_l2_norm(f, WeightProfile::gaussian(g, 0.25))) == doctest::Approx(w).epsilon(1e-13));

  CHECK_THROWS_AS(weighted_l2_norm(f, WeightProfile::gaussian(g, 1.5)), TailNotResolved);

  // plane waves are not tail resolved either
  Field flat = Field::sample(g, [](const Point&, int) { return cplx(1.0); });
  CHECK_THROWS_AS(weighted_l2_norm(flat, WeightProfile::unit(g)), TailNotResolved);

  // huge weights stay finite in log form
  const Grid g2 = Grid::make(1, 256, 8.0, 1);
  const Field narrow = gaussian(g2, 20.0);
  const double lg = log_weighted_l2_norm(narrow, WeightProfile::gaussian(g2, 19.0));
  const double lref = 0.5 * std::log(oracle::simpson([](double x) { return std::exp(-2 * x * x); }, -8, 8));
  CHECK(std::abs(lg - lref) < 1e-8);

  CHECK(weighted_l2_norm(Field(g), WeightProfile::gaussian(g, 0.5)) == 0.0);
}

TEST_CASE("spectral gradient") {
  const Grid g = Grid::make(1, 64, 2.0, 1);
  for (int k : {-32, -5, 0, 7, 31}) {
    const double xi = g.frequency_step() * k;
    Field w = Field::sample(g, [xi](const Point& x, int) { return std::exp(cplx(0.0, xi * x[0])); });
    Field expect = cplx(0.0, xi) * w;
    CHECK(l2_norm(gradient(w)[0] - expect) <= 1e-12 * std::max(1.0, std::abs(xi)) * l2_norm(w));
  }
  Field c = Field::sample(g, [](const Point&, int) { return cplx(2.0, 1.0); });
  CHECK(l2_norm(gradient(c)[0]) < 1e-13);

  const Grid gg = Grid::make(1, 512, 16.0, 1);
  const Field d = gradient(gaussian(gg, 1.0))[0];
  double err = 0.0;
  for (std::size_t p = 0; p < gg.point_count(); ++p) {
    const double x = gg.position(p)[0];
    if (std::abs(x) > 8.0) continue;
    err = std::max(err, std::abs(d(p, 0) - (-2.0 * x * std::exp(-x * x))));
  }
  CHECK(err < 1e-8);

  const Grid g2 = Grid::make(2, 64, 8.0, 2);
  const auto grad = gradient(gaussian(g2, 0.5));
  const Field lap = laplacian(gaussian(g2, 0.5));
  double e2 = 0.0;
  for (std::size_t p = 0; p < g2.point_count(); ++p) {
    const Point x = g2.position(p);
    const double r2 = x[0] * x[0] + x[1] * x[1];
    const double base = std::exp(-0.5 * r2);
    e2 = std::max(e2, std::abs(grad[1](p, 1) - (-x[1] * base)));
    e2 = std::max(e2, std::abs(lap(p, 0) - (r2 - 2.0) * base));
  }
  CHECK(e2 < 1e-10);
}

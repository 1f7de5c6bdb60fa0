#include "hardylab/field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "fft.hpp"

namespace hardylab {

namespace detail {

struct Lattice {
  std::vector<double> coords;
  std::vector<double> freqs;
  std::vector<double> r2;
  std::vector<double> xi2;
  std::vector<std::size_t> shell;
  std::vector<unsigned char> shell_flag;
};

namespace {

struct PlanCache {
  std::mutex mu;
  std::map<std::tuple<int, int, int>, fftw_plan> plans;

  fftw_plan get(int dim, int m, int sign) {
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(dim, m, sign);
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    const std::size_t P = dim == 1 ? m : static_cast<std::size_t>(m) * m;
    auto* buf = fftw_alloc_complex(P);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    const int fsign = sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD;
    fftw_plan plan = dim == 1 ? fftw_plan_dft_1d(m, buf, buf, fsign, flags)
                              : fftw_plan_dft_2d(m, m, buf, buf, fsign, flags);
    fftw_free(buf);
    plans.emplace(key, plan);
    return plan;
  }
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

}  // namespace

void fft_inplace(const Grid& grid, cplx* data, int sign) {
  fftw_plan plan = plan_cache().get(grid.dim(), grid.points_per_axis(), sign);
  auto* d = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, d, d);
}

}  // namespace detail

namespace {

bool is_power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw InvalidArgument(std::string(what) + ": grid mismatch");
}

}  // namespace

Grid Grid::make(int dim, int points_per_axis, double half_width, int component_count) {
  if (dim != 1 && dim != 2) throw InvalidArgument("grid dimension must be 1 or 2");
  if (!is_power_of_two(points_per_axis) || points_per_axis < 8)
    throw InvalidArgument("points_per_axis must be a power of two >= 8, got " +
                          std::to_string(points_per_axis));
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw InvalidArgument("half_width must be positive and finite");
  if (component_count < 1 || component_count > kMaxComponents)
    throw InvalidArgument("component_count must be in [1, 16], got " + std::to_string(component_count));

  Grid g;
  g.dim_ = dim;
  g.m_ = points_per_axis;
  g.half_width_ = half_width;
  g.n_ = component_count;

  auto lat = std::make_shared<detail::Lattice>();
  const int M = points_per_axis;
  const double h = 2.0 * half_width / M;
  const double dk = std::numbers::pi / half_width;
  lat->coords.resize(M);
  lat->freqs.resize(M);
  for (int j = 0; j < M; ++j) {
    lat->coords[j] = -half_width + j * h;
    const int k = j < M / 2 ? j : j - M;
    lat->freqs[j] = dk * k;
  }
  const std::size_t P = dim == 1 ? M : static_cast<std::size_t>(M) * M;
  lat->r2.resize(P);
  lat->xi2.resize(P);
  lat->shell_flag.assign(P, 0);
  for (std::size_t p = 0; p < P; ++p) {
    if (dim == 1) {
      lat->r2[p] = lat->coords[p] * lat->coords[p];
      lat->xi2[p] = lat->freqs[p] * lat->freqs[p];
      lat->shell_flag[p] = (p == 0 || p == static_cast<std::size_t>(M - 1));
    } else {
      const std::size_t i = p / M, j = p % M;
      lat->r2[p] = lat->coords[i] * lat->coords[i] + lat->coords[j] * lat->coords[j];
      lat->xi2[p] = lat->freqs[i] * lat->freqs[i] + lat->freqs[j] * lat->freqs[j];
      const auto last = static_cast<std::size_t>(M - 1);
      lat->shell_flag[p] = (i == 0 || j == 0 || i == last || j == last);
    }
    if (lat->shell_flag[p]) lat->shell.push_back(p);
  }
  g.lattice_ = std::move(lat);
  return g;
}

std::size_t Grid::point_count() const {
  return dim_ == 1 ? static_cast<std::size_t>(m_) : static_cast<std::size_t>(m_) * m_;
}

double Grid::cell_volume() const { return std::pow(spacing(), dim_); }
double Grid::frequency_step() const { return std::numbers::pi / half_width_; }
double Grid::frequency_cell() const { return std::pow(frequency_step(), dim_); }

const std::vector<double>& Grid::axis_coordinates() const { return lattice_->coords; }
const std::vector<double>& Grid::axis_frequencies() const { return lattice_->freqs; }

std::vector<double> Grid::centered_frequencies() const {
  std::vector<double> out(m_);
  for (int j = 0; j < m_; ++j) out[j] = frequency_step() * (j - m_ / 2);
  return out;
}

Point Grid::position(std::size_t p) const {
  if (dim_ == 1) return {lattice_->coords[p], 0.0};
  return {lattice_->coords[p / m_], lattice_->coords[p % m_]};
}

double Grid::radius_sq(std::size_t p) const { return lattice_->r2[p]; }
double Grid::frequency_sq(std::size_t p) const { return lattice_->xi2[p]; }

int Grid::axis_index(std::size_t p, int axis) const {
  if (dim_ == 1) return static_cast<int>(p);
  return axis == 0 ? static_cast<int>(p / m_) : static_cast<int>(p % m_);
}

bool Grid::on_outer_shell(std::size_t p) const { return lattice_->shell_flag[p] != 0; }
const std::vector<std::size_t>& Grid::outer_shell() const { return lattice_->shell; }

Grid Grid::with_components(int n) const {
  if (n < 1 || n > kMaxComponents) throw InvalidArgument("component_count must be in [1, 16]");
  Grid g = *this;
  g.n_ = n;
  return g;
}

bool Grid::same_lattice(const Grid& o) const {
  return dim_ == o.dim_ && m_ == o.m_ && half_width_ == o.half_width_;
}

bool Grid::operator==(const Grid& o) const { return same_lattice(o) && n_ == o.n_; }

// ---------------------------------------------------------------- Field

Field::Field(const Grid& grid, double time)
    : grid_(grid), points_(grid.point_count()), values_(points_ * grid.components()), time_(time) {}

Field::Field(const Grid& grid, std::vector<cplx> values, double time)
    : grid_(grid), points_(grid.point_count()), values_(std::move(values)), time_(time) {
  if (values_.size() != points_ * grid.components())
    throw InvalidArgument("field value count does not match grid");
  if (!all_finite()) throw InvalidArgument("field has non-finite entries");
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

bool Field::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](const cplx& z) { return z == cplx{}; });
}

Field& Field::operator+=(const Field& o) {
  require_same_grid(grid_, o.grid_, "field addition");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  require_same_grid(grid_, o.grid_, "field subtraction");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

Field& Field::operator*=(cplx s) {
  for (auto& v : values_) v *= s;
  return *this;
}

Field& Field::axpy(cplx s, const Field& o) {
  require_same_grid(grid_, o.grid_, "field axpy");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * o.values_[i];
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(cplx s, Field a) { return a *= s; }

// ---------------------------------------------------------------- spectral

SpectralField::SpectralField(const Grid& grid, std::vector<cplx> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid.point_count() * grid.components())
    throw InvalidArgument("spectral value count does not match grid");
}

std::array<double, 2> SpectralField::frequency(std::size_t k) const {
  const auto& fr = grid_.axis_frequencies();
  if (grid_.dim() == 1) return {fr[k], 0.0};
  const std::size_t M = grid_.points_per_axis();
  return {fr[k / M], fr[k % M]};
}

namespace {

// h^n (2pi)^{-n/2} and the (-1)^{k} phase from the box offset -L
double spectral_scale(const Grid& g) {
  return g.cell_volume() * std::pow(2.0 * std::numbers::pi, -0.5 * g.dim());
}

bool odd_parity(const Grid& g, std::size_t k) {
  if (g.dim() == 1) return k & 1;
  const std::size_t M = g.points_per_axis();
  return ((k / M) + (k % M)) & 1;
}

}  // namespace

SpectralField forward_transform(const Field& f) {
  if (!f.all_finite()) throw InvalidArgument("forward_transform: non-finite input");
  const Grid& g = f.grid();
  std::vector<cplx> out = f.values();
  const std::size_t P = g.point_count();
  const double s = spectral_scale(g);
  for (int c = 0; c < g.components(); ++c) {
    cplx* d = out.data() + c * P;
    detail::fft_inplace(g, d, -1);
    for (std::size_t k = 0; k < P; ++k) d[k] *= odd_parity(g, k) ? -s : s;
  }
  return SpectralField(g, std::move(out));
}

Field inverse_transform(const SpectralField& sf) {
  const Grid& g = sf.grid();
  std::vector<cplx> out = sf.values();
  for (const auto& z : out)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw InvalidArgument("inverse_transform: non-finite input");
  const std::size_t P = g.point_count();
  const double s = 1.0 / (spectral_scale(g) * static_cast<double>(P));
  for (int c = 0; c < g.components(); ++c) {
    cplx* d = out.data() + c * P;
    for (std::size_t k = 0; k < P; ++k) d[k] *= odd_parity(g, k) ? -s : s;
    detail::fft_inplace(g, d, +1);
  }
  return Field(g, std::move(out));
}

// ---------------------------------------------------------------- norms

std::vector<double> pointwise_norm_sq(const Field& f) {
  const std::size_t P = f.points();
  std::vector<double> s(P, 0.0);
  for (int c = 0; c < f.components(); ++c) {
    auto comp = f.component(c);
    for (std::size_t p = 0; p < P; ++p) s[p] += std::norm(comp[p]);
  }
  return s;
}

cplx inner_product(const Field& f, const Field& g) {
  require_same_grid(f.grid(), g.grid(), "inner_product");
  cplx acc{};
  const auto& a = f.values();
  const auto& b = g.values();
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * std::conj(b[i]);
  return acc * f.grid().cell_volume();
}

namespace {

// returns sum_p w_p^2 s_p / e^{shift}; the unit weight takes the plain path so it matches l2_norm bit for bit
double shifted_sum(const std::vector<double>& s, const std::vector<double>* logw, double& shift) {
  shift = 0.0;
  const bool plain = !logw || std::all_of(logw->begin(), logw->end(), [](double v) { return v == 0.0; });
  double acc = 0.0;
  if (plain) {
    for (std::size_t p = 0; p < s.size(); ++p) acc += s[p];
    return acc;
  }
  shift = -INFINITY;
  for (std::size_t p = 0; p < s.size(); ++p)
    if (s[p] > 0.0) shift = std::max(shift, 2.0 * (*logw)[p] + std::log(s[p]));
  if (!std::isfinite(shift)) {
    shift = 0.0;
    return 0.0;
  }
  for (std::size_t p = 0; p < s.size(); ++p)
    if (s[p] > 0.0) acc += std::exp(2.0 * (*logw)[p] + std::log(s[p]) - shift);
  return acc;
}

}  // namespace

double l2_norm(const Field& f) {
  double shift = 0.0;
  const double acc = shifted_sum(pointwise_norm_sq(f), nullptr, shift);
  return std::sqrt(f.grid().cell_volume() * acc);
}

double l2_norm(const SpectralField& g) {
  double acc = 0.0;
  for (const auto& z : g.values()) acc += std::norm(z);
  return std::sqrt(g.grid().frequency_cell() * acc);
}

WeightProfile WeightProfile::gaussian(const Grid& grid, double gamma) {
  std::vector<double> lw(grid.point_count());
  for (std::size_t p = 0; p < lw.size(); ++p) lw[p] = gamma * grid.radius_sq(p);
  return WeightProfile(std::move(lw));
}

WeightProfile WeightProfile::unit(const Grid& grid) {
  return WeightProfile(std::vector<double>(grid.point_count(), 0.0));
}

WeightProfile WeightProfile::from_log(const Grid& grid, std::vector<double> log_weight) {
  if (log_weight.size() != grid.point_count()) throw InvalidArgument("weight size does not match grid");
  for (double v : log_weight)
    if (!std::isfinite(v)) throw InvalidArgument("weight must be finite at all grid points");
  return WeightProfile(std::move(log_weight));
}

TailReport tail_check(const Grid& grid, std::span<const double> log_integrand, double tol) {
  TailReport r;
  double gmax = -INFINITY, smax = -INFINITY;
  for (std::size_t p = 0; p < log_integrand.size(); ++p) gmax = std::max(gmax, log_integrand[p]);
  for (std::size_t p : grid.outer_shell()) smax = std::max(smax, log_integrand[p]);
  if (!std::isfinite(gmax)) {
    r.shell_max = 0.0;
    r.global_max = 0.0;
    r.resolved = true;
    return r;
  }
  // reported relative to the global maximum
  r.global_max = 1.0;
  r.shell_max = std::exp(smax - gmax);
  r.resolved = smax - gmax <= std::log(tol);
  return r;
}

void require_tail_resolved(const Field& f, const WeightProfile& w, const std::string& what) {
  const auto s = pointwise_norm_sq(f);
  std::vector<double> plain(s.size()), weighted(s.size());
  const auto& lw = w.log_weight();
  for (std::size_t p = 0; p < s.size(); ++p) {
    plain[p] = s[p] > 0.0 ? std::log(s[p]) : -INFINITY;
    weighted[p] = plain[p] + 2.0 * lw[p];
  }
  const auto a = tail_check(f.grid(), plain, w.tail_tol());
  if (!a.resolved)
    throw TailNotResolved(what + ": unweighted integrand at the box edge is " + std::to_string(a.shell_max) +
                          " of its maximum");
  const auto b = tail_check(f.grid(), weighted, w.tail_tol());
  if (!b.resolved)
    throw TailNotResolved(what + ": weighted integrand at the box edge is " + std::to_string(b.shell_max) +
                          " of its maximum");
}

double log_weighted_l2_norm(const Field& f, const WeightProfile& w) {
  if (w.log_weight().size() != f.points()) throw InvalidArgument("weight size does not match field");
  require_tail_resolved(f, w, "weighted_l2_norm");
  double shift = 0.0;
  const double acc = shifted_sum(pointwise_norm_sq(f), &w.log_weight(), shift);
  if (acc == 0.0) return -INFINITY;
  return 0.5 * (std::log(f.grid().cell_volume() * acc) + shift);
}

double weighted_l2_norm(const Field& f, const WeightProfile& w) {
  if (w.log_weight().size() != f.points()) throw InvalidArgument("weight size does not match field");
  require_tail_resolved(f, w, "weighted_l2_norm");
  double shift = 0.0;
  const double acc = shifted_sum(pointwise_norm_sq(f), &w.log_weight(), shift);
  const double base = std::sqrt(f.grid().cell_volume() * acc);
  return shift == 0.0 ? base : base * std::exp(0.5 * shift);
}

// ---------------------------------------------------------------- derivatives

Field partial(const Field& f, int axis) {
  const Grid& g = f.grid();
  if (axis < 0 || axis >= g.dim()) throw InvalidArgument("partial: axis out of range");
  const auto& fr = g.axis_frequencies();
  const std::size_t M = g.points_per_axis();
  return detail::apply_multiplier(f, [&](std::size_t k) {
    const std::size_t j = g.dim() == 1 ? k : (axis == 0 ? k / M : k % M);
    return cplx(0.0, fr[j]);
  });
}

std::vector<Field> gradient(const Field& f) {
  std::vector<Field> out;
  for (int a = 0; a < f.grid().dim(); ++a) out.push_back(partial(f, a));
  return out;
}

Field laplacian(const Field& f) {
  const Grid& g = f.grid();
  return detail::apply_multiplier(f, [&](std::size_t k) { return cplx(-g.frequency_sq(k), 0.0); });
}

}  // namespace hardylab

#include "hardylab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fft.hpp"

namespace hardylab {

namespace {

void require_components(const Grid& g, int n, const char* what) {
  if (g.components() != n)
    throw InvalidArgument(std::string(what) + ": field has " + std::to_string(g.components()) +
                          " components, potential is " + std::to_string(n) + "x" + std::to_string(n));
}

// out(p,:) = M(p) f(p,:) for a per-point matrix accessor
template <class MatAt>
Field apply_pointwise(const Field& f, int n, MatAt&& mat_at) {
  Field out(f.grid(), f.time());
  const std::size_t P = f.points();
  Eigen::VectorXcd v(n), w(n);
  for (std::size_t p = 0; p < P; ++p) {
    for (int c = 0; c < n; ++c) v(c) = f(p, c);
    w = mat_at(p) * v;
    for (int c = 0; c < n; ++c) out(p, c) = w(c);
  }
  return out;
}

Field scale_pointwise(const Field& f, const std::vector<double>& s) {
  Field out = f;
  const std::size_t P = f.points();
  for (int c = 0; c < f.components(); ++c) {
    auto comp = out.component(c);
    for (std::size_t p = 0; p < P; ++p) comp[p] *= s[p];
  }
  return out;
}

double sum_weighted(const Field& f, const std::vector<double>& s) {
  const auto n2 = pointwise_norm_sq(f);
  double acc = 0.0;
  for (std::size_t p = 0; p < n2.size(); ++p) acc += s[p] * n2[p];
  return acc * f.grid().cell_volume();
}

}  // namespace

// ---------------------------------------------------------------- MatrixPotential

MatrixPotential MatrixPotential::zero(const Grid& grid) {
  MatrixPotential m(grid, grid.components());
  m.constant_ = true;
  m.zero_ = true;
  m.const_value_ = RealMatrix::Zero(m.n_, m.n_);
  m.const_zero_ = RealMatrix::Zero(m.n_, m.n_);
  return m;
}

MatrixPotential MatrixPotential::constant(const Grid& grid, const RealMatrix& a) {
  if (a.rows() != grid.components() || a.cols() != grid.components())
    throw InvalidArgument("constant potential must be " + std::to_string(grid.components()) + "x" +
                          std::to_string(grid.components()));
  if (!a.allFinite()) throw InvalidArgument("potential has non-finite entries");
  MatrixPotential m(grid, grid.components());
  m.constant_ = true;
  m.zero_ = (a.array() == 0.0).all();
  m.const_value_ = a;
  m.const_zero_ = RealMatrix::Zero(m.n_, m.n_);
  m.check_symmetric();
  return m;
}

MatrixPotential MatrixPotential::sampled(const Grid& grid, const EntryFn& entries) {
  MatrixPotential m(grid, grid.components());
  const std::size_t P = grid.point_count();
  const int n = m.n_;
  m.entries_.resize(P * n * n);
  for (std::size_t p = 0; p < P; ++p) {
    const RealMatrix a = entries(grid.position(p));
    if (a.rows() != n || a.cols() != n) throw InvalidArgument("potential entry function returned wrong shape");
    if (!a.allFinite()) throw InvalidArgument("potential has non-finite entries");
    std::copy(a.data(), a.data() + n * n, m.entries_.begin() + p * n * n);
  }
  m.check_symmetric();
  m.spectral_derivatives();
  return m;
}

MatrixPotential MatrixPotential::sampled(const Grid& grid, const EntryFn& entries,
                                         const std::vector<EntryFn>& derivatives) {
  if (static_cast<int>(derivatives.size()) != grid.dim())
    throw InvalidArgument("one derivative function per axis is required");
  MatrixPotential m(grid, grid.components());
  const std::size_t P = grid.point_count();
  const int n = m.n_;
  m.entries_.resize(P * n * n);
  m.derivatives_.assign(grid.dim(), std::vector<double>(P * n * n));
  const double delta = 1e-3;
  double gap = 0.0, scale = 1.0;
  for (std::size_t p = 0; p < P; ++p) {
    const Point x = grid.position(p);
    const RealMatrix a = entries(x);
    if (a.rows() != n || a.cols() != n) throw InvalidArgument("potential entry function returned wrong shape");
    if (!a.allFinite()) throw InvalidArgument("potential has non-finite entries");
    std::copy(a.data(), a.data() + n * n, m.entries_.begin() + p * n * n);
    for (int k = 0; k < grid.dim(); ++k) {
      const RealMatrix d = derivatives[k](x);
      if (d.rows() != n || d.cols() != n || !d.allFinite())
        throw InvalidArgument("derivative function returned wrong shape or non-finite values");
      std::copy(d.data(), d.data() + n * n, m.derivatives_[k].begin() + p * n * n);
      // fourth-order centred difference of the entry function itself
      auto shifted = [&](double s) {
        Point y = x;
        y[k] += s;
        return entries(y);
      };
      const RealMatrix fd =
          (-shifted(2 * delta) + 8.0 * shifted(delta) - 8.0 * shifted(-delta) + shifted(-2 * delta)) / (12 * delta);
      gap = std::max(gap, (fd - d).cwiseAbs().maxCoeff());
      scale = std::max(scale, d.cwiseAbs().maxCoeff());
    }
  }
  m.derivative_gap_ = gap / scale;
  if (m.derivative_gap_ > 1e-6)
    throw InvalidArgument("supplied derivatives disagree with the potential (relative gap " +
                          std::to_string(m.derivative_gap_) + ")");
  m.check_symmetric();
  return m;
}

MatrixPotential MatrixPotential::from_expressions(const Grid& grid,
                                                  const std::vector<std::vector<Expression>>& entries) {
  const int n = grid.components();
  if (static_cast<int>(entries.size()) != n) throw InvalidArgument("expression matrix has wrong row count");
  for (const auto& row : entries)
    if (static_cast<int>(row.size()) != n) throw InvalidArgument("expression matrix has wrong column count");
  bool all_constant = true;
  for (const auto& row : entries)
    for (const auto& e : row)
      if (e.depends_on(Expression::Var::x1) || e.depends_on(Expression::Var::x2)) all_constant = false;
  for (const auto& row : entries)
    for (const auto& e : row)
      if (e.depends_on(Expression::Var::t)) throw InvalidArgument("A(x) must not depend on t");
  auto eval = [&](const std::vector<std::vector<Expression>>& ex, const Point& x) {
    RealMatrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = ex[i][j].evaluate(x[0], x[1], 0.0);
    return a;
  };
  if (all_constant) return constant(grid, eval(entries, {0.0, 0.0}));
  std::vector<EntryFn> derivs;
  for (int k = 0; k < grid.dim(); ++k) {
    std::vector<std::vector<Expression>> d(n);
    const auto var = k == 0 ? Expression::Var::x1 : Expression::Var::x2;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d[i].push_back(entries[i][j].derivative(var));
    derivs.push_back([d, eval](const Point& x) { return eval(d, x); });
  }
  return sampled(grid, [&](const Point& x) { return eval(entries, x); }, derivs);
}

void MatrixPotential::check_symmetric() const {
  auto check = [&](const double* a, const char* what) {
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j)
        if (a[i + j * n_] != a[j + i * n_]) throw InvalidArgument(std::string(what) + " is not symmetric");
  };
  if (constant_) {
    check(const_value_.data(), "potential matrix");
    return;
  }
  const std::size_t P = grid_.point_count();
  for (std::size_t p = 0; p < P; ++p) check(entries_.data() + p * n_ * n_, "potential matrix");
  for (const auto& d : derivatives_)
    for (std::size_t p = 0; p < P; ++p) check(d.data() + p * n_ * n_, "potential derivative");
}

void MatrixPotential::spectral_derivatives() {
  const std::size_t P = grid_.point_count();
  const Grid scalar = grid_.with_components(1);
  derivatives_.assign(grid_.dim(), std::vector<double>(P * n_ * n_));
  for (int i = 0; i < n_; ++i)
    for (int j = i; j < n_; ++j) {
      Field e(scalar);
      for (std::size_t p = 0; p < P; ++p) e(p, 0) = entries_[p * n_ * n_ + i + j * n_];
      for (int k = 0; k < grid_.dim(); ++k) {
        const Field d = partial(e, k);
        for (std::size_t p = 0; p < P; ++p) {
          const double v = d(p, 0).real();
          derivatives_[k][p * n_ * n_ + i + j * n_] = v;
          derivatives_[k][p * n_ * n_ + j + i * n_] = v;
        }
      }
    }
}

Eigen::Map<const RealMatrix> MatrixPotential::at(std::size_t p) const {
  if (constant_) return {const_value_.data(), n_, n_};
  return {entries_.data() + p * n_ * n_, n_, n_};
}

Eigen::Map<const RealMatrix> MatrixPotential::derivative(int axis, std::size_t p) const {
  if (constant_) return {const_zero_.data(), n_, n_};
  return {derivatives_[axis].data() + p * n_ * n_, n_, n_};
}

double MatrixPotential::sup_norm() const {
  if (constant_) return operator_norm(const_value_.cast<cplx>());
  double s = 0.0;
  for (std::size_t p = 0; p < grid_.point_count(); ++p)
    s = std::max(s, operator_norm(RealMatrix(at(p)).cast<cplx>()));
  return s;
}

Field apply_potential(const MatrixPotential& a, const Field& f) {
  require_components(f.grid(), a.size(), "apply_potential");
  if (!f.grid().same_lattice(a.grid())) throw InvalidArgument("apply_potential: grid mismatch");
  const int n = a.size();
  if (a.is_zero()) return Field(f.grid(), f.time());
  if (a.is_constant()) {
    Field out(f.grid(), f.time());
    const RealMatrix& m = a.constant_value();
    const std::size_t P = f.points();
    for (int i = 0; i < n; ++i) {
      auto o = out.component(i);
      for (int j = 0; j < n; ++j) {
        const double mij = m(i, j);
        if (mij == 0.0) continue;
        auto src = f.component(j);
        for (std::size_t p = 0; p < P; ++p) o[p] += mij * src[p];
      }
    }
    return out;
  }
  return apply_pointwise(f, n, [&](std::size_t p) { return a.at(p).cast<cplx>(); });
}

// ---------------------------------------------------------------- TimePotential

std::vector<double> default_time_samples(std::size_t count) {
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i) t[i] = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
  return t;
}

TimePotential TimePotential::zero(int n) {
  TimePotential v;
  v.n_ = n;
  v.v1_ = nullptr;
  v.v2_ = nullptr;
  v.spatially_constant_ = true;
  return v;
}

TimePotential TimePotential::make(int n, StaticFn v1, DynamicFn v2) {
  TimePotential v = zero(n);
  v.v1_ = std::move(v1);
  v.v2_ = std::move(v2);
  v.spatially_constant_ = false;
  return v;
}

TimePotential TimePotential::constant_dynamic(const ComplexMatrix& m) {
  TimePotential v = make(static_cast<int>(m.rows()), nullptr, [m](const Point&, double) { return m; });
  v.spatially_constant_ = true;
  v.v2_time_free_ = true;
  return v;
}

TimePotential TimePotential::constant_static(const ComplexMatrix& m) {
  TimePotential v = make(static_cast<int>(m.rows()), [m](const Point&) { return m; }, nullptr);
  v.spatially_constant_ = true;
  return v;
}

ComplexMatrix TimePotential::static_at(const Point& x) const {
  if (!v1_) return ComplexMatrix::Zero(n_, n_);
  ComplexMatrix m = v1_(x);
  if (m.rows() != n_ || m.cols() != n_) throw InvalidArgument("V1 returned wrong shape");
  if (!m.allFinite()) throw InvalidArgument("V1 evaluation is not finite");
  return m;
}

ComplexMatrix TimePotential::dynamic_at(const Point& x, double t) const {
  if (!v2_) return ComplexMatrix::Zero(n_, n_);
  ComplexMatrix m = v2_(x, t);
  if (m.rows() != n_ || m.cols() != n_) throw InvalidArgument("V2 returned wrong shape");
  if (!m.allFinite()) throw InvalidArgument("V2 evaluation is not finite");
  return m;
}

ComplexMatrix TimePotential::at(const Point& x, double t) const {
  if (v1_ && v2_) return static_at(x) + dynamic_at(x, t);
  if (v1_) return static_at(x);
  if (v2_) return dynamic_at(x, t);
  return ComplexMatrix::Zero(n_, n_);
}

PotentialBounds TimePotential::bounds(const Grid& grid, std::vector<double> times) const {
  if (times.empty()) times = default_time_samples();
  PotentialBounds b;
  const std::size_t P = spatially_constant_ ? 1 : grid.point_count();
  if (v1_)
    for (std::size_t p = 0; p < P; ++p) b.m1 = std::max(b.m1, operator_norm(static_at(grid.position(p))));
  if (v2_) {
    if (time_independent()) times.resize(1);
    for (double t : times)
      for (std::size_t p = 0; p < P; ++p) {
        const ComplexMatrix m = dynamic_at(grid.position(p), t);
        b.sup_v2 = std::max(b.sup_v2, operator_norm(m));
        b.b_v2 = std::max(b.b_v2, operator_norm(hermitian_part(m)));
      }
    b.time_samples = times.size();
  }
  return b;
}

Field apply_time_potential(const TimePotential& v, const Field& f, double t) {
  require_components(f.grid(), v.size(), "apply_time_potential");
  if (v.is_zero()) return Field(f.grid(), f.time());
  if (v.spatially_constant()) {
    const ComplexMatrix m = v.at({0.0, 0.0}, t);
    return apply_pointwise(f, v.size(), [&](std::size_t) -> const ComplexMatrix& { return m; });
  }
  const Grid& g = f.grid();
  return apply_pointwise(f, v.size(), [&](std::size_t p) { return v.at(g.position(p), t); });
}

cplx potential_form(const MatrixPotential& a, const TimePotential& v, const Field& f, double t) {
  Field g = apply_potential(a, f);
  g += apply_time_potential(v, f, t);
  return inner_product(g, f);
}

// ---------------------------------------------------------------- admissibility checks

double dilation_form(const MatrixPotential& a, const Field& f) {
  const Grid& g = f.grid();
  const int n = a.size();
  Field acc(g, f.time());
  const auto grad = gradient(f);
  for (int k = 0; k < g.dim(); ++k) {
    Field term = apply_potential(a, grad[k]);
    if (!a.is_constant()) term -= apply_pointwise(f, n, [&](std::size_t p) { return a.derivative(k, p).cast<cplx>(); });
    std::vector<double> xk(f.points());
    for (std::size_t p = 0; p < xk.size(); ++p) xk[p] = g.position(p)[k];
    acc += scale_pointwise(term, xk);
  }
  return inner_product(acc, f).real();
}

DilationReport check_dilation_positivity(const MatrixPotential& a, const std::vector<Field>& probes,
                                         double form_tol_rel) {
  DilationReport r;
  r.min_value = probes.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (const auto& f : probes) {
    const double v = dilation_form(a, f);
    double h1 = std::pow(l2_norm(f), 2);
    for (const auto& d : gradient(f)) h1 += std::pow(l2_norm(d), 2);
    const double tol = form_tol_rel * h1;
    r.values.push_back(v);
    r.tolerances.push_back(tol);
    r.min_value = std::min(r.min_value, v);
    if (v < -tol) r.pass = false;
  }
  return r;
}

namespace {

template <class Visit>
void for_each_probe_point(const MatrixPotential& a, const TimePotential& v, const std::vector<Field>& probes,
                          const std::vector<double>& times, Visit&& visit) {
  const int n = a.size();
  Eigen::VectorXcd u(n);
  for (const auto& f : probes) {
    require_components(f.grid(), n, "probe");
    const auto n2 = pointwise_norm_sq(f);
    const double floor = 1e-24 * *std::max_element(n2.begin(), n2.end());
    for (double t : times) {
      const ComplexMatrix vc = v.spatially_constant() ? v.at({0.0, 0.0}, t) : ComplexMatrix();
      for (std::size_t p = 0; p < f.points(); ++p) {
        if (!(n2[p] > floor)) continue;
        for (int c = 0; c < n; ++c) u(c) = f(p, c);
        ComplexMatrix m = a.at(p).cast<cplx>();
        m += v.spatially_constant() ? vc : v.at(f.grid().position(p), t);
        const cplx q = u.dot(m * u);  // conj(u)^T M u = (M u, u)
        visit(q, n2[p]);
      }
    }
  }
}

}  // namespace

ImPositivityReport check_im_positivity(const MatrixPotential& a, const TimePotential& v,
                                       const std::vector<Field>& probes, const std::vector<double>& times) {
  ImPositivityReport r;
  double c0 = std::numeric_limits<double>::infinity();
  for_each_probe_point(a, v, probes, times, [&](cplx q, double n2) { c0 = std::min(c0, q.imag() / n2); });
  r.c0_probe = std::isfinite(c0) ? c0 : 0.0;

  double cm = std::numeric_limits<double>::infinity();
  const Grid& g = a.grid();
  const std::size_t P = v.spatially_constant() ? 1 : g.point_count();
  for (double t : times)
    for (std::size_t p = 0; p < P; ++p) {
      const ComplexMatrix m = v.at(g.position(p), t);
      const ComplexMatrix im = (m - m.adjoint()) / cplx(0.0, 2.0);
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(im), Eigen::EigenvaluesOnly);
      cm = std::min(cm, es.eigenvalues()(0));
    }
  r.c0_matrix = std::isfinite(cm) ? cm : 0.0;
  r.holds = r.c0_probe >= 0.0;
  return r;
}

PhiBoundReport check_phi_bound(const MatrixPotential& a, const TimePotential& v, double coef_a, double coef_b,
                               const std::vector<Field>& probes, const std::vector<double>& times) {
  PhiBoundReport r;
  for_each_probe_point(a, v, probes, times, [&](cplx q, double n2) {
    r.c0 = std::max(r.c0, std::abs(coef_a * q.real() - coef_b * q.imag()) / n2);
  });
  return r;
}

SemiboundReport check_semiboundedness(const MatrixPotential& a, const std::vector<Field>& probes) {
  SemiboundReport r;
  r.d_probe = -std::numeric_limits<double>::infinity();
  const TimePotential none = TimePotential::zero(a.size());
  for_each_probe_point(a, none, probes, {0.0}, [&](cplx q, double n2) { r.d_probe = std::max(r.d_probe, q.real() / n2); });
  if (!std::isfinite(r.d_probe)) r.d_probe = 0.0;
  r.d_matrix = -std::numeric_limits<double>::infinity();
  const std::size_t P = a.is_constant() ? 1 : a.grid().point_count();
  for (std::size_t p = 0; p < P; ++p) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(RealMatrix(a.at(p)), Eigen::EigenvaluesOnly);
    r.d_matrix = std::max(r.d_matrix, es.eigenvalues()(a.size() - 1));
  }
  return r;
}

// ---------------------------------------------------------------- S/K

WeightSample WeightSample::quadratic(const Grid& grid) {
  WeightSample w;
  w.kind = Kind::quadratic;
  const std::size_t P = grid.point_count();
  w.phi.resize(P);
  w.lap.assign(P, 2.0 * grid.dim());
  w.grad.assign(grid.dim(), std::vector<double>(P));
  for (std::size_t p = 0; p < P; ++p) {
    const Point x = grid.position(p);
    w.phi[p] = grid.radius_sq(p);
    for (int k = 0; k < grid.dim(); ++k) w.grad[k][p] = 2.0 * x[k];
  }
  return w;
}

WeightSample WeightSample::zero(const Grid& grid) {
  WeightSample w;
  const std::size_t P = grid.point_count();
  w.phi.assign(P, 0.0);
  w.lap.assign(P, 0.0);
  w.grad.assign(grid.dim(), std::vector<double>(P, 0.0));
  return w;
}

SKDecomposition::SKDecomposition(MatrixPotential a_pot, TimePotential v, double a, double b, double gamma,
                                 WeightSample w)
    : apot_(std::move(a_pot)), v_(std::move(v)), a_(a), b_(b), gamma_(gamma), w_(std::move(w)) {
  if (!(a >= 0.0) || (a == 0.0 && b == 0.0) || !std::isfinite(b))
    throw InvalidArgument("coefficients need a >= 0 and (a, b) != (0, 0)");
  const Grid& g = apot_.grid();
  const std::size_t P = g.point_count();
  if (w_.phi.size() != P || w_.lap.size() != P || static_cast<int>(w_.grad.size()) != g.dim())
    throw InvalidArgument("weight sample does not match grid");
  grad_sq_.assign(P, 0.0);
  for (int k = 0; k < g.dim(); ++k)
    for (std::size_t p = 0; p < P; ++p) grad_sq_[p] += w_.grad[k][p] * w_.grad[k][p];
  if (!w_.grad_t.empty()) {
    grad_sq_t_.assign(P, 0.0);
    for (int k = 0; k < g.dim(); ++k)
      for (std::size_t p = 0; p < P; ++p) grad_sq_t_[p] += 2.0 * w_.grad[k][p] * w_.grad_t[k][p];
  }
}

Field SKDecomposition::apply_A1(const Field& f) const {
  Field out = laplacian(f);
  out += apply_potential(apot_, f);
  if (gamma_ != 0.0) out.axpy(gamma_ * gamma_, scale_pointwise(f, grad_sq_));
  return out;
}

namespace {

// sum_k g_k d_k f + d_k (g_k f): skew, and equal to 2 g.grad f + (div g) f in the continuum
Field skew_transport(const Field& f, const std::vector<std::vector<double>>& g) {
  Field out(f.grid(), f.time());
  for (int k = 0; k < f.grid().dim(); ++k) {
    out += scale_pointwise(partial(f, k), g[k]);
    out += partial(scale_pointwise(f, g[k]), k);
  }
  return out;
}

}  // namespace

Field SKDecomposition::apply_B1(const Field& f) const { return skew_transport(f, w_.grad); }

Field SKDecomposition::apply_S(const Field& f) const {
  Field out(f.grid(), f.time());
  if (a_ != 0.0) out.axpy(a_, apply_A1(f));
  if (gamma_ != 0.0 && b_ != 0.0) out.axpy(cplx(0.0, -b_ * gamma_), apply_B1(f));
  if (gamma_ != 0.0 && !w_.phi_t.empty()) out.axpy(gamma_, scale_pointwise(f, w_.phi_t));
  return out;
}

Field SKDecomposition::apply_K(const Field& f) const {
  Field out(f.grid(), f.time());
  if (b_ != 0.0) out.axpy(cplx(0.0, b_), apply_A1(f));
  if (gamma_ != 0.0 && a_ != 0.0) out.axpy(-a_ * gamma_, apply_B1(f));
  return out;
}

Field SKDecomposition::apply_St(const Field& f) const {
  Field out(f.grid(), f.time());
  if (gamma_ == 0.0) return out;
  if (a_ != 0.0 && !grad_sq_t_.empty()) out.axpy(a_ * gamma_ * gamma_, scale_pointwise(f, grad_sq_t_));
  if (b_ != 0.0 && !w_.grad_t.empty()) out.axpy(cplx(0.0, -b_ * gamma_), skew_transport(f, w_.grad_t));
  if (!w_.phi_tt.empty()) out.axpy(gamma_, scale_pointwise(f, w_.phi_tt));
  return out;
}

Field SKDecomposition::residual(const Field& f, const Field& dfdt, double t) const {
  Field r = dfdt;
  r -= apply_S(f);
  r -= apply_K(f);
  r.axpy(-cplx(a_, b_), apply_time_potential(v_, f, t));
  return r;
}

SKDecomposition build_sk(const MatrixPotential& a_pot, const TimePotential& v, double a, double b, double gamma,
                         const WeightSample& w) {
  return SKDecomposition(a_pot, v, a, b, gamma, w);
}

CommutatorReport commutator_form(const SKDecomposition& dec, const Field& f, double t) {
  if (dec.weight().kind != WeightSample::Kind::quadratic)
    throw InvalidArgument("commutator_form: closed form is only available for the weight |x|^2");
  CommutatorReport r;
  const Grid& g = f.grid();
  const double gm = dec.gamma();
  const double k2 = dec.a() * dec.a() + dec.b() * dec.b();
  const auto grad = gradient(f);
  double grad_sq = 0.0;
  for (const auto& d : grad) grad_sq += std::pow(l2_norm(d), 2);
  std::vector<double> r2(f.points());
  for (std::size_t p = 0; p < r2.size(); ++p) r2[p] = g.radius_sq(p);
  const double moment = sum_weighted(f, r2);

  // (grad phi . grad A) f and A grad phi . grad f
  const MatrixPotential& A = dec.potential();
  const int n = A.size();
  Field da_term(g, f.time()), a_grad_term(g, f.time());
  for (int k = 0; k < g.dim(); ++k) {
    const auto& gk = dec.weight().grad[k];
    if (!A.is_constant())
      da_term += scale_pointwise(
          apply_pointwise(f, n, [&](std::size_t p) { return A.derivative(k, p).cast<cplx>(); }), gk);
    a_grad_term += scale_pointwise(apply_potential(A, grad[k]), gk);
  }
  const double da_form = inner_product(da_term, f).real();
  const double a_grad_form = inner_product(a_grad_term, f).real();

  r.closed_form = gm * k2 * (8.0 * grad_sq + 32.0 * gm * gm * moment + 2.0 * da_form);
  r.printed = gm * std::sqrt(k2) * (8.0 * grad_sq + 32.0 * gm * gm * moment) + 2.0 * (a_grad_form - da_form);

  const Field sf = dec.apply_S(f);
  const Field kf = dec.apply_K(f);
  Field total = dec.apply_St(f);
  total += dec.apply_S(kf);
  total -= dec.apply_K(sf);
  r.nested = inner_product(total, f).real();
  const double scale = std::max({std::abs(r.closed_form), std::abs(r.nested), 1e-300});
  r.relative_gap = std::abs(r.closed_form - r.nested) / scale;
  (void)t;
  return r;
}

}  // namespace hardylab

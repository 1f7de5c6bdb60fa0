#pragma once

#include <chrono>
#include <cmath>
#include <limits>

#include "hardylab/scenario.hpp"

namespace hardylab::detail {

struct EndpointNorm {
  double log_norm = -std::numeric_limits<double>::infinity();
  bool finite = true;  // integrand tail-resolved on the box
};

// log |e^{gamma |x|^2} f| without throwing; zero data is finite with log norm -inf
inline EndpointNorm endpoint_norm(const Field& f, double gamma, double tol = kDefaultTailTol) {
  EndpointNorm e;
  const Grid& g = f.grid();
  const auto n2 = pointwise_norm_sq(f);
  std::vector<double> li(n2.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < n2.size(); ++p) {
    li[p] = n2[p] > 0.0 ? 2.0 * gamma * g.radius_sq(p) + std::log(n2[p]) : -std::numeric_limits<double>::infinity();
    top = std::max(top, li[p]);
  }
  if (!std::isfinite(top)) return e;
  e.finite = tail_check(g, li, tol).resolved;
  double s = 0.0;
  for (double v : li) s += std::exp(v - top);
  e.log_norm = 0.5 * (top + std::log(s * g.cell_volume()));
  return e;
}

class Stopwatch {
 public:
  Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

MatrixPotential build_matrix_potential(const EntryMatrix& m, const Grid& grid);
TimePotential build_time_potential(const PotentialConfig& p, const Grid& grid);
Trajectory run_evolution(const ScenarioSetup& s);

}  // namespace hardylab::detail

#pragma once

#include "hardylab/field.hpp"

namespace hardylab::detail {

// Unnormalized in-place DFT of one component block (length P). sign = -1 forward, +1 backward.
void fft_inplace(const Grid& grid, cplx* data, int sign);

// f -> ifft(mult(k) * fft(f)) per component, mult indexed by flat frequency index.
template <class Mult>
Field apply_multiplier(const Field& f, Mult&& mult) {
  Field out = f;
  const std::size_t P = f.points();
  const double inv = 1.0 / static_cast<double>(P);
  for (int c = 0; c < f.components(); ++c) {
    cplx* d = out.component(c).data();
    fft_inplace(f.grid(), d, -1);
    for (std::size_t k = 0; k < P; ++k) d[k] *= mult(k) * inv;
    fft_inplace(f.grid(), d, +1);
  }
  return out;
}

}  // namespace hardylab::detail

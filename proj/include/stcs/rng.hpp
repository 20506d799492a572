#pragma once

#include <cstdint>
#include <random>

#include "stcs/types.hpp"

namespace stcs {

/// All randomness in the library flows through one engine type so that a
/// (seed, draw-order) pair pins every experiment bit-for-bit.
using Rng = std::mt19937_64;

/// One draw from the circularly-symmetric complex Gaussian CN(0, var):
/// real and imaginary parts are independent N(0, var/2).
inline cplx draw_cgauss(Rng& rng, double var) {
    std::normal_distribution<double> comp(0.0, std::sqrt(var * 0.5));
    const double re = comp(rng);
    const double im = comp(rng);
    return {re, im};
}

/// Fills a span with i.i.d. CN(0, var) draws in index order.
inline void fill_cgauss(Rng& rng, cplx* dst, std::size_t count, double var) {
    for (std::size_t i = 0; i < count; ++i) dst[i] = draw_cgauss(rng, var);
}

}  // namespace stcs

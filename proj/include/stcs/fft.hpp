#pragma once

#include <cstddef>

#include "stcs/types.hpp"

namespace stcs {

enum class FftDirection { Forward, Inverse };

/// In-place unitary DFT of length n on contiguous complex data:
///   Forward:  X_j = n^{-1/2} * sum_k x_k exp(-2*pi*i*j*k/n)
///   Inverse:  x_k = n^{-1/2} * sum_j X_j exp(+2*pi*i*j*k/n)
/// Both directions preserve the l2 norm and invert each other exactly.
/// Plans are cached per (n, direction) and execution is thread-safe.
void dft_inplace(cplx* data, std::size_t n, FftDirection dir);

/// Out-of-place convenience wrapper; returns the transformed copy.
CVec dft(const CVec& v, FftDirection dir);

}  // namespace stcs

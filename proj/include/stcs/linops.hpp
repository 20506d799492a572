#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stcs/fft.hpp"
#include "stcs/types.hpp"

namespace stcs {

/// Pilot measurement structure. Both kinds select m rows of a unitary DFT
/// uniformly at random; DftRp additionally scrambles the input coordinates
/// with a random permutation, which decorrelates the measurements from
/// clustered supports.
enum class SensingKind { Dft, DftRp };

std::string sensing_kind_name(SensingKind kind);
SensingKind sensing_kind_from_name(const std::string& name);

/// Partial-DFT measurement operator A = S * F * R acting on length-n vectors:
///   R: coordinate permutation, (R x)_i = x[permutation[i]]
///   F: unitary n-point DFT
///   S: row selection, y_j = (F R x)[row_selection[j]]
/// Rows of A are orthonormal (A A^H = I_m) by construction. The operator is
/// stored implicitly as the two index vectors and applied via FFT in
/// O(n log n); it is never materialized outside of test oracles.
struct SensingOperator {
    std::size_t n = 0;
    std::size_t m = 0;
    SensingKind kind = SensingKind::DftRp;
    std::uint64_t seed = 0;
    std::vector<std::uint32_t> row_selection;  ///< size m, distinct values in [0, n)
    std::vector<std::uint32_t> permutation;    ///< size n, bijection on [0, n); identity for Dft
};

/// Draws the random indices for an (n, m) operator. The same
/// (n, m, kind, seed) tuple always produces the same operator.
/// Requires 1 <= m <= n.
SensingOperator make_sensing_operator(std::size_t n, std::size_t m, SensingKind kind,
                                      std::uint64_t seed);

/// y = A x. x has length n, y length m. scratch is resized to n as needed.
void apply_forward(const SensingOperator& op, const cplx* x, cplx* y, CVec& scratch);
CVec apply_forward(const SensingOperator& op, const CVec& x);

/// x = A^H y. y has length m, x length n. scratch is resized to n as needed.
void apply_adjoint(const SensingOperator& op, const cplx* y, cplx* x, CVec& scratch);
CVec apply_adjoint(const SensingOperator& op, const CVec& y);

/// Column-wise forward/adjoint application to an n-by-p (resp. m-by-p) matrix.
CMat apply_forward(const SensingOperator& op, const CMat& x);
CMat apply_adjoint(const SensingOperator& op, const CMat& y);

/// Line-oriented text descriptor. Round-trips through parse_operator and is
/// embedded in experiment outputs so any run can be replayed exactly.
std::string serialize(const SensingOperator& op);
void serialize(const SensingOperator& op, std::ostream& out);
SensingOperator parse_operator(std::istream& in);
SensingOperator parse_operator(const std::string& text);

/// Validates dimensions, the row-selection set and the permutation bijection.
/// Throws std::invalid_argument on any violation.
void validate(const SensingOperator& op);

}  // namespace stcs

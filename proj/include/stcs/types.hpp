#pragma once

#include <complex>
#include <cstddef>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace stcs {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

/// Domain of an angular-domain channel matrix: columns are either
/// frequency bins (after the pilot-subcarrier DFT) or delay taps.
enum class Domain { AngleFrequency, AngleDelay };

std::string domain_name(Domain d);
Domain domain_from_name(const std::string& name);

/// Dense column-major complex matrix. Columns are contiguous so per-tap
/// operations (one column per delay tap / frequency bin) work on flat spans.
struct CMat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    CVec data;

    CMat() = default;
    CMat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

    cplx& operator()(std::size_t i, std::size_t j) { return data[j * rows + i]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return data[j * rows + i]; }

    cplx* col(std::size_t j) { return data.data() + j * rows; }
    const cplx* col(std::size_t j) const { return data.data() + j * rows; }

    void fill(cplx value) { data.assign(rows * cols, value); }
};

/// Dense column-major real matrix (posterior probabilities, per-entry stats).
struct RMat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    RMat() = default;
    RMat(std::size_t r, std::size_t c, double init = 0.0) : rows(r), cols(c), data(r * c, init) {}

    double& operator()(std::size_t i, std::size_t j) { return data[j * rows + i]; }
    const double& operator()(std::size_t i, std::size_t j) const { return data[j * rows + i]; }
};

/// Channel matrix together with the domain its columns live in.
struct ChannelMatrix {
    CMat values;
    Domain domain = Domain::AngleDelay;
};

double fro_norm_sq(const CVec& v);
double fro_norm_sq(const CMat& m);
bool all_finite(const CVec& v);
bool all_finite(const CMat& m);

/// Squared-error ratio ||a - b||_F^2 / ||b||_F^2 against reference b.
double nmse(const CMat& estimate, const CMat& reference);

/// 10*log10 with a -inf passthrough for an exactly zero ratio.
double to_db(double ratio);

/// Renders a dB value for CSV output; -inf becomes the literal "-inf".
std::string db_to_string(double db);

}  // namespace stcs

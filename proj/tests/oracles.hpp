// Independent reference implementations used to pin expected values in tests.
// Everything here is deliberately brute force (explicit matrices, exhaustive
// enumeration, dense solves) so it shares no code path with the library.
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "stcs/linops.hpp"
#include "stcs/types.hpp"

namespace oracle {

using stcs::cplx;
using EMat = Eigen::MatrixXcd;
using EVec = Eigen::VectorXcd;

constexpr double kPi = 3.14159265358979323846;

/// Explicit m-by-n matrix of the sensing operator, built entry by entry from
/// the DFT definition: A[r][c] = F[row_selection[r]][perm^{-1}(c)] with
/// F[j][k] = exp(-2*pi*i*j*k/n)/sqrt(n). Never calls the library's FFT path.
inline EMat materialize(const stcs::SensingOperator& op) {
    const std::size_t n = op.n;
    std::vector<std::size_t> inv_perm(n);
    for (std::size_t i = 0; i < n; ++i) inv_perm[op.permutation[i]] = i;
    EMat a(op.m, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (std::size_t r = 0; r < op.m; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            const double angle = -2.0 * kPi * static_cast<double>(op.row_selection[r]) *
                                 static_cast<double>(inv_perm[c]) / static_cast<double>(n);
            a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                scale * cplx{std::cos(angle), std::sin(angle)};
        }
    }
    return a;
}

inline EVec to_eigen(const stcs::CVec& v) {
    EVec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

inline stcs::CVec from_eigen(const EVec& v) {
    stcs::CVec out(static_cast<std::size_t>(v.size()));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = v(static_cast<Eigen::Index>(i));
    return out;
}

/// Dense-solve reference for the Gaussian posterior mean under prior
/// CN(h_pri, v I) and likelihood y = A h + CN(0, sigma2 I):
///   h_post = (I + (v/sigma2) A^H A)^{-1} (h_pri + (v/sigma2) A^H y).
inline EVec lmmse_dense(const EMat& a, const EVec& y, const EVec& h_pri, double v, double sigma2) {
    const Eigen::Index n = a.cols();
    const EMat lhs = EMat::Identity(n, n) + (v / sigma2) * (a.adjoint() * a);
    const EVec rhs = h_pri + (v / sigma2) * (a.adjoint() * y);
    return lhs.ldlt().solve(rhs);
}

/// Stationary two-state Markov chain density: P(s=1) = (1 + p01/p10)^{-1}.
inline double chain_stationary(double p10, double p01) { return 1.0 / (1.0 + p01 / p10); }

/// Exhaustive reference for a binary Markov chain observed through
/// per-position Bernoulli evidence e_n = P(evidence | s_n = 1)
/// (and 1 - e_n for s_n = 0), up to N ~ 16.
struct ChainEnumeration {
    std::vector<double> marginal;                 // P(s_n = 1 | evidence)
    std::vector<std::array<double, 4>> pairwise;  // P(s_{n-1}=a, s_n=b), index a*2+b
    double log_evidence = 0.0;
};

inline ChainEnumeration enumerate_chain(const std::vector<double>& evidence, double lambda0,
                                        double p10, double p01) {
    const std::size_t n = evidence.size();
    ChainEnumeration out;
    out.marginal.assign(n, 0.0);
    out.pairwise.assign(n > 0 ? n - 1 : 0, {0.0, 0.0, 0.0, 0.0});
    double z = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        double w = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool s = (mask >> i) & 1u;
            if (i == 0) {
                w *= s ? lambda0 : 1.0 - lambda0;
            } else {
                const bool prev = (mask >> (i - 1)) & 1u;
                const double p_on = prev ? 1.0 - p01 : p10;
                w *= s ? p_on : 1.0 - p_on;
            }
            w *= s ? evidence[i] : 1.0 - evidence[i];
        }
        z += w;
        for (std::size_t i = 0; i < n; ++i) {
            if ((mask >> i) & 1u) out.marginal[i] += w;
        }
        for (std::size_t i = 1; i < n; ++i) {
            const std::size_t a = (mask >> (i - 1)) & 1u;
            const std::size_t b = (mask >> i) & 1u;
            out.pairwise[i - 1][a * 2 + b] += w;
        }
    }
    for (double& m : out.marginal) m /= z;
    for (auto& p : out.pairwise) {
        for (double& v : p) v /= z;
    }
    out.log_evidence = std::log(z);
    return out;
}

/// Exhaustive reference for one tap of the delay-support model: enumerate the
/// gate t and all 2^n supports, weighting each support by its prior under the
/// chain (t=1) or the i.i.d. Bern(eps) leak (t=0) and by the Bernoulli
/// evidence weights. Shares no code with the library sweep.
struct DsEnumeration {
    double t_post = 0.0;
    std::vector<double> marginal;
    std::vector<double> marginal_t1;
};

inline DsEnumeration enumerate_ds(const std::vector<double>& e, double lambda, double p10,
                                  double p01, double gamma, double eps) {
    const std::size_t n = e.size();
    double z1 = 0.0;
    double z0 = 0.0;
    std::vector<double> m1(n, 0.0);
    std::vector<double> m0(n, 0.0);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        const auto bit = [&](std::size_t i) { return (mask >> i) & 1u; };
        double chain_prior = bit(0) ? lambda : 1.0 - lambda;
        double leak_prior = bit(0) ? eps : 1.0 - eps;
        double like = bit(0) ? e[0] : 1.0 - e[0];
        for (std::size_t i = 1; i < n; ++i) {
            const bool prev = bit(i - 1);
            const bool cur = bit(i);
            chain_prior *= prev ? (cur ? 1.0 - p01 : p01) : (cur ? p10 : 1.0 - p10);
            leak_prior *= cur ? eps : 1.0 - eps;
            like *= cur ? e[i] : 1.0 - e[i];
        }
        z1 += chain_prior * like;
        z0 += leak_prior * like;
        for (std::size_t i = 0; i < n; ++i) {
            if (bit(i)) {
                m1[i] += chain_prior * like;
                m0[i] += leak_prior * like;
            }
        }
    }
    DsEnumeration out;
    const double w1 = gamma * z1;
    const double w0 = (1.0 - gamma) * z0;
    out.t_post = w1 / (w1 + w0);
    out.marginal.resize(n);
    out.marginal_t1.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.marginal_t1[i] = m1[i] / z1;
        out.marginal[i] = (w1 * (m1[i] / z1) + w0 * (m0[i] / z0)) / (w1 + w0);
    }
    return out;
}

/// Complex Gaussian density CN(x; mu, v) = exp(-|x-mu|^2/v) / (pi v).
inline double cgauss_pdf(cplx x, cplx mu, double v) {
    return std::exp(-std::norm(x - mu) / v) / (kPi * v);
}

/// Per-entry slab evidence for observation m = h + CN(0, v) with
/// h ~ CN(0, sigma2) when active: returns (like_active, like_inactive).
inline std::pair<double, double> bg_evidence(cplx m, double v, double sigma2) {
    return {cgauss_pdf(cplx{0, 0}, m, v + sigma2), cgauss_pdf(cplx{0, 0}, m, v)};
}

}  // namespace oracle

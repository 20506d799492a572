#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "stcs/denoiser_ds.hpp"
#include "stcs/denoiser_fs.hpp"
#include "stcs/priors.hpp"
#include "stcs/types.hpp"

namespace stcs {

/// Learned probabilities are projected into [kEmProbFloor, 1 - kEmProbFloor].
inline constexpr double kEmProbFloor = 1e-6;
/// Learned variances are projected to at least kEmVarFloor.
inline constexpr double kEmVarFloor = 1e-12;
/// Posterior-weight sums below this are treated as degenerate: the update is
/// skipped and the previous parameter value kept.
inline constexpr double kEmStatGuard = 1e-9;

double em_project_prob(double p);
double em_project_var(double v);

/// Energy-based slab-variance initializer for one measurement column:
/// 2 * n * ||y||^2 / (m * ||A||_F^2) with ||A||_F^2 = m for the
/// row-orthonormal operators used here.
double em_init_sigma2(const cplx* y, std::size_t m, std::size_t n);

/// Default uninformative starting points (activity 0.3, exit rate 0.1,
/// gate 0.1) with energy-based slab variances from the observations.
FsParams em_init_fs(const CMat& y, std::size_t n);
DsParams em_init_ds(const CMat& y, std::size_t n, double epsilon = 1e-3);
std::vector<BGPrior> em_init_bg(const CMat& y, std::size_t n);

/// Posterior statistics consumed by the frequency-support M-step.
struct FsEmStats {
    std::vector<double> marginal;                    ///< P(s_n=1|..), size N
    std::vector<std::array<double, 4>> pairwise;     ///< P(s_{n-1}=a, s_n=b|..), size N-1
    std::vector<double> active_e2_sum;               ///< sum_n marginal_n * E[|h|^2 | s_n=1], per bin
};

/// tie_sigma pools the slab update across bins (one shared sigma2), which
/// stabilizes learning when P is small.
FsParams em_update_fs(const FsEmStats& stats, const FsParams& current, bool tie_sigma = false);

/// Posterior statistics for one delay tap's M-step. Chain statistics are
/// conditional on the tap being occupied (t=1); the slab update weights by
/// the unconditional per-entry activity.
struct DsTapEmStats {
    double t_posterior = 0.0;
    std::vector<double> marginal_t1;
    std::vector<std::array<double, 4>> pairwise_t1;
    std::vector<double> marginal;   ///< unconditional P(s_n=1|..)
    std::vector<double> e2_active;  ///< E[|h_n|^2 | s_n=1, ..]
};

DsParams em_update_ds(const std::vector<DsTapEmStats>& stats, const DsParams& current);

/// Bernoulli-Gaussian M-step: tied activity across all entries, per-column
/// slab variances.
std::vector<BGPrior> em_update_bg(const RMat& pi_post, const RMat& e2_active,
                                  const std::vector<BGPrior>& current);

}  // namespace stcs

#pragma once

#include <cstdint>
#include <vector>

#include "stcs/chanmodel.hpp"
#include "stcs/engine.hpp"
#include "stcs/rng.hpp"
#include "stcs/types.hpp"

namespace stcs {

/// Scalar Module A map of the state-evolution recursion: the extrinsic
/// variance produced by the LMMSE stage when its input variance is tau_a,
///   tau_b = (n/m) (tau_a + sigma2) - tau_a.
/// A non-positive result (possible when m = n and sigma2 = 0) is clamped to
/// v_min with the flag set.
struct SeModuleAResult {
    double tau_b = 0.0;
    bool clamped = false;
};

SeModuleAResult se_module_a(double tau_a, double sigma2, std::size_t m, std::size_t n,
                            double v_min = 1e-13);

/// Monte Carlo estimate of the Module B map: the extrinsic error variance
/// after denoising pseudo observations H + CN(0, tau_b) of channels drawn
/// from the generator. mse_post additionally reports the posterior (pre
/// extrinsic) per-entry MSE of the same trials. For a pass-through denoiser
/// the extrinsic step is undefined; by convention tau_a = tau_b exactly.
/// A tap whose posterior variance reaches tau_b (possible only when tau_b is
/// at the numerical floor) is scored by its posterior error, since the
/// Gaussian division is undefined there.
struct SeGResult {
    double tau_a = 0.0;
    double tau_a_stderr = 0.0;
    double mse_post = 0.0;
    double mse_post_stderr = 0.0;
};

SeGResult se_module_b_mc(double tau_b, ModuleB& denoiser, const ChannelGenSpec& chan_spec,
                         int trials, Rng& rng, double v_min = 1e-13, double v_max = 1e13);

struct SeTrajectoryPoint {
    int iteration = 0;
    double tau_a = 0.0;     ///< after the Module B map of this iteration
    double tau_b = 0.0;     ///< after the Module A map of this iteration
    double mc_stderr = 0.0;
    double mse_post = 0.0;  ///< posterior per-entry MSE at this iteration
};

/// Result of iterating the two maps to a fixed point.
struct SeState {
    double tau_a = 0.0;
    double tau_b = 0.0;
    double mse_post = 0.0;
    double entry_power = 0.0;          ///< E||H||_F^2 / (N P)
    double predicted_nmse = 0.0;       ///< tau_a / entry_power (extrinsic-variance based)
    double predicted_nmse_post = 0.0;  ///< mse_post / entry_power (posterior based)
    std::vector<SeTrajectoryPoint> trajectory;
    int iterations = 0;
    bool converged = false;
    bool clamped = false;     ///< Module A map hit the v_min floor at least once
    bool oscillated = false;  ///< tau_a rose beyond MC noise for >3 consecutive iterations
};

/// Alternates se_module_a and se_module_b_mc from tau_a = entry power until
/// the relative change of tau_a drops below tol or max_iter is reached. Each
/// Module B evaluation reseeds from seed (common random numbers), making the
/// Monte Carlo map deterministic so a tight tolerance is meaningful.
SeState se_fixed_point(double sigma2, std::size_t m, std::size_t n, ModuleB& denoiser,
                       const ChannelGenSpec& chan_spec, double tol = 1e-6, int max_iter = 100,
                       int trials = 200, std::uint64_t seed = 1);

}  // namespace stcs

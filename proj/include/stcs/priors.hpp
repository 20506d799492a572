#pragma once

#include <array>
#include <vector>

#include "stcs/types.hpp"

namespace stcs {

/// Probabilities are clipped into [kProbClip, 1 - kProbClip] before any odds
/// or logit computation; all message combination then happens in the log-odds
/// domain, where products become bounded sums and no cancellation can occur.
/// The clip is the smallest value whose complement is still exactly
/// representable (1 - 1e-15 > 1 - 2 ulp); a larger clip caps the achievable
/// support certainty and with it the noiseless recovery floor, because the
/// chain prior odds at a run boundary multiply the clipped evidence odds by up
/// to (1/p10)(1/p01).
constexpr double kProbClip = 1e-15;

double clip_prob(double p);

/// log(p / (1-p)) after clipping; bounded by about +/- 34.5.
double logit(double p);

/// Inverse of logit, numerically stable in both tails.
double logistic(double log_odds);

/// Log-odds that a scalar observation m = h + CN(0, v) carries an active
/// coefficient h ~ CN(0, sigma2_h) rather than h = 0:
///   log CN(0; m, v + sigma2_h) - log CN(0; m, v)
///     = log(v / (v + sigma2_h)) + |m|^2 sigma2_h / (v (v + sigma2_h)).
/// Requires v > 0, sigma2_h >= 0; sigma2_h = 0 gives an uninformative 0.
double support_evidence_logit(cplx m, double v, double sigma2_h);

/// Probability form of the same evidence.
double support_evidence(cplx m, double v, double sigma2_h);

/// Moments of the spike-and-slab posterior once the activity probability has
/// been fully combined: with probability pi_post the coefficient is Gaussian
/// with mean g*m and variance g*v, where g = sigma2_h / (sigma2_h + v);
/// otherwise it is exactly zero.
struct ScalarPosterior {
    cplx mean;         ///< pi_post * g * m
    double var;        ///< E|h|^2 - |mean|^2, clamped at 0
    double e2_active;  ///< E[|h|^2 | active] = g*v + |g*m|^2 (EM sufficient stat)
};

ScalarPosterior bg_scalar_posterior(cplx m, double v, double pi_post, double sigma2_h);

/// Two-state Markov chain prior: initial activity lambda0, entry rate
/// p10 = P(1|0), exit rate p01 = P(0|1).
struct ChainParams {
    double lambda0 = 0.0625;
    double p10 = 1.0 / 240.0;
    double p01 = 1.0 / 16.0;
};

/// Stationarity tie: given activity lambda and exit rate p01, the entry rate
/// keeping the chain stationary is p10 = p01 * lambda / (1 - lambda).
ChainParams tied_chain_params(double lambda, double p01);

void validate(const ChainParams& params);

/// Exact forward/backward sweep over the chain observed through per-position
/// Bernoulli evidence (evidence[n] is the probability weight on s_n = 1,
/// possibly already multiplied across taps by the caller).
///
/// Message conventions:
///   forward[n]  = P(s_n = 1 | evidence before n)   (prediction message)
///   backward[n] = normalized backward message, uninformative 1/2 at n = N-1
///   marginal[n] = P(s_n = 1 | all evidence)
///             (proportional to forward * evidence * backward on each state)
///   pairwise[n-1][2a + b] = P(s_{n-1} = a, s_n = b | all evidence)
///   log_evidence = log sum over all chains of prior * evidence weights
struct ChainPosterior {
    std::vector<double> forward;
    std::vector<double> backward;
    std::vector<double> marginal;
    std::vector<std::array<double, 4>> pairwise;
    double log_evidence = 0.0;
};

ChainPosterior chain_forward_backward(const std::vector<double>& evidence,
                                      const ChainParams& params);

/// Per-tap i.i.d. Bernoulli-Gaussian prior (the unstructured baseline).
struct BGPrior {
    double pi = 0.0625;
    double sigma2 = 1.0;
};

/// Entry-wise spike-and-slab denoising of pri_mean under per-tap input
/// variances pri_var and per-tap priors. post_var[p] averages the entry
/// posterior variances down column p.
struct BgDenoiseResult {
    CMat post_mean;
    std::vector<double> post_var;
    RMat pi_post;     ///< per-entry posterior activity (EM stat)
    RMat e2_active;   ///< per-entry active-conditional second moment (EM stat)
};

BgDenoiseResult denoise_bg_iid(const CMat& pri_mean, const std::vector<double>& pri_var,
                               const std::vector<BGPrior>& prior);

}  // namespace stcs

#include "stcs/denoiser_fs.hpp"

#include <cmath>
#include <stdexcept>

#include "stcs/em.hpp"

namespace stcs {

void validate(const FsParams& params, std::size_t p_taps) {
    ChainParams chain;
    chain.lambda0 = params.lambda;
    chain.p10 = params.p10;
    chain.p01 = params.p01;
    validate(chain);
    if (params.sigma2.size() != p_taps) {
        throw std::invalid_argument("FsParams: sigma2 size must equal the number of bins");
    }
    for (double s : params.sigma2) {
        if (!(s >= 0.0)) throw std::invalid_argument("FsParams: sigma2 must be non-negative");
    }
}

FsDenoiser::FsDenoiser(FsParams params, bool learn, bool tie_sigma)
    : params_(std::move(params)), learn_(learn), tie_sigma_(tie_sigma) {
    validate(params_, params_.sigma2.size());
}

void FsDenoiser::denoise(const CMat& pri_mean, const std::vector<double>& pri_var) {
    const std::size_t n = pri_mean.rows;
    const std::size_t p_taps = pri_mean.cols;
    validate(params_, p_taps);
    if (pri_var.size() != p_taps) throw std::invalid_argument("FsDenoiser: variance size mismatch");
    for (double v : pri_var) {
        if (!(v > 0.0)) throw std::invalid_argument("FsDenoiser: variances must be positive");
    }
    if (n == 0) throw std::invalid_argument("FsDenoiser: empty input");

    // Per-entry slab evidence, pooled across bins in the log-odds domain.
    RMat ev_logit(n, p_taps);
    std::vector<double> pooled(n, 0.0);
    for (std::size_t p = 0; p < p_taps; ++p) {
        for (std::size_t i = 0; i < n; ++i) {
            const double lo = support_evidence_logit(pri_mean(i, p), pri_var[p], params_.sigma2[p]);
            ev_logit(i, p) = lo;
            pooled[i] += lo;
        }
    }

    std::vector<double> evidence(n);
    for (std::size_t i = 0; i < n; ++i) evidence[i] = logistic(pooled[i]);
    ChainParams chain_params;
    chain_params.lambda0 = params_.lambda;
    chain_params.p10 = params_.p10;
    chain_params.p01 = params_.p01;
    const ChainPosterior chain = chain_forward_backward(evidence, chain_params);
    marginal_ = chain.marginal;
    pairwise_ = chain.pairwise;

    post_mean_ = CMat(n, p_taps);
    post_var_.assign(p_taps, 0.0);
    ext_support_ = RMat(n, p_taps);
    e2_active_ = RMat(n, p_taps);
    for (std::size_t p = 0; p < p_taps; ++p) {
        double var_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double chain_lo = logit(chain.forward[i]) + logit(chain.backward[i]);
            ext_support_(i, p) = logistic(chain_lo + pooled[i] - ev_logit(i, p));
            const ScalarPosterior sp =
                bg_scalar_posterior(pri_mean(i, p), pri_var[p], chain.marginal[i], params_.sigma2[p]);
            post_mean_(i, p) = sp.mean;
            var_sum += sp.var;
            e2_active_(i, p) = sp.e2_active;
        }
        post_var_[p] = var_sum / static_cast<double>(n);
    }
    has_last_ = true;
}

std::vector<double> FsDenoiser::prior_power(std::size_t p_taps) const {
    validate(params_, p_taps);
    std::vector<double> power(p_taps);
    for (std::size_t p = 0; p < p_taps; ++p) power[p] = params_.lambda * params_.sigma2[p];
    return power;
}

void FsDenoiser::em_update() {
    if (!learn_ || !has_last_) return;
    FsEmStats stats;
    stats.marginal = marginal_;
    stats.pairwise = pairwise_;
    stats.active_e2_sum.assign(e2_active_.cols, 0.0);
    for (std::size_t p = 0; p < e2_active_.cols; ++p) {
        for (std::size_t i = 0; i < e2_active_.rows; ++i) {
            stats.active_e2_sum[p] += marginal_[i] * e2_active_(i, p);
        }
    }
    params_ = em_update_fs(stats, params_, tie_sigma_);
}

nlohmann::json FsDenoiser::params_json() const {
    nlohmann::json j;
    j["model"] = "fs";
    j["lambda"] = params_.lambda;
    j["p01"] = params_.p01;
    j["p10"] = params_.p10;
    j["sigma2"] = params_.sigma2;
    return j;
}

}  // namespace stcs

#include "stcs/priors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stcs {

double clip_prob(double p) { return std::clamp(p, kProbClip, 1.0 - kProbClip); }

double logit(double p) {
    const double c = clip_prob(p);
    return std::log(c / (1.0 - c));
}

double logistic(double log_odds) {
    if (log_odds >= 0.0) {
        return 1.0 / (1.0 + std::exp(-log_odds));
    }
    const double e = std::exp(log_odds);
    return e / (1.0 + e);
}

double support_evidence_logit(cplx m, double v, double sigma2_h) {
    if (v <= 0.0) throw std::invalid_argument("support_evidence: need v > 0");
    if (sigma2_h < 0.0) throw std::invalid_argument("support_evidence: need sigma2_h >= 0");
    const double vs = v + sigma2_h;
    return std::log(v / vs) + std::norm(m) * sigma2_h / (v * vs);
}

double support_evidence(cplx m, double v, double sigma2_h) {
    return logistic(support_evidence_logit(m, v, sigma2_h));
}

ScalarPosterior bg_scalar_posterior(cplx m, double v, double pi_post, double sigma2_h) {
    if (v <= 0.0) throw std::invalid_argument("bg_scalar_posterior: need v > 0");
    if (sigma2_h < 0.0) throw std::invalid_argument("bg_scalar_posterior: need sigma2_h >= 0");
    if (pi_post < 0.0 || pi_post > 1.0) {
        throw std::invalid_argument("bg_scalar_posterior: pi_post outside [0, 1]");
    }
    const double g = sigma2_h / (sigma2_h + v);
    ScalarPosterior out;
    out.e2_active = g * v + std::norm(g * m);
    out.mean = pi_post * g * m;
    out.var = std::max(0.0, pi_post * out.e2_active - std::norm(out.mean));
    return out;
}

ChainParams tied_chain_params(double lambda, double p01) {
    ChainParams params;
    params.lambda0 = lambda;
    params.p01 = p01;
    params.p10 = p01 * lambda / (1.0 - lambda);
    return params;
}

void validate(const ChainParams& params) {
    if (!(params.lambda0 >= 0.0 && params.lambda0 <= 1.0)) {
        throw std::invalid_argument("chain params: lambda0 outside [0, 1]");
    }
    if (!(params.p10 > 0.0 && params.p10 < 1.0 && params.p01 > 0.0 && params.p01 < 1.0)) {
        throw std::invalid_argument("chain params: transition rates outside (0, 1)");
    }
}

ChainPosterior chain_forward_backward(const std::vector<double>& evidence,
                                      const ChainParams& params) {
    validate(params);
    const std::size_t n = evidence.size();
    if (n == 0) throw std::invalid_argument("chain_forward_backward: empty evidence");

    ChainPosterior out;
    out.forward.resize(n);
    out.backward.resize(n);
    out.marginal.resize(n);
    out.pairwise.resize(n - 1);

    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = clip_prob(evidence[i]);

    const double p10 = params.p10, p01 = params.p01;

    // Forward: scaled prediction/filter sweep; the per-step normalizer c
    // accumulates the data log-likelihood.
    double pred = clip_prob(params.lambda0);
    double log_z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.forward[i] = pred;
        const double c = pred * ev[i] + (1.0 - pred) * (1.0 - ev[i]);
        const double filt = pred * ev[i] / c;
        log_z += std::log(c);
        pred = filt * (1.0 - p01) + (1.0 - filt) * p10;
    }
    out.log_evidence = log_z;

    // Backward: normalized message recursion, uninformative at the last
    // position. r is the odds carried by everything after position i.
    out.backward[n - 1] = 0.5;
    for (std::size_t i = n - 1; i-- > 0;) {
        const double bw = out.backward[i + 1];
        const double r = (bw / (1.0 - bw)) * (ev[i + 1] / (1.0 - ev[i + 1]));
        out.backward[i] = ((1.0 - p01) * r + p01) /
                          ((1.0 - p01 + p10) * r + (1.0 - p10 + p01));
    }

    for (std::size_t i = 0; i < n; ++i) {
        out.marginal[i] = logistic(logit(out.forward[i]) + logit(out.backward[i]) + logit(ev[i]));
    }

    // Pairwise posteriors: prediction-and-evidence weight at i-1, transition,
    // evidence-and-backward weight at i, normalized over the four cells.
    for (std::size_t i = 1; i < n; ++i) {
        const double wa1 = out.forward[i - 1] * ev[i - 1];
        const double wa0 = (1.0 - out.forward[i - 1]) * (1.0 - ev[i - 1]);
        const double vb1 = out.backward[i] * ev[i];
        const double vb0 = (1.0 - out.backward[i]) * (1.0 - ev[i]);
        std::array<double, 4> cell;
        cell[0] = wa0 * (1.0 - p10) * vb0;  // 0 -> 0
        cell[1] = wa0 * p10 * vb1;          // 0 -> 1
        cell[2] = wa1 * p01 * vb0;          // 1 -> 0
        cell[3] = wa1 * (1.0 - p01) * vb1;  // 1 -> 1
        const double z = cell[0] + cell[1] + cell[2] + cell[3];
        for (double& c : cell) c /= z;
        out.pairwise[i - 1] = cell;
    }
    return out;
}

BgDenoiseResult denoise_bg_iid(const CMat& pri_mean, const std::vector<double>& pri_var,
                               const std::vector<BGPrior>& prior) {
    const std::size_t n = pri_mean.rows, p_taps = pri_mean.cols;
    if (pri_var.size() != p_taps || prior.size() != p_taps) {
        throw std::invalid_argument("denoise_bg_iid: per-tap parameter count mismatch");
    }
    BgDenoiseResult out;
    out.post_mean = CMat(n, p_taps);
    out.post_var.assign(p_taps, 0.0);
    out.pi_post = RMat(n, p_taps);
    out.e2_active = RMat(n, p_taps);
    for (std::size_t p = 0; p < p_taps; ++p) {
        const double v = pri_var[p];
        const double prior_logit = logit(prior[p].pi);
        double var_acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const cplx m = pri_mean(i, p);
            const double pi_post =
                logistic(prior_logit + support_evidence_logit(m, v, prior[p].sigma2));
            const ScalarPosterior sp = bg_scalar_posterior(m, v, pi_post, prior[p].sigma2);
            out.post_mean(i, p) = sp.mean;
            out.pi_post(i, p) = pi_post;
            out.e2_active(i, p) = sp.e2_active;
            var_acc += sp.var;
        }
        out.post_var[p] = var_acc / static_cast<double>(n);
    }
    return out;
}

}  // namespace stcs

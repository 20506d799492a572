#include "stcs/denoiser_ds.hpp"

#include <cmath>
#include <stdexcept>

#include "stcs/em.hpp"

namespace stcs {

void validate(const DsParams& params, std::size_t p_taps) {
    if (params.taps.size() != p_taps) {
        throw std::invalid_argument("DsParams: tap count must equal the number of delay taps");
    }
    if (!(params.epsilon > 0.0) || params.epsilon >= 1.0) {
        throw std::invalid_argument("DsParams: epsilon must be in (0, 1)");
    }
    for (const DsTapParams& tap : params.taps) {
        ChainParams chain;
        chain.lambda0 = tap.lambda;
        chain.p10 = tap.p10;
        chain.p01 = tap.p01;
        validate(chain);
        if (!(tap.gamma > 0.0) || tap.gamma >= 1.0) {
            throw std::invalid_argument("DsParams: gamma must be in (0, 1)");
        }
        if (!(tap.sigma2 >= 0.0)) throw std::invalid_argument("DsParams: sigma2 must be non-negative");
    }
}

const char* ds_mode_name(DsMode mode) {
    return mode == DsMode::Exact ? "exact" : "two_sweep";
}

DsMode ds_mode_from_name(const std::string& name) {
    if (name == "exact") return DsMode::Exact;
    if (name == "two_sweep") return DsMode::TwoSweep;
    throw std::invalid_argument("unknown delay-support inference mode: " + name);
}

DsDenoiser::DsDenoiser(DsParams params, DsMode mode, bool learn)
    : params_(std::move(params)), mode_(mode), learn_(learn) {
    validate(params_, params_.taps.size());
}

namespace {

// Gate-conditional decomposition for one tap: the occupied branch is the
// exact chain posterior, the unoccupied branch is i.i.d. Bern(epsilon), and
// the gate posterior follows from the two branch evidences.
struct ExactTap {
    ChainPosterior chain;
    std::vector<double> leak_marginal;
    double t_post = 0.0;
};

ExactTap exact_tap(const DsTapParams& tap, double epsilon, const std::vector<double>& evidence) {
    ExactTap out;
    ChainParams chain_params;
    chain_params.lambda0 = tap.lambda;
    chain_params.p10 = tap.p10;
    chain_params.p01 = tap.p01;
    out.chain = chain_forward_backward(evidence, chain_params);

    const std::size_t n = evidence.size();
    out.leak_marginal.resize(n);
    double log_z0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = clip_prob(evidence[i]);  // same clipping as the chain sweep
        const double c = epsilon * e + (1.0 - epsilon) * (1.0 - e);
        log_z0 += std::log(c);
        out.leak_marginal[i] = epsilon * e / c;
    }
    out.t_post = logistic(logit(tap.gamma) + out.chain.log_evidence - log_z0);
    return out;
}

}  // namespace

void DsDenoiser::denoise_exact_tap(std::size_t p, const CMat& pri_mean, double v) {
    const DsTapParams& tap = params_.taps[p];
    const std::size_t n = pri_mean.rows;
    std::vector<double> evidence(n);
    std::vector<double> ev_logit(n);
    for (std::size_t i = 0; i < n; ++i) {
        ev_logit[i] = support_evidence_logit(pri_mean(i, p), v, tap.sigma2);
        evidence[i] = logistic(ev_logit[i]);
    }
    const ExactTap et = exact_tap(tap, params_.epsilon, evidence);
    t_posterior_[p] = et.t_post;

    double var_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double pi_post =
            et.t_post * et.chain.marginal[i] + (1.0 - et.t_post) * et.leak_marginal[i];
        marginal_(i, p) = pi_post;
        const ScalarPosterior sp = bg_scalar_posterior(pri_mean(i, p), v, pi_post, tap.sigma2);
        post_mean_(i, p) = sp.mean;
        var_sum += sp.var;
        e2_active_(i, p) = sp.e2_active;
    }
    post_var_[p] = var_sum / static_cast<double>(n);

    if (learn_) {
        marginal_t1_[p] = et.chain.marginal;
        pairwise_t1_[p] = et.chain.pairwise;
        t_posterior_exact_[p] = et.t_post;
        em_marginal_[p].resize(n);
        for (std::size_t i = 0; i < n; ++i) em_marginal_[p][i] = marginal_(i, p);
    }
}

void DsDenoiser::denoise_schedule_tap(std::size_t p, const CMat& pri_mean, double v) {
    const DsTapParams& tap = params_.taps[p];
    const double eps = params_.epsilon;
    const std::size_t n = pri_mean.rows;
    std::vector<double> ev_logit(n);
    std::vector<double> evidence(n);
    for (std::size_t i = 0; i < n; ++i) {
        ev_logit[i] = support_evidence_logit(pri_mean(i, p), v, tap.sigma2);
        evidence[i] = clip_prob(logistic(ev_logit[i]));
    }

    // One sweep of the chain under position-wise gate beliefs theta: the
    // transition into position i mixes the chain kernel (weight theta[i]) with
    // the i.i.d. Bern(eps) leak kernel, and the initial activity mixes lambda
    // with eps under theta[0].
    struct Sweep {
        std::vector<double> lf;  // forward prediction P(s_i = 1 | past evidence)
        std::vector<double> lb;  // normalized backward message on s_i = 1
    };
    const auto run_sweep = [&](const std::vector<double>& theta) {
        Sweep s;
        s.lf.resize(n);
        s.lb.resize(n);
        double pred = theta[0] * tap.lambda + (1.0 - theta[0]) * eps;
        for (std::size_t i = 0; i < n; ++i) {
            s.lf[i] = pred;
            const double c = pred * evidence[i] + (1.0 - pred) * (1.0 - evidence[i]);
            const double filt = pred * evidence[i] / c;
            if (i + 1 < n) {
                const double th = theta[i + 1];
                const double t11 = th * (1.0 - tap.p01) + (1.0 - th) * eps;
                const double t10 = th * tap.p10 + (1.0 - th) * eps;
                pred = filt * t11 + (1.0 - filt) * t10;
            }
        }
        double b1 = 0.5;
        double b0 = 0.5;
        s.lb[n - 1] = 0.5;
        for (std::size_t i = n - 1; i-- > 0;) {
            const double th = theta[i + 1];
            const double t11 = th * (1.0 - tap.p01) + (1.0 - th) * eps;
            const double t10 = th * tap.p10 + (1.0 - th) * eps;
            const double e_next = evidence[i + 1];
            const double nb1 = t11 * e_next * b1 + (1.0 - t11) * (1.0 - e_next) * b0;
            const double nb0 = t10 * e_next * b1 + (1.0 - t10) * (1.0 - e_next) * b0;
            const double z = nb1 + nb0;
            b1 = nb1 / z;
            b0 = nb0 / z;
            s.lb[i] = b1;
        }
        return s;
    };

    // Messages from each transition factor up to the gate: combine the
    // leave-one-factor-out beliefs of its endpoint states with the chain and
    // leak kernels.
    const auto gate_messages = [&](const Sweep& s) {
        std::vector<double> ff(n);
        std::vector<double> eb(n);
        for (std::size_t i = 0; i < n; ++i) {
            ff[i] = logistic(logit(s.lf[i]) + logit(evidence[i]));
            eb[i] = logistic(logit(s.lb[i]) + logit(evidence[i]));
        }
        std::vector<double> theta_out(n);
        {
            const double v1 = tap.lambda * eb[0] + (1.0 - tap.lambda) * (1.0 - eb[0]);
            const double v0 = eps * eb[0] + (1.0 - eps) * (1.0 - eb[0]);
            theta_out[0] = v1 / (v0 + v1);
        }
        for (std::size_t i = 1; i < n; ++i) {
            const double fa = ff[i - 1];
            const double gb = eb[i];
            const double v1 = fa * ((1.0 - tap.p01) * gb + tap.p01 * (1.0 - gb)) +
                              (1.0 - fa) * (tap.p10 * gb + (1.0 - tap.p10) * (1.0 - gb));
            const double v0 = eps * gb + (1.0 - eps) * (1.0 - gb);
            theta_out[i] = v1 / (v0 + v1);
        }
        return theta_out;
    };

    // Bootstrap gate beliefs from the prior, one sweep, gate aggregation,
    // second sweep with the refined beliefs.
    const Sweep first = run_sweep(std::vector<double>(n, tap.gamma));
    const std::vector<double> theta_up = gate_messages(first);
    double theta_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) theta_total += logit(theta_up[i]);
    std::vector<double> theta_down(n);
    for (std::size_t i = 0; i < n; ++i) {
        theta_down[i] = logistic(logit(tap.gamma) + theta_total - logit(theta_up[i]));
    }
    const Sweep second = run_sweep(theta_down);

    t_posterior_[p] = logistic(logit(tap.gamma) + theta_total);
    double var_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double support_lo = logit(second.lf[i]) + logit(second.lb[i]);
        const double pi_post = logistic(support_lo + ev_logit[i]);
        marginal_(i, p) = pi_post;
        const ScalarPosterior sp = bg_scalar_posterior(pri_mean(i, p), v, pi_post, tap.sigma2);
        post_mean_(i, p) = sp.mean;
        var_sum += sp.var;
        e2_active_(i, p) = sp.e2_active;
    }
    post_var_[p] = var_sum / static_cast<double>(n);

    if (learn_) {
        // Learning always consumes the gate-conditional decomposition.
        std::vector<double> raw_evidence(n);
        for (std::size_t i = 0; i < n; ++i) raw_evidence[i] = logistic(ev_logit[i]);
        const ExactTap et = exact_tap(tap, eps, raw_evidence);
        marginal_t1_[p] = et.chain.marginal;
        pairwise_t1_[p] = et.chain.pairwise;
        t_posterior_exact_[p] = et.t_post;
        em_marginal_[p].resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            em_marginal_[p][i] =
                et.t_post * et.chain.marginal[i] + (1.0 - et.t_post) * et.leak_marginal[i];
        }
    }
}

void DsDenoiser::denoise(const CMat& pri_mean, const std::vector<double>& pri_var) {
    const std::size_t n = pri_mean.rows;
    const std::size_t p_taps = pri_mean.cols;
    validate(params_, p_taps);
    if (pri_var.size() != p_taps) throw std::invalid_argument("DsDenoiser: variance size mismatch");
    for (double v : pri_var) {
        if (!(v > 0.0)) throw std::invalid_argument("DsDenoiser: variances must be positive");
    }
    if (n == 0) throw std::invalid_argument("DsDenoiser: empty input");

    post_mean_ = CMat(n, p_taps);
    post_var_.assign(p_taps, 0.0);
    marginal_ = RMat(n, p_taps);
    e2_active_ = RMat(n, p_taps);
    t_posterior_.assign(p_taps, 0.0);
    if (learn_) {
        marginal_t1_.assign(p_taps, {});
        pairwise_t1_.assign(p_taps, {});
        em_marginal_.assign(p_taps, {});
        t_posterior_exact_.assign(p_taps, 0.0);
    }
    for (std::size_t p = 0; p < p_taps; ++p) {
        if (mode_ == DsMode::Exact) {
            denoise_exact_tap(p, pri_mean, pri_var[p]);
        } else {
            denoise_schedule_tap(p, pri_mean, pri_var[p]);
        }
    }
    has_last_ = true;
}

std::vector<double> DsDenoiser::prior_power(std::size_t p_taps) const {
    validate(params_, p_taps);
    std::vector<double> power(p_taps);
    for (std::size_t p = 0; p < p_taps; ++p) {
        const DsTapParams& tap = params_.taps[p];
        power[p] = tap.gamma * tap.lambda * tap.sigma2;
    }
    return power;
}

void DsDenoiser::em_update() {
    if (!learn_ || !has_last_) return;
    const std::size_t p_taps = params_.taps.size();
    std::vector<DsTapEmStats> stats(p_taps);
    for (std::size_t p = 0; p < p_taps; ++p) {
        stats[p].t_posterior = t_posterior_exact_[p];
        stats[p].marginal_t1 = marginal_t1_[p];
        stats[p].pairwise_t1 = pairwise_t1_[p];
        stats[p].marginal = em_marginal_[p];
        stats[p].e2_active.resize(e2_active_.rows);
        for (std::size_t i = 0; i < e2_active_.rows; ++i) {
            stats[p].e2_active[i] = e2_active_(i, p);
        }
    }
    params_ = em_update_ds(stats, params_);
}

nlohmann::json DsDenoiser::params_json() const {
    nlohmann::json j;
    j["model"] = "ds";
    j["mode"] = ds_mode_name(mode_);
    j["epsilon"] = params_.epsilon;
    nlohmann::json taps = nlohmann::json::array();
    for (const DsTapParams& tap : params_.taps) {
        taps.push_back({{"lambda", tap.lambda},
                        {"p01", tap.p01},
                        {"p10", tap.p10},
                        {"gamma", tap.gamma},
                        {"sigma2", tap.sigma2}});
    }
    j["taps"] = std::move(taps);
    return j;
}

}  // namespace stcs

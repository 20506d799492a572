#include "stcs/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "stcs/em.hpp"

namespace stcs {

void validate(const TurboConfig& cfg) {
    if (cfg.max_iters < 1) throw std::invalid_argument("TurboConfig: max_iters must be >= 1");
    if (!(cfg.damping > 0.0) || cfg.damping > 1.0) {
        throw std::invalid_argument("TurboConfig: damping must be in (0, 1]");
    }
    if (!(cfg.v_min > 0.0) || !(cfg.v_max > cfg.v_min)) {
        throw std::invalid_argument("TurboConfig: need 0 < v_min < v_max");
    }
    if (!std::isfinite(cfg.stop_tol)) throw std::invalid_argument("TurboConfig: stop_tol not finite");
    if (!(cfg.residual_floor >= 0.0) || !std::isfinite(cfg.residual_floor) ||
        cfg.residual_floor > 10.0) {
        throw std::invalid_argument("TurboConfig: residual_floor must be in [0, 10]");
    }
}

void lmmse_update(const SensingOperator& op, const cplx* y, const cplx* h_pri, double v_pri,
                  double sigma2, cplx* h_post, double& v_post, CVec& fft_scratch, CVec& m_scratch,
                  CVec& n_scratch) {
    if (!(v_pri > 0.0)) throw std::invalid_argument("lmmse_update: v_pri must be positive");
    if (sigma2 < 0.0) throw std::invalid_argument("lmmse_update: sigma2 must be non-negative");
    const std::size_t n = op.n;
    const std::size_t m = op.m;
    m_scratch.resize(m);
    n_scratch.resize(n);
    apply_forward(op, h_pri, m_scratch.data(), fft_scratch);
    for (std::size_t j = 0; j < m; ++j) m_scratch[j] = y[j] - m_scratch[j];
    apply_adjoint(op, m_scratch.data(), n_scratch.data(), fft_scratch);
    const double gain = v_pri / (v_pri + sigma2);
    for (std::size_t i = 0; i < n; ++i) h_post[i] = h_pri[i] + gain * n_scratch[i];
    v_post = v_pri * (1.0 - (static_cast<double>(m) / static_cast<double>(n)) * gain);
}

std::pair<CVec, double> lmmse_update(const SensingOperator& op, const CVec& y, const CVec& h_pri,
                                     double v_pri, double sigma2) {
    if (y.size() != op.m || h_pri.size() != op.n) {
        throw std::invalid_argument("lmmse_update: dimension mismatch");
    }
    CVec h_post(op.n);
    double v_post = 0.0;
    CVec fft_scratch, m_scratch, n_scratch;
    lmmse_update(op, y.data(), h_pri.data(), v_pri, sigma2, h_post.data(), v_post, fft_scratch,
                 m_scratch, n_scratch);
    return {std::move(h_post), v_post};
}

double residual_variance_estimate(const SensingOperator& op, const cplx* y, const cplx* h_pri,
                                  double sigma2, CVec& fft_scratch, CVec& m_scratch) {
    if (sigma2 < 0.0) {
        throw std::invalid_argument("residual_variance_estimate: sigma2 must be non-negative");
    }
    const std::size_t m = op.m;
    m_scratch.resize(m);
    apply_forward(op, h_pri, m_scratch.data(), fft_scratch);
    double r2 = 0.0;
    for (std::size_t j = 0; j < m; ++j) r2 += std::norm(y[j] - m_scratch[j]);
    return r2 / static_cast<double>(m) - sigma2;
}

double residual_variance_estimate(const SensingOperator& op, const CVec& y, const CVec& h_pri,
                                  double sigma2) {
    if (y.size() != op.m || h_pri.size() != op.n) {
        throw std::invalid_argument("residual_variance_estimate: dimension mismatch");
    }
    CVec fft_scratch, m_scratch;
    return residual_variance_estimate(op, y.data(), h_pri.data(), sigma2, fft_scratch, m_scratch);
}

ExtrinsicResult extrinsic_update(const cplx* post_mean, double v_post, const cplx* pri_mean,
                                 double v_pri, std::size_t count, cplx* ext_mean, double v_min,
                                 double v_max) {
    if (!(v_pri > 0.0) || v_post < 0.0) {
        throw std::invalid_argument("extrinsic_update: invalid variances");
    }
    ExtrinsicResult res;
    const double denom = v_pri - v_post;
    if (denom <= 0.0) {
        // The posterior carries no new information; restart with an
        // uninformative zero-mean message at the variance ceiling.
        res.v_ext = v_max;
        res.degenerate = true;
        std::fill(ext_mean, ext_mean + count, cplx(0.0, 0.0));
        return res;
    }
    // h_ext = v_ext (h_post / v_post - h_pri / v_pri) rewritten without the
    // division by v_post so a zero posterior variance degrades gracefully to
    // h_ext = h_post.
    res.v_ext = std::clamp(v_post * v_pri / denom, v_min, v_max);
    const double a = v_pri / denom;
    const double b = v_post / denom;
    for (std::size_t i = 0; i < count; ++i) ext_mean[i] = a * post_mean[i] - b * pri_mean[i];
    return res;
}

BgIidDenoiser::BgIidDenoiser(std::vector<BGPrior> prior, Domain domain, bool learn)
    : prior_(std::move(prior)), domain_(domain), learn_(learn) {
    if (prior_.empty()) throw std::invalid_argument("BgIidDenoiser: empty prior");
    for (const BGPrior& p : prior_) {
        if (!(p.pi >= 0.0) || p.pi > 1.0 || !(p.sigma2 >= 0.0)) {
            throw std::invalid_argument("BgIidDenoiser: invalid prior parameters");
        }
    }
}

void BgIidDenoiser::denoise(const CMat& pri_mean, const std::vector<double>& pri_var) {
    if (pri_mean.cols != prior_.size()) {
        throw std::invalid_argument("BgIidDenoiser: tap count mismatch");
    }
    last_ = denoise_bg_iid(pri_mean, pri_var, prior_);
    has_last_ = true;
    post_mean_ = last_.post_mean;
    post_var_ = last_.post_var;
}

std::vector<double> BgIidDenoiser::prior_power(std::size_t p_taps) const {
    if (p_taps != prior_.size()) throw std::invalid_argument("BgIidDenoiser: tap count mismatch");
    std::vector<double> power(p_taps);
    for (std::size_t p = 0; p < p_taps; ++p) power[p] = prior_[p].pi * prior_[p].sigma2;
    return power;
}

void BgIidDenoiser::em_update() {
    if (!learn_ || !has_last_) return;
    prior_ = em_update_bg(last_.pi_post, last_.e2_active, prior_);
}

nlohmann::json BgIidDenoiser::params_json() const {
    nlohmann::json j;
    j["model"] = "bg_iid";
    nlohmann::json pi = nlohmann::json::array();
    nlohmann::json sigma2 = nlohmann::json::array();
    for (const BGPrior& p : prior_) {
        pi.push_back(p.pi);
        sigma2.push_back(p.sigma2);
    }
    j["pi"] = std::move(pi);
    j["sigma2"] = std::move(sigma2);
    return j;
}

nlohmann::json to_json(const TrialResult& result) {
    nlohmann::json j;
    j["domain"] = domain_name(result.domain);
    j["iterations"] = result.iterations;
    j["converged"] = result.converged;
    j["diverged"] = result.diverged;
    j["degeneracies"] = result.degeneracies;
    j["wall_ms"] = result.wall_ms;
    if (std::isfinite(result.final_nmse)) {
        j["final_nmse"] = result.final_nmse;
        j["final_nmse_db"] = to_db(result.final_nmse);
    }
    j["nmse_trace_db"] = result.nmse_trace_db;
    j["ext_nmse_trace_db"] = result.ext_nmse_trace_db;
    if (!result.diagnostic.empty()) j["diagnostic"] = result.diagnostic;
    j["learned_params"] = result.learned_params;
    if (!result.param_trajectory.empty()) j["param_trajectory"] = result.param_trajectory;
    return j;
}

TrialResult run_turbo(const std::vector<SensingOperator>& ops, const CMat& y, double sigma2,
                      ModuleB& denoiser, const TurboConfig& cfg, const ChannelMatrix* truth) {
    validate(cfg);
    if (ops.empty()) throw std::invalid_argument("run_turbo: no sensing operators");
    const std::size_t n = ops[0].n;
    const std::size_t m = ops[0].m;
    const std::size_t p_taps = y.cols;
    if (p_taps == 0 || y.rows != m) {
        throw std::invalid_argument("run_turbo: observation shape mismatch");
    }
    if (ops.size() != 1 && ops.size() != p_taps) {
        throw std::invalid_argument("run_turbo: need one shared operator or one per tap");
    }
    for (const SensingOperator& op : ops) {
        if (op.n != n || op.m != m) {
            throw std::invalid_argument("run_turbo: operator shape mismatch");
        }
    }
    if (sigma2 < 0.0) throw std::invalid_argument("run_turbo: sigma2 must be non-negative");
    if (truth != nullptr &&
        (truth->domain != denoiser.domain() || truth->values.rows != n ||
         truth->values.cols != p_taps)) {
        throw std::invalid_argument("run_turbo: truth shape or domain mismatch");
    }

    const auto t0 = std::chrono::steady_clock::now();
    TrialResult res;
    res.domain = denoiser.domain();

    std::vector<double> v_a_pri = denoiser.prior_power(p_taps);
    for (double& v : v_a_pri) v = std::clamp(v, cfg.v_min, cfg.v_max);
    CMat h_a_pri(n, p_taps);
    CMat h_a_post(n, p_taps);
    std::vector<double> v_a_post(p_taps, 0.0);
    CMat ext_buf(n, p_taps);
    CMat h_b_pri(n, p_taps);
    std::vector<double> v_b_pri(p_taps, 0.0);
    CMat prev_post;
    bool has_prev = false;
    CVec fft_scratch;
    CVec m_scratch;
    CVec n_scratch;

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        if (cfg.residual_floor > 0.0) {
            for (std::size_t p = 0; p < p_taps; ++p) {
                const SensingOperator& op = ops[ops.size() == 1 ? 0 : p];
                const double v_meas = residual_variance_estimate(op, y.col(p), h_a_pri.col(p),
                                                                 sigma2, fft_scratch, m_scratch);
                const double floor = cfg.residual_floor * v_meas;
                if (floor > v_a_pri[p]) v_a_pri[p] = std::min(floor, cfg.v_max);
            }
        }
        for (std::size_t p = 0; p < p_taps; ++p) {
            const SensingOperator& op = ops[ops.size() == 1 ? 0 : p];
            lmmse_update(op, y.col(p), h_a_pri.col(p), v_a_pri[p], sigma2, h_a_post.col(p),
                         v_a_post[p], fft_scratch, m_scratch, n_scratch);
        }
        for (std::size_t p = 0; p < p_taps; ++p) {
            const ExtrinsicResult ext =
                extrinsic_update(h_a_post.col(p), v_a_post[p], h_a_pri.col(p), v_a_pri[p], n,
                                 ext_buf.col(p), cfg.v_min, cfg.v_max);
            if (ext.degenerate) ++res.degeneracies;
            v_b_pri[p] = ext.v_ext;
        }
        if (cfg.damping < 1.0 && iter > 1) {
            for (std::size_t i = 0; i < h_b_pri.data.size(); ++i) {
                h_b_pri.data[i] =
                    cfg.damping * ext_buf.data[i] + (1.0 - cfg.damping) * h_b_pri.data[i];
            }
        } else {
            h_b_pri = ext_buf;
        }
        if (!all_finite(h_b_pri)) {
            res.diverged = true;
            res.diagnostic =
                "non-finite extrinsic message into Module B at iteration " + std::to_string(iter);
            break;
        }

        denoiser.denoise(h_b_pri, v_b_pri);
        const CMat& post = denoiser.post_mean();
        if (post.rows != n || post.cols != p_taps || denoiser.post_var().size() != p_taps) {
            throw std::logic_error("run_turbo: denoiser output shape mismatch");
        }
        if (!all_finite(post)) {
            res.diverged = true;
            res.diagnostic = "non-finite Module B posterior at iteration " + std::to_string(iter);
            break;
        }
        res.iterations = iter;
        if (truth != nullptr) res.nmse_trace_db.push_back(to_db(nmse(post, truth->values)));

        for (std::size_t p = 0; p < p_taps; ++p) {
            const double v_post = std::min(std::max(denoiser.post_var()[p], 0.0), cfg.v_max);
            const ExtrinsicResult ext =
                extrinsic_update(post.col(p), v_post, h_b_pri.col(p), v_b_pri[p], n,
                                 ext_buf.col(p), cfg.v_min, cfg.v_max);
            if (ext.degenerate) ++res.degeneracies;
            v_a_pri[p] = ext.v_ext;
        }
        if (cfg.damping < 1.0 && iter > 1) {
            for (std::size_t i = 0; i < h_a_pri.data.size(); ++i) {
                h_a_pri.data[i] =
                    cfg.damping * ext_buf.data[i] + (1.0 - cfg.damping) * h_a_pri.data[i];
            }
        } else {
            h_a_pri = ext_buf;
        }
        if (!all_finite(h_a_pri)) {
            res.diverged = true;
            res.diagnostic =
                "non-finite extrinsic message into Module A at iteration " + std::to_string(iter);
            break;
        }
        if (truth != nullptr) res.ext_nmse_trace_db.push_back(to_db(nmse(h_a_pri, truth->values)));

        denoiser.em_update();
        if (denoiser.learning()) res.param_trajectory.push_back(denoiser.params_json());

        if (has_prev && cfg.stop_tol > 0.0) {
            double diff2 = 0.0;
            for (std::size_t i = 0; i < post.data.size(); ++i) {
                diff2 += std::norm(post.data[i] - prev_post.data[i]);
            }
            const double ref2 = fro_norm_sq(prev_post);
            if (ref2 > 0.0 && std::sqrt(diff2 / ref2) < cfg.stop_tol) res.converged = true;
        }
        prev_post = post;
        has_prev = true;
        if (res.converged) break;
    }

    res.h_hat = has_prev ? prev_post : CMat(n, p_taps);
    res.final_nmse = (truth != nullptr && has_prev) ? nmse(res.h_hat, truth->values)
                                                    : std::numeric_limits<double>::quiet_NaN();
    res.learned_params = denoiser.params_json();
    res.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

}  // namespace stcs

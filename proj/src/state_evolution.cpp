#include "stcs/state_evolution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stcs {

SeModuleAResult se_module_a(double tau_a, double sigma2, std::size_t m, std::size_t n,
                            double v_min) {
    if (!(tau_a >= 0.0)) throw std::invalid_argument("se_module_a: tau_a must be non-negative");
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("se_module_a: sigma2 must be non-negative");
    if (m == 0 || n == 0 || m > n) throw std::invalid_argument("se_module_a: need 0 < m <= n");
    SeModuleAResult res;
    const double ratio = static_cast<double>(n) / static_cast<double>(m);
    res.tau_b = ratio * (tau_a + sigma2) - tau_a;
    if (res.tau_b <= 0.0) {
        res.tau_b = v_min;
        res.clamped = true;
    }
    return res;
}

namespace {

// Welford-free two-pass-in-one accumulation of a per-trial scalar.
struct MeanAccum {
    double sum = 0.0;
    double sum_sq = 0.0;
    int count = 0;
    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++count;
    }
    double mean() const { return count > 0 ? sum / count : 0.0; }
    double stderr_of_mean() const {
        if (count < 2) return 0.0;
        const double m = mean();
        const double var = std::max(0.0, (sum_sq - count * m * m) / (count - 1));
        return std::sqrt(var / count);
    }
};

}  // namespace

SeGResult se_module_b_mc(double tau_b, ModuleB& denoiser, const ChannelGenSpec& chan_spec,
                         int trials, Rng& rng, double v_min, double v_max) {
    if (!(tau_b > 0.0)) throw std::invalid_argument("se_module_b_mc: tau_b must be positive");
    if (trials < 1) throw std::invalid_argument("se_module_b_mc: trials must be >= 1");
    validate(chan_spec);

    const std::size_t n = chan_spec.n;
    const std::size_t p_taps = chan_spec.p_taps;
    const double entries = static_cast<double>(n * p_taps);
    const std::vector<double> pri_var(p_taps, tau_b);

    MeanAccum ext_acc;
    MeanAccum post_acc;
    CVec ext(n);
    for (int t = 0; t < trials; ++t) {
        ChannelMatrix truth = generate_channel(chan_spec, rng);
        if (truth.domain != denoiser.domain()) {
            truth = denoiser.domain() == Domain::AngleFrequency ? delay_to_freq(truth)
                                                                : freq_to_delay(truth);
        }
        CMat pri = truth.values;
        for (auto& x : pri.data) x += draw_cgauss(rng, tau_b);

        denoiser.denoise(pri, pri_var);
        const CMat& post = denoiser.post_mean();
        const std::vector<double>& post_var = denoiser.post_var();

        double post_err = 0.0;
        for (std::size_t i = 0; i < post.data.size(); ++i) {
            post_err += std::norm(post.data[i] - truth.values.data[i]);
        }
        post_acc.add(post_err / entries);

        if (denoiser.passthrough()) continue;

        double ext_err = 0.0;
        for (std::size_t p = 0; p < p_taps; ++p) {
            const double vp = std::clamp(post_var[p], 0.0, v_max);
            const ExtrinsicResult ex =
                extrinsic_update(post.col(p), vp, pri.col(p), tau_b, n, ext.data(), v_min, v_max);
            const cplx* truth_col = truth.values.col(p);
            if (ex.degenerate) {
                // v_post >= v_pri: the Gaussian division is undefined and the
                // engine would restart this tap. For the error map the
                // denoiser's knowledge is its posterior, so score that instead
                // of the restart's zero mean.
                const cplx* post_col = post.col(p);
                for (std::size_t i = 0; i < n; ++i) ext_err += std::norm(post_col[i] - truth_col[i]);
            } else {
                for (std::size_t i = 0; i < n; ++i) ext_err += std::norm(ext[i] - truth_col[i]);
            }
        }
        ext_acc.add(ext_err / entries);
    }

    SeGResult res;
    res.mse_post = post_acc.mean();
    res.mse_post_stderr = post_acc.stderr_of_mean();
    if (denoiser.passthrough()) {
        // Posterior equals prior: the extrinsic message is undefined, so the
        // map returns its input exactly.
        res.tau_a = tau_b;
        res.tau_a_stderr = 0.0;
    } else {
        res.tau_a = ext_acc.mean();
        res.tau_a_stderr = ext_acc.stderr_of_mean();
    }
    return res;
}

SeState se_fixed_point(double sigma2, std::size_t m, std::size_t n, ModuleB& denoiser,
                       const ChannelGenSpec& chan_spec, double tol, int max_iter, int trials,
                       std::uint64_t seed) {
    if (max_iter < 1) throw std::invalid_argument("se_fixed_point: max_iter must be >= 1");
    validate(chan_spec);
    if (chan_spec.n != n) {
        throw std::invalid_argument("se_fixed_point: channel rows must match operator columns");
    }

    SeState st;
    st.entry_power = expected_entry_power(chan_spec);
    double tau_a = st.entry_power;  // prior signal power per entry
    int rising = 0;
    for (int it = 1; it <= max_iter; ++it) {
        const SeModuleAResult fa = se_module_a(tau_a, sigma2, m, n);
        st.clamped = st.clamped || fa.clamped;
        // Common random numbers: every Module B evaluation sees the same
        // channel draws and noise, so g is a deterministic function of tau_b
        // and the relative tolerance below is meaningful.
        Rng rng(seed);
        const SeGResult g = se_module_b_mc(fa.tau_b, denoiser, chan_spec, trials, rng);
        st.trajectory.push_back({it, g.tau_a, fa.tau_b, g.tau_a_stderr, g.mse_post});
        st.iterations = it;
        st.tau_b = fa.tau_b;
        st.mse_post = g.mse_post;

        if (g.tau_a > tau_a + 3.0 * g.tau_a_stderr) {
            if (++rising > 3) {
                st.oscillated = true;
                tau_a = g.tau_a;
                break;
            }
        } else {
            rising = 0;
        }

        const double delta = std::abs(g.tau_a - tau_a);
        tau_a = g.tau_a;
        if (delta <= tol * std::max(tau_a, 1e-300)) {
            st.converged = true;
            break;
        }
    }
    st.tau_a = tau_a;
    st.predicted_nmse = st.entry_power > 0.0 ? tau_a / st.entry_power : 0.0;
    st.predicted_nmse_post = st.entry_power > 0.0 ? st.mse_post / st.entry_power : 0.0;
    return st;
}

}  // namespace stcs

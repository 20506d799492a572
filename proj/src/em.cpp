#include "stcs/em.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stcs {

double em_project_prob(double p) {
    return std::clamp(p, kEmProbFloor, 1.0 - kEmProbFloor);
}

double em_project_var(double v) {
    return std::max(v, kEmVarFloor);
}

double em_init_sigma2(const cplx* y, std::size_t m, std::size_t n) {
    if (m == 0 || n == 0) throw std::invalid_argument("em_init_sigma2: empty dimensions");
    double energy = 0.0;
    for (std::size_t i = 0; i < m; ++i) energy += std::norm(y[i]);
    // ||A||_F^2 = m for row-orthonormal operators, so the denominator is m^2.
    return em_project_var(2.0 * static_cast<double>(n) * energy /
                          (static_cast<double>(m) * static_cast<double>(m)));
}

FsParams em_init_fs(const CMat& y, std::size_t n) {
    FsParams params;
    params.lambda = 0.3;
    params.p01 = 0.1;
    params.p10 = params.p01 * params.lambda / (1.0 - params.lambda);
    params.sigma2.resize(y.cols);
    for (std::size_t p = 0; p < y.cols; ++p) {
        params.sigma2[p] = em_init_sigma2(y.col(p), y.rows, n);
    }
    return params;
}

DsParams em_init_ds(const CMat& y, std::size_t n, double epsilon) {
    DsParams params;
    params.epsilon = epsilon;
    params.taps.resize(y.cols);
    for (std::size_t p = 0; p < y.cols; ++p) {
        DsTapParams& tap = params.taps[p];
        tap.lambda = 0.3;
        tap.p01 = 0.1;
        tap.p10 = tap.p01 * tap.lambda / (1.0 - tap.lambda);
        tap.gamma = 0.1;
        tap.sigma2 = em_init_sigma2(y.col(p), y.rows, n);
    }
    return params;
}

std::vector<BGPrior> em_init_bg(const CMat& y, std::size_t n) {
    std::vector<BGPrior> prior(y.cols);
    for (std::size_t p = 0; p < y.cols; ++p) {
        prior[p].pi = 0.3;
        prior[p].sigma2 = em_init_sigma2(y.col(p), y.rows, n);
    }
    return prior;
}

namespace {

// Exit-rate M-step shared by the chain models: expected 1->0 transitions over
// expected visits to state 1 at the transition source. Returns the current
// value when the source mass is degenerate.
double update_p01(const std::vector<std::array<double, 4>>& pairwise, double current) {
    double num = 0.0;
    double den = 0.0;
    for (const auto& pw : pairwise) {
        num += pw[2];           // (a=1, b=0)
        den += pw[2] + pw[3];   // (a=1, *)
    }
    if (den <= kEmStatGuard) return current;
    return em_project_prob(num / den);
}

double mean_of(const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

}  // namespace

FsParams em_update_fs(const FsEmStats& stats, const FsParams& current, bool tie_sigma) {
    if (stats.marginal.empty() || stats.pairwise.size() + 1 != stats.marginal.size()) {
        throw std::invalid_argument("em_update_fs: inconsistent statistics");
    }
    FsParams next = current;
    next.lambda = em_project_prob(mean_of(stats.marginal));
    next.p01 = update_p01(stats.pairwise, current.p01);
    next.p10 = em_project_prob(next.p01 * next.lambda / (1.0 - next.lambda));

    double activity_sum = 0.0;
    for (double m : stats.marginal) activity_sum += m;
    if (tie_sigma) {
        double e2_total = 0.0;
        for (double e2 : stats.active_e2_sum) e2_total += e2;
        const double pooled_den = activity_sum * static_cast<double>(next.sigma2.size());
        if (pooled_den > kEmStatGuard) {
            const double pooled = em_project_var(e2_total / pooled_den);
            std::fill(next.sigma2.begin(), next.sigma2.end(), pooled);
        }
        return next;
    }
    for (std::size_t p = 0; p < next.sigma2.size(); ++p) {
        if (p < stats.active_e2_sum.size() && activity_sum > kEmStatGuard) {
            next.sigma2[p] = em_project_var(stats.active_e2_sum[p] / activity_sum);
        }
    }
    return next;
}

DsParams em_update_ds(const std::vector<DsTapEmStats>& stats, const DsParams& current) {
    if (stats.size() != current.taps.size()) {
        throw std::invalid_argument("em_update_ds: tap count mismatch");
    }
    DsParams next = current;
    for (std::size_t p = 0; p < stats.size(); ++p) {
        const DsTapEmStats& st = stats[p];
        DsTapParams& tap = next.taps[p];
        if (st.marginal_t1.empty() ||
            st.pairwise_t1.size() + 1 != st.marginal_t1.size() ||
            st.marginal.size() != st.marginal_t1.size() ||
            st.e2_active.size() != st.marginal.size()) {
            throw std::invalid_argument("em_update_ds: inconsistent statistics");
        }
        tap.gamma = em_project_prob(st.t_posterior);
        tap.lambda = em_project_prob(mean_of(st.marginal_t1));
        tap.p01 = update_p01(st.pairwise_t1, current.taps[p].p01);
        tap.p10 = em_project_prob(tap.p01 * tap.lambda / (1.0 - tap.lambda));

        double num = 0.0;
        double den = 0.0;
        for (std::size_t i = 0; i < st.marginal.size(); ++i) {
            num += st.marginal[i] * st.e2_active[i];
            den += st.marginal[i];
        }
        if (den > kEmStatGuard) tap.sigma2 = em_project_var(num / den);
    }
    return next;
}

std::vector<BGPrior> em_update_bg(const RMat& pi_post, const RMat& e2_active,
                                  const std::vector<BGPrior>& current) {
    if (pi_post.rows != e2_active.rows || pi_post.cols != e2_active.cols ||
        current.size() != pi_post.cols) {
        throw std::invalid_argument("em_update_bg: shape mismatch");
    }
    std::vector<BGPrior> next = current;
    double activity_total = 0.0;
    for (double v : pi_post.data) activity_total += v;
    const double entries = static_cast<double>(pi_post.rows * pi_post.cols);
    const double pi_new = entries > 0 ? em_project_prob(activity_total / entries) : current[0].pi;
    for (std::size_t p = 0; p < current.size(); ++p) {
        next[p].pi = pi_new;
        double num = 0.0;
        double den = 0.0;
        for (std::size_t n = 0; n < pi_post.rows; ++n) {
            num += pi_post(n, p) * e2_active(n, p);
            den += pi_post(n, p);
        }
        if (den > kEmStatGuard) next[p].sigma2 = em_project_var(num / den);
    }
    return next;
}

}  // namespace stcs

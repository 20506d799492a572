#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "stcs/chanmodel.hpp"
#include "stcs/em.hpp"
#include "stcs/engine.hpp"
#include "stcs/rng.hpp"

using namespace stcs;

TEST_CASE("em projections clamp into the legal ranges") {
    CHECK(em_project_prob(0.5) == 0.5);
    CHECK(em_project_prob(-0.2) == doctest::Approx(1e-6));
    CHECK(em_project_prob(0.0) == doctest::Approx(1e-6));
    CHECK(em_project_prob(1.0) == doctest::Approx(1.0 - 1e-6));
    CHECK(em_project_prob(7.0) == doctest::Approx(1.0 - 1e-6));
    CHECK(em_project_var(0.5) == 0.5);
    CHECK(em_project_var(0.0) == doctest::Approx(1e-12));
    CHECK(em_project_var(-3.0) == doctest::Approx(1e-12));
}

TEST_CASE("energy initializer matches the closed form") {
    // ||y||^2 = m gives 2 n m / m^2 = 2 n / m.
    const std::size_t m = 103;
    const std::size_t n = 256;
    CVec y(m, cplx(1.0, 0.0));
    CHECK(em_init_sigma2(y.data(), m, n) == doctest::Approx(2.0 * 256.0 / 103.0).epsilon(1e-12));

    // General case: scale by the actual energy.
    CVec y2(4);
    y2[0] = cplx(1.0, 1.0);   // |.|^2 = 2
    y2[1] = cplx(0.0, -2.0);  // 4
    y2[2] = cplx(0.0, 0.0);
    y2[3] = cplx(3.0, 0.0);   // 9
    CHECK(em_init_sigma2(y2.data(), 4, 10) == doctest::Approx(2.0 * 10.0 * 15.0 / 16.0));
}

TEST_CASE("em initializers fill the documented starting point") {
    CMat y(8, 3);
    Rng rng(601);
    fill_cgauss(rng, y.data.data(), y.data.size(), 1.0);

    const FsParams fs = em_init_fs(y, 32);
    CHECK(fs.lambda == doctest::Approx(0.3));
    CHECK(fs.p01 == doctest::Approx(0.1));
    CHECK(fs.p10 == doctest::Approx(0.1 * 0.3 / 0.7));
    REQUIRE(fs.sigma2.size() == 3);
    for (std::size_t p = 0; p < 3; ++p) {
        CHECK(fs.sigma2[p] == doctest::Approx(em_init_sigma2(y.col(p), 8, 32)));
    }

    const DsParams ds = em_init_ds(y, 32);
    REQUIRE(ds.taps.size() == 3);
    CHECK(ds.epsilon == doctest::Approx(1e-3));
    for (std::size_t p = 0; p < 3; ++p) {
        CHECK(ds.taps[p].lambda == doctest::Approx(0.3));
        CHECK(ds.taps[p].p01 == doctest::Approx(0.1));
        CHECK(ds.taps[p].gamma == doctest::Approx(0.1));
        CHECK(ds.taps[p].sigma2 == doctest::Approx(em_init_sigma2(y.col(p), 8, 32)));
    }

    const std::vector<BGPrior> bg = em_init_bg(y, 32);
    REQUIRE(bg.size() == 3);
    for (std::size_t p = 0; p < 3; ++p) {
        CHECK(bg[p].pi == doctest::Approx(0.3));
        CHECK(bg[p].sigma2 == doctest::Approx(em_init_sigma2(y.col(p), 8, 32)));
    }
}

TEST_CASE("chain M-step reproduces hand-computed statistics exactly") {
    FsEmStats stats;
    stats.marginal = {1.0, 0.0, 1.0, 1.0};
    stats.pairwise = {
        {0.0, 0.0, 1.0, 0.0},  // 1 -> 0
        {0.0, 1.0, 0.0, 0.0},  // 0 -> 1
        {0.0, 0.0, 0.0, 1.0},  // 1 -> 1
    };
    stats.active_e2_sum = {6.0};
    FsParams current;
    current.lambda = 0.5;
    current.p01 = 0.5;
    current.p10 = 0.5;
    current.sigma2 = {1.0};

    const FsParams next = em_update_fs(stats, current);
    CHECK(next.lambda == doctest::Approx(0.75));
    // One 1->0 transition out of two departures from state 1.
    CHECK(next.p01 == doctest::Approx(0.5));
    // Stationarity tie p10 = p01 * lambda / (1 - lambda) = 1.5, projected.
    CHECK(next.p10 == doctest::Approx(1.0 - 1e-6));
    // sigma2 = active energy / activity mass = 6 / 3.
    CHECK(next.sigma2[0] == doctest::Approx(2.0));
}

TEST_CASE("degenerate posterior mass keeps the previous parameters") {
    FsEmStats stats;
    stats.marginal = {0.0, 0.0, 0.0};
    stats.pairwise = {
        {1.0, 0.0, 0.0, 0.0},
        {1.0, 0.0, 0.0, 0.0},
    };
    stats.active_e2_sum = {0.0};
    FsParams current;
    current.lambda = 0.25;
    current.p01 = 0.125;
    current.p10 = 0.125 / 3.0;
    current.sigma2 = {0.7};
    const FsParams next = em_update_fs(stats, current);
    // Activity itself is a valid (projected) statistic even at zero...
    CHECK(next.lambda == doctest::Approx(1e-6));
    // ...but the transition and slab updates have no mass and are kept.
    CHECK(next.p01 == doctest::Approx(0.125));
    CHECK(next.sigma2[0] == doctest::Approx(0.7));
}

TEST_CASE("bg M-step ties activity and splits variances per column") {
    RMat pi(2, 2);
    pi(0, 0) = 1.0;
    pi(1, 0) = 0.0;
    pi(0, 1) = 0.5;
    pi(1, 1) = 0.5;
    RMat e2(2, 2);
    e2(0, 0) = 3.0;
    e2(1, 0) = 100.0;  // zero weight, must not contribute
    e2(0, 1) = 2.0;
    e2(1, 1) = 4.0;
    std::vector<BGPrior> current(2, BGPrior{0.1, 1.0});
    const std::vector<BGPrior> next = em_update_bg(pi, e2, current);
    CHECK(next[0].pi == doctest::Approx(0.5));
    CHECK(next[1].pi == doctest::Approx(0.5));
    CHECK(next[0].sigma2 == doctest::Approx(3.0));
    CHECK(next[1].sigma2 == doctest::Approx(3.0));  // (0.5*2 + 0.5*4) / 1

    // Zero-mass column keeps its variance.
    RMat pi0(2, 1);
    RMat e20(2, 1);
    e20(0, 0) = 9.0;
    std::vector<BGPrior> cur1(1, BGPrior{0.3, 0.42});
    const std::vector<BGPrior> kept = em_update_bg(pi0, e20, cur1);
    CHECK(kept[0].sigma2 == doctest::Approx(0.42));

    CHECK_THROWS_AS(em_update_bg(pi, e20, current), std::invalid_argument);
}

TEST_CASE("delay-model M-step updates every tap from its own statistics") {
    DsParams current;
    current.taps.resize(2);
    current.epsilon = 1e-3;
    current.taps[0] = DsTapParams{0.5, 0.5, 0.5, 0.5, 1.0};
    current.taps[1] = DsTapParams{0.5, 0.5, 0.5, 0.5, 1.0};

    std::vector<DsTapEmStats> stats(2);
    stats[0].t_posterior = 0.9;
    stats[0].marginal_t1 = {1.0, 1.0, 0.0};
    stats[0].pairwise_t1 = {
        {0.0, 0.0, 0.0, 1.0},  // 1 -> 1
        {0.0, 0.0, 1.0, 0.0},  // 1 -> 0
    };
    stats[0].marginal = {0.5, 0.5, 0.0};
    stats[0].e2_active = {2.0, 4.0, 100.0};

    stats[1].t_posterior = 0.02;
    stats[1].marginal_t1 = {0.0, 0.0, 0.0};
    stats[1].pairwise_t1 = {
        {1.0, 0.0, 0.0, 0.0},
        {1.0, 0.0, 0.0, 0.0},
    };
    stats[1].marginal = {0.0, 0.0, 0.0};
    stats[1].e2_active = {1.0, 1.0, 1.0};

    const DsParams next = em_update_ds(stats, current);
    CHECK(next.taps[0].gamma == doctest::Approx(0.9));
    CHECK(next.taps[0].lambda == doctest::Approx(2.0 / 3.0));
    CHECK(next.taps[0].p01 == doctest::Approx(0.5));
    CHECK(next.taps[0].sigma2 == doctest::Approx(3.0));
    CHECK(next.taps[1].gamma == doctest::Approx(0.02));
    // No conditional transition mass and no slab mass: keep previous values.
    CHECK(next.taps[1].p01 == doctest::Approx(0.5));
    CHECK(next.taps[1].sigma2 == doctest::Approx(1.0));

    std::vector<DsTapEmStats> wrong(1);
    CHECK_THROWS_AS(em_update_ds(wrong, current), std::invalid_argument);
}

TEST_CASE("oracle-posterior statistics drive EM to the empirical truth") {
    // Perfectly informative posteriors (indicators of the sampled truth) must
    // turn the M-step into empirical frequency estimation.
    Rng rng(602);
    const std::size_t n = 8192;
    const std::vector<std::uint8_t> s = sample_support_chain(n, 1.0 / 16.0, 1.0 / 240.0, 1.0 / 16.0, rng);

    FsEmStats stats;
    stats.marginal.resize(n);
    stats.pairwise.resize(n - 1);
    double active = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        stats.marginal[i] = s[i];
        active += s[i];
    }
    double from1 = 0.0;
    double to0 = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        std::array<double, 4> pw{0.0, 0.0, 0.0, 0.0};
        pw[static_cast<std::size_t>(2 * s[i - 1] + s[i])] = 1.0;
        stats.pairwise[i - 1] = pw;
        if (s[i - 1]) {
            from1 += 1.0;
            if (!s[i]) to0 += 1.0;
        }
    }
    stats.active_e2_sum = {active * 0.5};

    FsParams current;
    current.sigma2 = {1.0};
    const FsParams next = em_update_fs(stats, current);
    CHECK(next.lambda == doctest::Approx(active / n));
    CHECK(next.p01 == doctest::Approx(to0 / from1));
    CHECK(next.sigma2[0] == doctest::Approx(0.5));
    // The empirical frequencies themselves sit near the generator values.
    CHECK(std::abs(next.lambda - 1.0 / 16.0) < 0.02);
    CHECK(std::abs(next.p01 - 1.0 / 16.0) < 0.025);
}

TEST_CASE("frequency-model denoiser learns chain and slab parameters") {
    // Data drawn exactly from the common-support model; EM from the generic
    // starting point should recover the empirical activity, exit rate and
    // slab power of the realization.
    Rng rng(603);
    const std::size_t n = 4096;
    const std::size_t p_taps = 4;
    const double lambda_true = 1.0 / 16.0;
    const double p01_true = 1.0 / 16.0;
    const double p10_true = 1.0 / 240.0;
    const double sigma2_true = 1.0;
    const double v = 0.05;

    const std::vector<std::uint8_t> s =
        sample_support_chain(n, lambda_true, p10_true, p01_true, rng);
    double active = 0.0;
    double from1 = 0.0;
    double to0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) active += s[i];
    for (std::size_t i = 1; i < n; ++i) {
        if (s[i - 1]) {
            from1 += 1.0;
            if (!s[i]) to0 += 1.0;
        }
    }
    const double lambda_emp = active / n;
    const double p01_emp = to0 / from1;

    CMat h(n, p_taps);
    double energy = 0.0;
    for (std::size_t p = 0; p < p_taps; ++p) {
        for (std::size_t i = 0; i < n; ++i) {
            if (s[i]) {
                h(i, p) = draw_cgauss(rng, sigma2_true);
                energy += std::norm(h(i, p));
            }
        }
    }
    const double sigma2_emp = energy / (active * p_taps);

    CMat pri = h;
    for (std::size_t i = 0; i < pri.data.size(); ++i) pri.data[i] += draw_cgauss(rng, v);

    FsParams start;
    start.lambda = 0.3;
    start.p01 = 0.1;
    start.p10 = 0.1 * 0.3 / 0.7;
    start.sigma2.assign(p_taps, 2.0);
    FsDenoiser denoiser(start, true);
    const std::vector<double> pri_var(p_taps, v);
    for (int it = 0; it < 15; ++it) {
        denoiser.denoise(pri, pri_var);
        denoiser.em_update();
    }
    const FsParams& learned = denoiser.params();
    CHECK(std::abs(learned.lambda - lambda_emp) / lambda_emp < 0.10);
    CHECK(std::abs(learned.p01 - p01_emp) / p01_emp < 0.15);
    for (std::size_t p = 0; p < p_taps; ++p) {
        CHECK(std::abs(learned.sigma2[p] - sigma2_emp) / sigma2_emp < 0.15);
    }
    // And the learned activity is in the neighborhood of the generator value.
    CHECK(std::abs(learned.lambda - lambda_true) / lambda_true < 0.35);
}

TEST_CASE("bg denoiser learns density and power from i.i.d. data") {
    Rng rng(604);
    const std::size_t n = 4096;
    const std::size_t p_taps = 2;
    const double pi_true = 0.1;
    const double v = 0.05;
    CMat h(n, p_taps);
    double active = 0.0;
    double energy = 0.0;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (std::size_t p = 0; p < p_taps; ++p) {
        for (std::size_t i = 0; i < n; ++i) {
            if (uni(rng) < pi_true) {
                h(i, p) = draw_cgauss(rng, 1.0);
                active += 1.0;
                energy += std::norm(h(i, p));
            }
        }
    }
    CMat pri = h;
    for (std::size_t i = 0; i < pri.data.size(); ++i) pri.data[i] += draw_cgauss(rng, v);

    BgIidDenoiser denoiser(std::vector<BGPrior>(p_taps, BGPrior{0.3, 2.0}), Domain::AngleDelay,
                           true);
    const std::vector<double> pri_var(p_taps, v);
    for (int it = 0; it < 15; ++it) {
        denoiser.denoise(pri, pri_var);
        denoiser.em_update();
    }
    const double pi_emp = active / static_cast<double>(n * p_taps);
    const double sigma2_emp = energy / active;
    CHECK(std::abs(denoiser.prior()[0].pi - pi_emp) / pi_emp < 0.10);
    for (std::size_t p = 0; p < p_taps; ++p) {
        CHECK(std::abs(denoiser.prior()[p].sigma2 - sigma2_emp) / sigma2_emp < 0.15);
    }
}

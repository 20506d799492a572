#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "stcs/denoiser_ds.hpp"
#include "stcs/denoiser_fs.hpp"
#include "stcs/state_evolution.hpp"

using namespace stcs;

namespace {

ChannelGenSpec small_spec() {
    ChannelGenSpec spec;
    spec.n = 64;
    spec.p_taps = 4;
    spec.l_max = 4;
    spec.p10 = 0.05;
    spec.p01 = 0.2;
    spec.gamma = 0.8;
    spec.seed = 7;
    return spec;
}

FsParams small_fs_params(const ChannelGenSpec& spec) {
    FsParams params;
    params.lambda = 0.45;
    params.p01 = 0.15;
    params.p10 = params.p01 * params.lambda / (1.0 - params.lambda);
    params.sigma2.assign(spec.p_taps, 4.0 * expected_entry_power(spec) / params.lambda);
    return params;
}

DsParams small_ds_params(const ChannelGenSpec& spec) {
    DsParams params;
    params.epsilon = 1e-3;
    params.taps.resize(spec.p_taps);
    for (auto& tap : params.taps) {
        tap.lambda = chain_stationary_activity(spec.p10, spec.p01);
        tap.p01 = spec.p01;
        tap.p10 = spec.p10;
        tap.gamma = spec.gamma;
        tap.sigma2 = 1.0;
    }
    return params;
}

}  // namespace

TEST_CASE("module A map closed forms") {
    // tau_a = 0: tau_b = (n/m) sigma2.
    auto r = se_module_a(0.0, 1e-3, 103, 256);
    CHECK(r.tau_b == doctest::Approx((256.0 / 103.0) * 1e-3).epsilon(1e-12));
    CHECK_FALSE(r.clamped);

    // m = n: tau_b = sigma2 independent of tau_a.
    r = se_module_a(0.37, 2e-2, 64, 64);
    CHECK(r.tau_b == doctest::Approx(2e-2).epsilon(1e-12));
    CHECK_FALSE(r.clamped);

    // Worked example.
    r = se_module_a(0.01, 1e-3, 103, 256);
    CHECK(r.tau_b == doctest::Approx(0.017339805825242716).epsilon(1e-9));
    CHECK_FALSE(r.clamped);
}

TEST_CASE("module A map clamps non-positive results") {
    auto r = se_module_a(0.5, 0.0, 32, 32);  // exactly zero
    CHECK(r.clamped);
    CHECK(r.tau_b == doctest::Approx(1e-13));
    r = se_module_a(0.5, 0.0, 32, 32, 1e-10);
    CHECK(r.tau_b == doctest::Approx(1e-10));
}

TEST_CASE("module A map is affine and increasing in tau_a") {
    const double sigma2 = 1e-3;
    const std::size_t m = 103, n = 256;
    const double slope = static_cast<double>(n) / m - 1.0;
    double prev = -1.0;
    for (double t : {0.0, 0.01, 0.05, 0.2, 1.0}) {
        const double f = se_module_a(t, sigma2, m, n).tau_b;
        CHECK(f > prev);
        prev = f;
        // Affinity: f(t) = f(0) + slope * t.
        const double f0 = se_module_a(0.0, sigma2, m, n).tau_b;
        CHECK(f == doctest::Approx(f0 + slope * t).epsilon(1e-12));
    }
}

TEST_CASE("module A map validates inputs") {
    CHECK_THROWS(se_module_a(-0.1, 1e-3, 8, 16));
    CHECK_THROWS(se_module_a(0.1, -1e-3, 8, 16));
    CHECK_THROWS(se_module_a(0.1, 1e-3, 0, 16));
    CHECK_THROWS(se_module_a(0.1, 1e-3, 32, 16));
}

TEST_CASE("module B map returns tau_b exactly for the pass-through denoiser") {
    const ChannelGenSpec spec = small_spec();
    IdentityDenoiser identity(Domain::AngleDelay);
    Rng rng(1234);
    const double tau_b = 0.07;
    const SeGResult g = se_module_b_mc(tau_b, identity, spec, 50, rng);
    CHECK(g.tau_a == tau_b);
    CHECK(g.tau_a_stderr == 0.0);
    // The measured posterior MSE is the empirical noise power.
    CHECK(std::abs(g.mse_post - tau_b) <= std::max(4.0 * g.mse_post_stderr, 1e-3));
}

TEST_CASE("module B map validates inputs") {
    const ChannelGenSpec spec = small_spec();
    IdentityDenoiser identity(Domain::AngleDelay);
    Rng rng(1);
    CHECK_THROWS(se_module_b_mc(0.0, identity, spec, 10, rng));
    CHECK_THROWS(se_module_b_mc(-0.1, identity, spec, 10, rng));
    CHECK_THROWS(se_module_b_mc(0.1, identity, spec, 0, rng));
}

TEST_CASE("module B map is monotone nondecreasing in tau_b up to MC noise") {
    const ChannelGenSpec spec = small_spec();
    FsDenoiser denoiser(small_fs_params(spec));
    const std::vector<double> grid = {0.01, 0.03, 0.1, 0.3, 1.0};
    std::vector<SeGResult> results;
    for (double tau_b : grid) {
        Rng rng(42);  // common random numbers across grid points
        results.push_back(se_module_b_mc(tau_b, denoiser, spec, 200, rng));
    }
    for (std::size_t i = 1; i < results.size(); ++i) {
        const double slack =
            3.0 * std::sqrt(results[i].tau_a_stderr * results[i].tau_a_stderr +
                            results[i - 1].tau_a_stderr * results[i - 1].tau_a_stderr);
        CHECK(results[i].tau_a >= results[i - 1].tau_a - slack);
        CHECK(results[i].mse_post >=
              results[i - 1].mse_post -
                  3.0 * std::sqrt(results[i].mse_post_stderr * results[i].mse_post_stderr +
                                  results[i - 1].mse_post_stderr * results[i - 1].mse_post_stderr));
    }
    // At high input variance the prior dominates and the map falls below the
    // identity line. (At low tau_b the extrinsic error can legitimately sit
    // slightly above tau_b: the prior-removal term leaks input noise onto
    // entries the denoiser zeroes out.)
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] >= 0.3) CHECK(results[i].tau_a < grid[i]);
    }
}

TEST_CASE("module B map agrees across independent seeds within MC error") {
    const ChannelGenSpec spec = small_spec();
    DsParams params = small_ds_params(spec);
    DsDenoiser denoiser(params, DsMode::Exact);
    const double tau_b = 0.08;
    Rng rng_a(1001);
    Rng rng_b(2002);
    const SeGResult a = se_module_b_mc(tau_b, denoiser, spec, 400, rng_a);
    const SeGResult b = se_module_b_mc(tau_b, denoiser, spec, 400, rng_b);
    CHECK(a.tau_a_stderr > 0.0);
    const double band = 3.0 * std::sqrt(a.tau_a_stderr * a.tau_a_stderr +
                                        b.tau_a_stderr * b.tau_a_stderr);
    CHECK(std::abs(a.tau_a - b.tau_a) <= band);
}

TEST_CASE("fixed point is reproducible and internally consistent") {
    const ChannelGenSpec spec = small_spec();
    FsDenoiser denoiser(small_fs_params(spec));
    const double sigma2 = expected_entry_power(spec) / 100.0;  // ~20 dB
    const SeState st = se_fixed_point(sigma2, 26, spec.n, denoiser, spec, 1e-6, 100, 100, 5);
    CHECK(st.converged);
    CHECK_FALSE(st.oscillated);
    CHECK(st.iterations == static_cast<int>(st.trajectory.size()));
    CHECK(st.tau_a > 0.0);
    CHECK(st.predicted_nmse == doctest::Approx(st.tau_a / expected_entry_power(spec)));
    CHECK(st.predicted_nmse_post > 0.0);
    CHECK(st.predicted_nmse_post < 1.0);
    // Trajectory chaining: tau_b of iteration k equals the Module A map of the
    // previous iteration's tau_a.
    double tau_prev = expected_entry_power(spec);
    for (const auto& pt : st.trajectory) {
        CHECK(pt.tau_b == doctest::Approx(se_module_a(tau_prev, sigma2, 26, spec.n).tau_b)
                              .epsilon(1e-12));
        tau_prev = pt.tau_a;
    }
    // Rerunning with the same seed reproduces the state exactly.
    FsDenoiser denoiser2(small_fs_params(spec));
    const SeState st2 = se_fixed_point(sigma2, 26, spec.n, denoiser2, spec, 1e-6, 100, 100, 5);
    CHECK(st2.tau_a == st.tau_a);
    CHECK(st2.iterations == st.iterations);
    CHECK(st2.predicted_nmse_post == st.predicted_nmse_post);
}

TEST_CASE("fixed point is near zero when noiseless and fully sampled") {
    const ChannelGenSpec spec = small_spec();
    FsDenoiser denoiser(small_fs_params(spec));
    const SeState st = se_fixed_point(0.0, spec.n, spec.n, denoiser, spec, 1e-6, 100, 60, 11);
    CHECK(st.clamped);  // the Module A map bottoms out at v_min
    CHECK(st.converged);
    CHECK(st.predicted_nmse < 1e-9);
    CHECK(st.predicted_nmse_post < 1e-9);
}

TEST_CASE("fixed point flags a rising trajectory") {
    // The pass-through denoiser makes the composed map expansive whenever
    // m < n, so tau_a rises every iteration and the oscillation guard trips.
    const ChannelGenSpec spec = small_spec();
    IdentityDenoiser identity(Domain::AngleDelay);
    const SeState st = se_fixed_point(1e-3, 26, spec.n, identity, spec, 1e-6, 100, 20, 3);
    CHECK(st.oscillated);
    CHECK_FALSE(st.converged);
    CHECK(st.iterations == 4);
    for (std::size_t i = 1; i < st.trajectory.size(); ++i) {
        CHECK(st.trajectory[i].tau_a > st.trajectory[i - 1].tau_a);
    }
}

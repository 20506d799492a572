#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "stcs/harness.hpp"

using namespace stcs;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.algorithm = Algorithm::StcsDs;
    cfg.n = 64;
    cfg.p_taps = 4;
    cfg.l_max = 2;
    cfg.m_grid = {26};
    cfg.snr_grid_db = {20.0};
    cfg.trials = 6;
    cfg.base_seed = 17;
    cfg.turbo.max_iters = 15;
    return cfg;
}

std::string trials_csv(const CellResult& cell) {
    std::ostringstream out;
    write_trials_csv(out, cell);
    return out.str();
}

std::string trace_csv(const CellResult& cell) {
    std::ostringstream out;
    write_trace_csv(out, cell);
    return out.str();
}

}  // namespace

TEST_CASE("config serializes and parses without loss") {
    ExperimentConfig cfg;
    cfg.algorithm = Algorithm::TurboCs;
    cfg.algorithms = {Algorithm::TurboCs, Algorithm::StcsDs};
    cfg.kind = SensingKind::Dft;
    cfg.n = 128;
    cfg.p_taps = 8;
    cfg.l_max = 4;
    cfg.m_grid = {51, 77};
    cfg.snr_grid_db = {10.0, 30.0};
    cfg.trials = 11;
    cfg.base_seed = 99;
    cfg.em = true;
    cfg.ds_mode = DsMode::TwoSweep;
    cfg.ds_epsilon = 2e-3;
    cfg.chan_p10 = 0.005;
    cfg.chan_p01 = 0.08;
    cfg.chan_gamma = 0.6;
    cfg.chan_tap_variances = {1.0, 0.5, 0.25, 0.125, 1.0, 1.0, 1.0, 1.0};
    cfg.turbo.max_iters = 33;
    cfg.turbo.stop_tol = 1e-5;
    cfg.turbo.damping = 0.7;
    cfg.turbo.residual_floor = 0.25;
    cfg.threads = 3;
    cfg.se_trials = 123;

    const std::string text = serialize_config(cfg);
    std::istringstream in(text);
    const ExperimentConfig back = parse_config(in);
    CHECK(serialize_config(back) == text);
    CHECK(back.algorithm == Algorithm::TurboCs);
    CHECK(back.algorithms.size() == 2);
    CHECK(back.kind == SensingKind::Dft);
    CHECK(back.m_grid == cfg.m_grid);
    CHECK(back.snr_grid_db == cfg.snr_grid_db);
    CHECK(back.em == true);
    CHECK(back.ds_mode == DsMode::TwoSweep);
    CHECK(back.chan_tap_variances == cfg.chan_tap_variances);
    CHECK(back.turbo.damping == doctest::Approx(0.7));
    CHECK(back.turbo.residual_floor == doctest::Approx(0.25));
    CHECK(back.turbo.stop_tol == doctest::Approx(1e-5));
}

TEST_CASE("generator-matched priors carry the union-chain statistics") {
    ExperimentConfig cfg;  // reference geometry defaults
    const ChannelGenSpec spec = channel_spec_from(cfg);
    CHECK(expected_entry_power(spec) == doctest::Approx(1.0 / 32.0).epsilon(1e-12));

    const FsParams fs = fs_params_from_gen(spec);
    // Union of 16 independent per-tap chains at activity 1/16 each.
    CHECK(fs.lambda == doctest::Approx(1.0 - std::pow(1.0 - 1.0 / 16.0, 16)).epsilon(1e-12));
    CHECK(fs.lambda == doctest::Approx(0.6439).epsilon(1e-3));
    CHECK(fs.p01 == doctest::Approx(0.035766).epsilon(1e-3));
    CHECK(fs.p10 == doctest::Approx(0.064679).epsilon(1e-3));
    // Stationarity of the union chain: lambda * p01 = (1 - lambda) * p10.
    CHECK(fs.lambda * fs.p01 == doctest::Approx((1.0 - fs.lambda) * fs.p10).epsilon(1e-9));
    REQUIRE(fs.sigma2.size() == 32);
    CHECK(fs.sigma2[0] == doctest::Approx(0.048530).epsilon(1e-3));
    // Blended slab power conserves the total energy: lambda_u * sigma_f^2 =
    // per-entry power.
    CHECK(fs.lambda * fs.sigma2[0] == doctest::Approx(1.0 / 32.0).epsilon(1e-9));

    const DsParams ds = ds_params_from_gen(spec, 1e-3);
    REQUIRE(ds.taps.size() == 32);
    CHECK(ds.epsilon == doctest::Approx(1e-3));
    CHECK(ds.taps[0].lambda == doctest::Approx(1.0 / 16.0).epsilon(1e-9));
    CHECK(ds.taps[0].p01 == doctest::Approx(1.0 / 16.0).epsilon(1e-9));
    CHECK(ds.taps[0].p10 == doctest::Approx(1.0 / 240.0).epsilon(1e-9));
    // In-spread taps carry the generator's (projected) certainty of being
    // occupied; taps beyond the delay spread are certainly empty.
    CHECK(ds.taps[0].gamma == doctest::Approx(0.999).epsilon(1e-9));
    CHECK(ds.taps[20].gamma == doctest::Approx(0.001).epsilon(1e-9));
    CHECK(ds.taps[0].sigma2 == doctest::Approx(1.0).epsilon(1e-9));
    // Per-entry power over the whole matrix: gamma-weighted in-spread activity.
    CHECK(ds.taps[0].lambda * 1.0 * 16.0 / 32.0 ==
          doctest::Approx(expected_entry_power(spec)).epsilon(1e-3));

    const std::vector<BGPrior> bg = bg_params_from_gen(spec);
    REQUIRE(bg.size() == 32);
    CHECK(bg[0].pi == doctest::Approx(fs.lambda).epsilon(1e-12));
    CHECK(bg[0].sigma2 == doctest::Approx(fs.sigma2[0]).epsilon(1e-12));
}

TEST_CASE("noise calibration follows the per-entry power") {
    CHECK(sigma2_for_snr(1.0 / 32.0, 30.0) == doctest::Approx(3.125e-5).epsilon(1e-12));
    CHECK(sigma2_for_snr(1.0 / 32.0, 0.0) == doctest::Approx(1.0 / 32.0).epsilon(1e-12));
    CHECK(sigma2_for_snr(0.03125, std::numeric_limits<double>::infinity()) == 0.0);
    CHECK_THROWS_AS(sigma2_for_snr(0.0, 10.0), std::invalid_argument);
}

TEST_CASE("a cell rerun from its own serialized config is byte-identical") {
    const ExperimentConfig cfg = small_config();
    const CellResult first = run_cell(cfg, cfg.m_grid[0], cfg.snr_grid_db[0]);

    std::istringstream in(serialize_config(cfg));
    const ExperimentConfig replay = parse_config(in);
    const CellResult second = run_cell(replay, replay.m_grid[0], replay.snr_grid_db[0]);

    CHECK(trials_csv(first) == trials_csv(second));
    CHECK(trace_csv(first) == trace_csv(second));
    CHECK(first.mean_nmse_db == second.mean_nmse_db);
}

TEST_CASE("results are independent of the worker pool size") {
    ExperimentConfig cfg = small_config();
    cfg.algorithm = Algorithm::StcsFs;
    cfg.threads = 1;
    const CellResult serial = run_cell(cfg, cfg.m_grid[0], cfg.snr_grid_db[0]);
    cfg.threads = 3;
    const CellResult pooled = run_cell(cfg, cfg.m_grid[0], cfg.snr_grid_db[0]);
    CHECK(trials_csv(serial) == trials_csv(pooled));
    CHECK(trace_csv(serial) == trace_csv(pooled));
}

TEST_CASE("noiseless fully-sampled cells recover exactly for all algorithms") {
    for (Algorithm alg : {Algorithm::TurboCs, Algorithm::StcsFs, Algorithm::StcsDs}) {
        ExperimentConfig cfg = small_config();
        cfg.algorithm = alg;
        cfg.trials = 3;
        cfg.turbo.max_iters = 1;
        const CellResult cell =
            run_cell(cfg, cfg.n, std::numeric_limits<double>::infinity());
        // A rare all-zero support draw is excluded (zero NMSE reference), not
        // scored; every included trial must be an exact recovery.
        REQUIRE(cell.excluded <= 1);
        int scored = 0;
        for (const TrialRecord& rec : cell.trials) {
            if (!std::isfinite(rec.result.final_nmse)) continue;
            // Exactness is limited by the message-variance clamp v_min=1e-12
            // through the slab shrink (v_min / sigma_slab^2)^2; this small
            // config's per-entry slab variance puts that near -198 dB.
            CHECK(10.0 * std::log10(rec.result.final_nmse) < -190.0);
            ++scored;
        }
        CHECK(scored >= 2);
    }
}

TEST_CASE("all-zero channel draws are excluded without poisoning the cell") {
    ExperimentConfig cfg = small_config();
    cfg.algorithm = Algorithm::TurboCs;
    cfg.p_taps = 2;
    cfg.l_max = 2;
    cfg.chan_gamma = 0.2;  // many draws have no active tap at all
    cfg.m_grid = {26};
    cfg.trials = 12;
    const CellResult cell = run_cell(cfg, 26, 20.0);
    CHECK(cell.excluded > 0);
    CHECK(cell.excluded < cfg.trials);  // seed chosen so both kinds occur
    CHECK(std::isfinite(cell.mean_nmse_db));
    int finite = 0;
    for (const TrialRecord& rec : cell.trials)
        if (std::isfinite(rec.result.final_nmse)) ++finite;
    CHECK(finite + cell.excluded == cfg.trials);
}

TEST_CASE("sweep csv carries one row per cell with stable headers") {
    ExperimentConfig cfg = small_config();
    cfg.algorithm = Algorithm::TurboCs;
    cfg.trials = 3;
    cfg.m_grid = {20, 26};
    std::vector<CellResult> cells;
    for (std::size_t m : cfg.m_grid) cells.push_back(run_cell(cfg, m, 20.0));
    std::ostringstream out;
    write_sweep_csv(out, cells);
    const std::string text = out.str();
    CHECK(text.find("snr_db,m,algorithm,") == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);  // header + 2 cells
    CHECK(text.find("turbo_cs") != std::string::npos);
}

TEST_CASE("state-evolution comparison csv aligns prediction and simulation") {
    ExperimentConfig cfg = small_config();
    cfg.algorithm = Algorithm::StcsFs;
    cfg.trials = 4;
    cfg.se_trials = 50;
    const CellResult cell = run_cell(cfg, cfg.m_grid[0], cfg.snr_grid_db[0]);
    const SeState se = predict_cell(cfg, cfg.m_grid[0], cfg.snr_grid_db[0]);
    CHECK(se.trajectory.size() >= 1);
    CHECK(std::isfinite(se.predicted_nmse_post));
    std::ostringstream out;
    write_se_comparison_csv(out, se, cell);
    const std::string text = out.str();
    CHECK(text.find("iteration,") == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') >= 2);
}

TEST_CASE("benchmark rows time fixed-iteration runs at the 0.4 sampling ratio") {
    ExperimentConfig cfg = small_config();
    cfg.algorithm = Algorithm::StcsFs;
    cfg.l_max = 4;     // denser spread: no all-zero channel draw at this seed
    cfg.base_seed = 5;
    const std::vector<BenchRow> rows = run_bench(cfg, {64, 128}, 2);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].n == 64);
    CHECK(rows[1].n == 128);
    for (const BenchRow& row : rows) {
        CHECK(row.iters == 2);
        CHECK(row.ms_per_iter > 0.0);
    }
    std::ostringstream out;
    write_bench_csv(out, rows);
    CHECK(out.str().find("n,") == 0);
}

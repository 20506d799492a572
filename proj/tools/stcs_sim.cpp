// Command-line simulator for structured turbo compressed sensing channel
// estimation: synthetic data generation, per-trial estimation runs, SNR/M
// sweeps, state-evolution prediction, and per-iteration timing.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "stcs/harness.hpp"

namespace {

using namespace stcs;

struct CliOptions {
    std::string config_path;
    std::string out_prefix = "stcs";
    bool strict = false;
    std::string algorithm;
    std::string algorithms;
    std::string sensing;
    std::size_t n = 0;
    std::size_t p_taps = 0;
    std::size_t l_max = 0;
    std::vector<std::size_t> m_grid;
    std::vector<double> snr_grid;
    int trials = 0;
    std::uint64_t base_seed = 0;
    bool em = false;
    std::string ds_mode;
    double ds_epsilon = 0.0;
    double chan_p10 = 0.0;
    double chan_p01 = 0.0;
    double chan_gamma = 0.0;
    std::string channel_file;
    int max_iters = 0;
    double stop_tol = 0.0;
    double damping = 0.0;
    double residual_floor = 0.0;
    int threads = 0;
    int se_trials = 0;
    int se_max_iter = 0;
    double se_tol = 0.0;

    CLI::Option* o_algorithm = nullptr;
    CLI::Option* o_algorithms = nullptr;
    CLI::Option* o_sensing = nullptr;
    CLI::Option* o_n = nullptr;
    CLI::Option* o_p = nullptr;
    CLI::Option* o_l = nullptr;
    CLI::Option* o_m = nullptr;
    CLI::Option* o_snr = nullptr;
    CLI::Option* o_trials = nullptr;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_em = nullptr;
    CLI::Option* o_ds_mode = nullptr;
    CLI::Option* o_ds_eps = nullptr;
    CLI::Option* o_p10 = nullptr;
    CLI::Option* o_p01 = nullptr;
    CLI::Option* o_gamma = nullptr;
    CLI::Option* o_channel_file = nullptr;
    CLI::Option* o_max_iters = nullptr;
    CLI::Option* o_stop_tol = nullptr;
    CLI::Option* o_damping = nullptr;
    CLI::Option* o_residual_floor = nullptr;
    CLI::Option* o_threads = nullptr;
    CLI::Option* o_se_trials = nullptr;
    CLI::Option* o_se_max_iter = nullptr;
    CLI::Option* o_se_tol = nullptr;
};

void add_common_options(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config_path, "key=value config file; flags override it");
    cmd->add_option("--out", opt.out_prefix, "output file prefix");
    cmd->add_flag("--strict", opt.strict, "exit nonzero if any trial is flagged");
    opt.o_algorithm =
        cmd->add_option("--algorithm", opt.algorithm, "turbo_cs | stcs_fs | stcs_ds");
    opt.o_algorithms = cmd->add_option("--algorithms", opt.algorithms,
                                       "comma list for sweep (or 'all')");
    opt.o_sensing = cmd->add_option("--sensing", opt.sensing, "dft | dft_rp");
    opt.o_n = cmd->add_option("--n", opt.n, "angular grid size N");
    opt.o_p = cmd->add_option("--p", opt.p_taps, "number of pilot bins / delay taps P");
    opt.o_l = cmd->add_option("--l", opt.l_max, "maximum delay spread L");
    opt.o_m = cmd->add_option("--m", opt.m_grid, "pilot count(s) M")->delimiter(',');
    opt.o_snr = cmd->add_option("--snr", opt.snr_grid, "SNR value(s) in dB")->delimiter(',');
    opt.o_trials = cmd->add_option("--trials", opt.trials, "trials per cell");
    opt.o_seed = cmd->add_option("--base-seed", opt.base_seed, "base RNG seed");
    opt.o_em = cmd->add_flag("--em", opt.em, "learn prior parameters per iteration");
    opt.o_ds_mode = cmd->add_option("--ds-mode", opt.ds_mode, "exact | two_sweep");
    opt.o_ds_eps = cmd->add_option("--ds-epsilon", opt.ds_epsilon, "inactive-column leak");
    opt.o_p10 = cmd->add_option("--chan-p10", opt.chan_p10, "generator chain entry rate");
    opt.o_p01 = cmd->add_option("--chan-p01", opt.chan_p01, "generator chain exit rate");
    opt.o_gamma = cmd->add_option("--chan-gamma", opt.chan_gamma, "generator column activity");
    opt.o_channel_file =
        cmd->add_option("--channel-file", opt.channel_file, "fixed channel file instead of synthetic");
    opt.o_max_iters = cmd->add_option("--max-iters", opt.max_iters, "turbo iteration cap");
    opt.o_stop_tol = cmd->add_option("--stop-tol", opt.stop_tol, "relative-change stop tolerance");
    opt.o_damping = cmd->add_option("--damping", opt.damping, "extrinsic mean damping in (0,1]");
    opt.o_residual_floor = cmd->add_option("--residual-floor", opt.residual_floor,
                                           "residual consistency floor factor (0 = off)");
    opt.o_threads = cmd->add_option("--threads", opt.threads, "worker pool size (0 = auto)");
    opt.o_se_trials = cmd->add_option("--se-trials", opt.se_trials, "MC trials per SE evaluation");
    opt.o_se_max_iter = cmd->add_option("--se-max-iter", opt.se_max_iter, "SE iteration cap");
    opt.o_se_tol = cmd->add_option("--se-tol", opt.se_tol, "SE fixed-point tolerance");
}

ExperimentConfig build_config(const CliOptions& opt) {
    ExperimentConfig cfg;
    if (!opt.config_path.empty()) cfg = parse_config_file(opt.config_path);
    if (opt.o_algorithm->count() > 0) cfg.algorithm = algorithm_from_name(opt.algorithm);
    if (opt.o_algorithms->count() > 0) {
        cfg.algorithms.clear();
        if (opt.algorithms == "all") {
            cfg.algorithms = {Algorithm::TurboCs, Algorithm::StcsFs, Algorithm::StcsDs};
        } else {
            std::string cur;
            for (char c : opt.algorithms + ",") {
                if (c == ',') {
                    if (!cur.empty()) cfg.algorithms.push_back(algorithm_from_name(cur));
                    cur.clear();
                } else {
                    cur += c;
                }
            }
        }
    }
    if (opt.o_sensing->count() > 0) cfg.kind = sensing_kind_from_name(opt.sensing);
    if (opt.o_n->count() > 0) cfg.n = opt.n;
    if (opt.o_p->count() > 0) cfg.p_taps = opt.p_taps;
    if (opt.o_l->count() > 0) cfg.l_max = opt.l_max;
    if (opt.o_m->count() > 0) cfg.m_grid = opt.m_grid;
    if (opt.o_snr->count() > 0) cfg.snr_grid_db = opt.snr_grid;
    if (opt.o_trials->count() > 0) cfg.trials = opt.trials;
    if (opt.o_seed->count() > 0) cfg.base_seed = opt.base_seed;
    if (opt.o_em->count() > 0) cfg.em = opt.em;
    if (opt.o_ds_mode->count() > 0) cfg.ds_mode = ds_mode_from_name(opt.ds_mode);
    if (opt.o_ds_eps->count() > 0) cfg.ds_epsilon = opt.ds_epsilon;
    if (opt.o_p10->count() > 0) cfg.chan_p10 = opt.chan_p10;
    if (opt.o_p01->count() > 0) cfg.chan_p01 = opt.chan_p01;
    if (opt.o_gamma->count() > 0) cfg.chan_gamma = opt.chan_gamma;
    if (opt.o_channel_file->count() > 0) cfg.channel_file = opt.channel_file;
    if (opt.o_max_iters->count() > 0) cfg.turbo.max_iters = opt.max_iters;
    if (opt.o_stop_tol->count() > 0) cfg.turbo.stop_tol = opt.stop_tol;
    if (opt.o_damping->count() > 0) cfg.turbo.damping = opt.damping;
    if (opt.o_residual_floor->count() > 0) cfg.turbo.residual_floor = opt.residual_floor;
    if (opt.o_threads->count() > 0) cfg.threads = opt.threads;
    if (opt.o_se_trials->count() > 0) cfg.se_trials = opt.se_trials;
    if (opt.o_se_max_iter->count() > 0) cfg.se_max_iter = opt.se_max_iter;
    if (opt.o_se_tol->count() > 0) cfg.se_tol = opt.se_tol;
    validate(cfg);
    return cfg;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
}

template <typename Fn>
void write_csv_file(const std::string& path, Fn&& emit) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    emit(out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

void print_cell_summary(const CellResult& cell) {
    std::printf("algorithm=%s m=%zu snr_db=%s trials=%zu excluded=%d\n",
                algorithm_name(cell.algorithm), cell.m, db_to_string(cell.snr_db).c_str(),
                cell.trials.size(), cell.excluded);
    std::printf("mean_nmse_db=%s stderr_db=%s median_nmse_db=%s\n",
                db_to_string(cell.mean_nmse_db).c_str(), db_to_string(cell.stderr_nmse_db).c_str(),
                db_to_string(cell.median_nmse_db).c_str());
    std::printf("mean_iterations=%.3g converged_fraction=%.4g\n", cell.mean_iterations,
                cell.converged_fraction);
}

int cmd_generate(const CliOptions& opt) {
    const ExperimentConfig cfg = build_config(opt);
    const ChannelGenSpec chan_spec = channel_spec_from(cfg);
    const std::size_t m = cfg.m_grid.front();
    const SensingOperator op = make_sensing_operator(cfg.n, m, cfg.kind, cfg.base_seed);
    const double sigma2 =
        sigma2_for_snr(expected_entry_power(chan_spec), cfg.snr_grid_db.front());

    // Same stream layout as trial 0 of cmd_run: channel, then noise.
    Rng rng(cfg.base_seed + 1);
    const ChannelMatrix h_delay = generate_channel(chan_spec, rng);
    const ChannelMatrix h_freq = delay_to_freq(h_delay);
    const CMat y_freq = observe(op, h_freq.values, sigma2, rng);

    save_matrix_binary(opt.out_prefix + "_channel_delay.bin", h_delay.values, h_delay.domain);
    save_matrix_binary(opt.out_prefix + "_obs_freq.bin", y_freq, Domain::AngleFrequency);
    write_file(opt.out_prefix + "_operator.txt", serialize(op));
    write_file(opt.out_prefix + "_config.txt", serialize_config(cfg));
    std::printf("%s", serialize(op).c_str());
    std::printf("wrote %s_channel_delay.bin (%zux%zu), %s_obs_freq.bin (%zux%zu)\n",
                opt.out_prefix.c_str(), h_delay.values.rows, h_delay.values.cols,
                opt.out_prefix.c_str(), y_freq.rows, y_freq.cols);
    return 0;
}

int cmd_run(const CliOptions& opt) {
    const ExperimentConfig cfg = build_config(opt);
    if (cfg.m_grid.size() != 1 || cfg.snr_grid_db.size() != 1) {
        std::fprintf(stderr, "run expects a single m and snr (use sweep for grids)\n");
        return 1;
    }
    const CellResult cell = run_cell(cfg, cfg.m_grid.front(), cfg.snr_grid_db.front());
    write_csv_file(opt.out_prefix + "_trials.csv",
                   [&](std::ostream& out) { write_trials_csv(out, cell); });
    write_csv_file(opt.out_prefix + "_trace.csv",
                   [&](std::ostream& out) { write_trace_csv(out, cell); });
    write_file(opt.out_prefix + "_config.txt", serialize_config(cfg));
    print_cell_summary(cell);
    for (const TrialRecord& rec : cell.trials) {
        if (!rec.result.diagnostic.empty()) {
            std::fprintf(stderr, "trial %d (seed %llu): %s\n", rec.trial,
                         static_cast<unsigned long long>(rec.seed), rec.result.diagnostic.c_str());
        }
    }
    return (opt.strict && cell.excluded > 0) ? 2 : 0;
}

int cmd_sweep(const CliOptions& opt) {
    const ExperimentConfig cfg = build_config(opt);
    std::vector<Algorithm> algs = cfg.algorithms;
    if (algs.empty()) algs = {cfg.algorithm};
    std::vector<CellResult> cells;
    int failed_cells = 0;
    for (Algorithm alg : algs) {
        ExperimentConfig cell_cfg = cfg;
        cell_cfg.algorithm = alg;
        for (double snr : cfg.snr_grid_db) {
            for (std::size_t m : cfg.m_grid) {
                try {
                    cells.push_back(run_cell(cell_cfg, m, snr));
                } catch (const std::exception& e) {
                    ++failed_cells;
                    std::fprintf(stderr, "cell (alg=%s, m=%zu, snr=%s) failed: %s\n",
                                 algorithm_name(alg), m, db_to_string(snr).c_str(), e.what());
                }
            }
        }
    }
    write_csv_file(opt.out_prefix + "_sweep.csv",
                   [&](std::ostream& out) { write_sweep_csv(out, cells); });
    write_file(opt.out_prefix + "_config.txt", serialize_config(cfg));

    // Monotonicity diagnostics: mean NMSE should not degrade when SNR or M
    // increases, beyond joint MC noise.
    int snr_violations = 0;
    int m_violations = 0;
    for (const CellResult& a : cells) {
        for (const CellResult& b : cells) {
            if (a.algorithm != b.algorithm) continue;
            const double band =
                3.0 * std::hypot(a.stderr_nmse_db, b.stderr_nmse_db);
            if (a.m == b.m && a.snr_db < b.snr_db &&
                b.mean_nmse_db > a.mean_nmse_db + band) {
                ++snr_violations;
            }
            if (a.snr_db == b.snr_db && a.m < b.m && b.mean_nmse_db > a.mean_nmse_db + band) {
                ++m_violations;
            }
        }
    }
    std::printf("cells=%zu failed_cells=%d snr_monotonicity_violations=%d "
                "m_monotonicity_violations=%d\n",
                cells.size(), failed_cells, snr_violations, m_violations);
    int excluded_total = 0;
    for (const CellResult& cell : cells) excluded_total += cell.excluded;
    std::printf("excluded_trials_total=%d\n", excluded_total);
    return (opt.strict && (failed_cells > 0 || excluded_total > 0)) ? 2 : 0;
}

int cmd_se(const CliOptions& opt) {
    const ExperimentConfig cfg = build_config(opt);
    if (cfg.m_grid.size() != 1 || cfg.snr_grid_db.size() != 1) {
        std::fprintf(stderr, "se expects a single m and snr\n");
        return 1;
    }
    const std::size_t m = cfg.m_grid.front();
    const double snr = cfg.snr_grid_db.front();
    const SeState state = predict_cell(cfg, m, snr);
    const CellResult cell = run_cell(cfg, m, snr);
    write_csv_file(opt.out_prefix + "_se.csv",
                   [&](std::ostream& out) { write_se_trajectory_csv(out, state); });
    write_csv_file(opt.out_prefix + "_se_compare.csv",
                   [&](std::ostream& out) { write_se_comparison_csv(out, state, cell); });
    write_file(opt.out_prefix + "_config.txt", serialize_config(cfg));
    std::printf("se_iterations=%d converged=%d clamped=%d oscillated=%d\n", state.iterations,
                state.converged ? 1 : 0, state.clamped ? 1 : 0, state.oscillated ? 1 : 0);
    std::printf("predicted_nmse_db=%s predicted_post_nmse_db=%s simulated_mean_nmse_db=%s\n",
                db_to_string(to_db(state.predicted_nmse)).c_str(),
                db_to_string(to_db(state.predicted_nmse_post)).c_str(),
                db_to_string(cell.mean_nmse_db).c_str());
    const double gap = std::abs(to_db(state.predicted_nmse_post) - cell.mean_nmse_db);
    std::printf("se_vs_sim_gap_db=%s\n", db_to_string(gap).c_str());
    return (opt.strict && (state.oscillated || cell.excluded > 0)) ? 2 : 0;
}

int cmd_bench(const CliOptions& opt, const std::vector<std::size_t>& n_grid, int iters) {
    const ExperimentConfig cfg = build_config(opt);
    const std::vector<BenchRow> rows = run_bench(cfg, n_grid, iters);
    write_csv_file(opt.out_prefix + "_bench.csv",
                   [&](std::ostream& out) { write_bench_csv(out, rows); });
    write_file(opt.out_prefix + "_config.txt", serialize_config(cfg));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::printf("n=%zu p=%zu iters=%d ms_per_iter=%.6g", rows[i].n, rows[i].p_taps,
                    rows[i].iters, rows[i].ms_per_iter);
        if (i > 0 && rows[i - 1].ms_per_iter > 0.0) {
            std::printf(" ratio_vs_prev=%.4g", rows[i].ms_per_iter / rows[i - 1].ms_per_iter);
        }
        std::printf("\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structured turbo compressed sensing simulator"};
    app.require_subcommand(1);

    CLI::App* generate = app.add_subcommand("generate", "write a channel + observation dataset");
    CLI::App* run = app.add_subcommand("run", "estimate over independent trials at one setting");
    CLI::App* sweep = app.add_subcommand("sweep", "mean NMSE over an SNR x M grid");
    CLI::App* se = app.add_subcommand("se", "state-evolution prediction vs simulation");
    CLI::App* bench = app.add_subcommand("bench", "per-iteration wall time vs N");
    // Each subcommand owns its option state so count() checks see the parsed
    // subcommand's flags.
    CliOptions gen_opt, run_opt, sweep_opt, se_opt, bench_opt;
    add_common_options(generate, gen_opt);
    add_common_options(run, run_opt);
    add_common_options(sweep, sweep_opt);
    add_common_options(se, se_opt);
    add_common_options(bench, bench_opt);

    std::vector<std::size_t> bench_n_grid = {256, 512, 1024};
    int bench_iters = 20;
    bench->add_option("--n-grid", bench_n_grid, "N values to time")->delimiter(',');
    bench->add_option("--bench-iters", bench_iters, "iterations per timed run");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return cmd_generate(gen_opt);
        if (run->parsed()) return cmd_run(run_opt);
        if (sweep->parsed()) return cmd_sweep(sweep_opt);
        if (se->parsed()) return cmd_se(se_opt);
        if (bench->parsed()) return cmd_bench(bench_opt, bench_n_grid, bench_iters);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stcs/chanmodel.hpp"
#include "stcs/denoiser_ds.hpp"
#include "stcs/denoiser_fs.hpp"
#include "stcs/engine.hpp"
#include "stcs/state_evolution.hpp"

namespace stcs {

enum class Algorithm { TurboCs, StcsFs, StcsDs };

const char* algorithm_name(Algorithm alg);
Algorithm algorithm_from_name(const std::string& name);

/// Full description of one experiment: estimator, sensing geometry, channel
/// source, noise grid, and reproducibility seeds. Serializes to line-oriented
/// key=value text (schema_version first) so that a results file plus its
/// config echo regenerates bit-identically.
struct ExperimentConfig {
    int schema_version = 1;
    Algorithm algorithm = Algorithm::StcsFs;
    std::vector<Algorithm> algorithms;  ///< sweep only; empty = {algorithm}
    SensingKind kind = SensingKind::DftRp;
    std::size_t n = 256;
    std::size_t p_taps = 32;
    std::size_t l_max = 16;
    std::vector<std::size_t> m_grid = {103};
    std::vector<double> snr_grid_db = {30.0};
    int trials = 200;
    std::uint64_t base_seed = 1;
    bool em = false;
    DsMode ds_mode = DsMode::Exact;
    double ds_epsilon = 1e-3;
    double chan_p10 = 1.0 / 240.0;
    double chan_p01 = 1.0 / 16.0;
    double chan_gamma = 1.0;
    std::vector<double> chan_tap_variances;  ///< empty = all 1.0
    std::string channel_file;                ///< non-empty = fixed channel from file
    TurboConfig turbo;
    int threads = 1;  ///< worker pool size; results are independent of it
    int se_trials = 200;
    int se_max_iter = 100;
    double se_tol = 1e-6;
};

void validate(const ExperimentConfig& cfg);

std::string serialize_config(const ExperimentConfig& cfg);
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);

/// Channel generator spec implied by the config (seed left at 0; trial seeds
/// are supplied explicitly).
ChannelGenSpec channel_spec_from(const ExperimentConfig& cfg);

/// Generator-matched ("known parameter") priors. The frequency-domain models
/// see the union of the per-column angular supports, so their chain
/// parameters are the union chain's; the delay-domain model takes the
/// generator's parameters directly with probabilities projected away from
/// {0,1}.
FsParams fs_params_from_gen(const ChannelGenSpec& gen);
DsParams ds_params_from_gen(const ChannelGenSpec& gen, double epsilon);
std::vector<BGPrior> bg_params_from_gen(const ChannelGenSpec& gen);

struct TrialRecord {
    int trial = 0;
    std::uint64_t seed = 0;
    TrialResult result;
};

/// All trials of one (m, snr) cell, ordered by trial index, plus summary
/// statistics over the included (finite) trials. Mean NMSE is the dB value of
/// the mean linear ratio.
struct CellResult {
    Algorithm algorithm = Algorithm::StcsFs;
    std::size_t m = 0;
    double snr_db = 0.0;
    double sigma2 = 0.0;
    double entry_power = 0.0;
    std::vector<TrialRecord> trials;
    int excluded = 0;  ///< non-finite/failed trials, flagged and left out of the stats
    double mean_nmse_lin = 0.0;
    double stderr_nmse_lin = 0.0;
    double mean_nmse_db = 0.0;
    double stderr_nmse_db = 0.0;
    double median_nmse_db = 0.0;
    double mean_iterations = 0.0;
    double converged_fraction = 0.0;
};

/// Runs every trial of one grid cell with a worker pool of cfg.threads.
/// Trial t uses seed base_seed + 1 + t for its channel and noise; the
/// operator uses base_seed. Results are ordered by trial index regardless of
/// scheduling, and a failed trial is flagged (excluded) without affecting
/// the others.
CellResult run_cell(const ExperimentConfig& cfg, std::size_t m, double snr_db);

/// Noise variance for a target per-measurement SNR: entry_power / 10^(dB/10).
double sigma2_for_snr(double entry_power, double snr_db);

// CSV emission. All numeric formats are deterministic: linear values use
// %.17g (exact double round trip), dB values use %.10g with -inf rendered as
// the string "-inf".
void write_trials_csv(std::ostream& out, const CellResult& cell);
void write_trace_csv(std::ostream& out, const CellResult& cell);
void write_sweep_csv(std::ostream& out, const std::vector<CellResult>& cells);
void write_se_trajectory_csv(std::ostream& out, const SeState& state);

/// Per-iteration overlay of the state-evolution prediction and the simulated
/// mean NMSE (posterior trace, linear-mean across trials, last value carried
/// forward for trials that stopped early).
void write_se_comparison_csv(std::ostream& out, const SeState& state, const CellResult& cell);

/// Simulated per-iteration mean NMSE (dB) used by the comparison CSV.
std::vector<double> simulated_iteration_nmse_db(const CellResult& cell);

/// State-evolution prediction for the configured algorithm at one cell.
SeState predict_cell(const ExperimentConfig& cfg, std::size_t m, double snr_db);

struct BenchRow {
    std::size_t n = 0;
    std::size_t p_taps = 0;
    int iters = 0;
    double ms_per_iter = 0.0;
};

/// Times fixed-iteration runs (stopping disabled) of the configured
/// algorithm for each n in n_grid at m = round(0.4 n).
std::vector<BenchRow> run_bench(const ExperimentConfig& cfg, const std::vector<std::size_t>& n_grid,
                                int iters);
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace stcs

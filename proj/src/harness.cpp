#include "stcs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "stcs/em.hpp"

namespace stcs {

namespace {

std::string lin_to_string(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty() || !parts.empty()) parts.push_back(cur);
    return parts;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad numeric value for " + key + ": '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer value for " + key + ": '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "0" || value == "false") return false;
    if (value == "1" || value == "true") return true;
    throw std::invalid_argument("config: bad boolean value for " + key + ": '" + value + "'");
}

}  // namespace

const char* algorithm_name(Algorithm alg) {
    switch (alg) {
        case Algorithm::TurboCs: return "turbo_cs";
        case Algorithm::StcsFs: return "stcs_fs";
        case Algorithm::StcsDs: return "stcs_ds";
    }
    throw std::invalid_argument("algorithm_name: unknown algorithm");
}

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "turbo_cs") return Algorithm::TurboCs;
    if (name == "stcs_fs") return Algorithm::StcsFs;
    if (name == "stcs_ds") return Algorithm::StcsDs;
    throw std::invalid_argument("unknown algorithm: '" + name + "'");
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.schema_version != 1) throw std::invalid_argument("config: unsupported schema_version");
    if (cfg.n == 0 || cfg.p_taps == 0) throw std::invalid_argument("config: n and p must be positive");
    if (cfg.l_max == 0 || cfg.l_max > cfg.p_taps) {
        throw std::invalid_argument("config: need 0 < l <= p");
    }
    if (cfg.m_grid.empty()) throw std::invalid_argument("config: m grid is empty");
    for (std::size_t m : cfg.m_grid) {
        if (m == 0 || m > cfg.n) throw std::invalid_argument("config: need 0 < m <= n");
    }
    if (cfg.snr_grid_db.empty()) throw std::invalid_argument("config: snr grid is empty");
    if (cfg.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
    if (!(cfg.ds_epsilon > 0.0 && cfg.ds_epsilon < 1.0)) {
        throw std::invalid_argument("config: ds_epsilon must be in (0, 1)");
    }
    if (!(cfg.chan_p10 > 0.0 && cfg.chan_p10 < 1.0) || !(cfg.chan_p01 > 0.0 && cfg.chan_p01 < 1.0)) {
        throw std::invalid_argument("config: channel chain rates must be in (0, 1)");
    }
    if (!(cfg.chan_gamma >= 0.0 && cfg.chan_gamma <= 1.0)) {
        throw std::invalid_argument("config: chan_gamma must be in [0, 1]");
    }
    if (!cfg.chan_tap_variances.empty() && cfg.chan_tap_variances.size() != cfg.p_taps) {
        throw std::invalid_argument("config: chan_tap_variances must have p entries");
    }
    if (cfg.threads < 0) throw std::invalid_argument("config: threads must be >= 0");
    if (cfg.se_trials < 1 || cfg.se_max_iter < 1 || !(cfg.se_tol > 0.0)) {
        throw std::invalid_argument("config: bad state-evolution settings");
    }
    validate(cfg.turbo);
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "schema_version=" << cfg.schema_version << "\n";
    out << "algorithm=" << algorithm_name(cfg.algorithm) << "\n";
    out << "algorithms=";
    for (std::size_t i = 0; i < cfg.algorithms.size(); ++i) {
        if (i) out << ",";
        out << algorithm_name(cfg.algorithms[i]);
    }
    out << "\n";
    out << "sensing=" << sensing_kind_name(cfg.kind) << "\n";
    out << "n=" << cfg.n << "\n";
    out << "p=" << cfg.p_taps << "\n";
    out << "l=" << cfg.l_max << "\n";
    out << "m=";
    for (std::size_t i = 0; i < cfg.m_grid.size(); ++i) out << (i ? "," : "") << cfg.m_grid[i];
    out << "\n";
    out << "snr_db=";
    for (std::size_t i = 0; i < cfg.snr_grid_db.size(); ++i) {
        out << (i ? "," : "") << lin_to_string(cfg.snr_grid_db[i]);
    }
    out << "\n";
    out << "trials=" << cfg.trials << "\n";
    out << "base_seed=" << cfg.base_seed << "\n";
    out << "em=" << (cfg.em ? 1 : 0) << "\n";
    out << "ds_mode=" << ds_mode_name(cfg.ds_mode) << "\n";
    out << "ds_epsilon=" << lin_to_string(cfg.ds_epsilon) << "\n";
    out << "chan_p10=" << lin_to_string(cfg.chan_p10) << "\n";
    out << "chan_p01=" << lin_to_string(cfg.chan_p01) << "\n";
    out << "chan_gamma=" << lin_to_string(cfg.chan_gamma) << "\n";
    out << "chan_tap_variances=";
    for (std::size_t i = 0; i < cfg.chan_tap_variances.size(); ++i) {
        out << (i ? "," : "") << lin_to_string(cfg.chan_tap_variances[i]);
    }
    out << "\n";
    out << "channel_file=" << cfg.channel_file << "\n";
    out << "max_iters=" << cfg.turbo.max_iters << "\n";
    out << "stop_tol=" << lin_to_string(cfg.turbo.stop_tol) << "\n";
    out << "damping=" << lin_to_string(cfg.turbo.damping) << "\n";
    out << "residual_floor=" << lin_to_string(cfg.turbo.residual_floor) << "\n";
    out << "v_min=" << lin_to_string(cfg.turbo.v_min) << "\n";
    out << "v_max=" << lin_to_string(cfg.turbo.v_max) << "\n";
    out << "threads=" << cfg.threads << "\n";
    out << "se_trials=" << cfg.se_trials << "\n";
    out << "se_max_iter=" << cfg.se_max_iter << "\n";
    out << "se_tol=" << lin_to_string(cfg.se_tol) << "\n";
    return out.str();
}

ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    cfg.m_grid.clear();
    cfg.snr_grid_db.clear();
    bool saw_m = false;
    bool saw_snr = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key == "schema_version") {
            cfg.schema_version = static_cast<int>(parse_u64(key, value));
        } else if (key == "algorithm") {
            cfg.algorithm = algorithm_from_name(value);
        } else if (key == "algorithms") {
            cfg.algorithms.clear();
            if (!value.empty()) {
                for (const auto& part : split_list(value)) {
                    cfg.algorithms.push_back(algorithm_from_name(trim(part)));
                }
            }
        } else if (key == "sensing") {
            cfg.kind = sensing_kind_from_name(value);
        } else if (key == "n") {
            cfg.n = parse_u64(key, value);
        } else if (key == "p") {
            cfg.p_taps = parse_u64(key, value);
        } else if (key == "l") {
            cfg.l_max = parse_u64(key, value);
        } else if (key == "m") {
            cfg.m_grid.clear();
            for (const auto& part : split_list(value)) cfg.m_grid.push_back(parse_u64(key, trim(part)));
            saw_m = true;
        } else if (key == "snr_db") {
            cfg.snr_grid_db.clear();
            for (const auto& part : split_list(value)) {
                cfg.snr_grid_db.push_back(parse_double(key, trim(part)));
            }
            saw_snr = true;
        } else if (key == "trials") {
            cfg.trials = static_cast<int>(parse_u64(key, value));
        } else if (key == "base_seed") {
            cfg.base_seed = parse_u64(key, value);
        } else if (key == "em") {
            cfg.em = parse_bool(key, value);
        } else if (key == "ds_mode") {
            cfg.ds_mode = ds_mode_from_name(value);
        } else if (key == "ds_epsilon") {
            cfg.ds_epsilon = parse_double(key, value);
        } else if (key == "chan_p10") {
            cfg.chan_p10 = parse_double(key, value);
        } else if (key == "chan_p01") {
            cfg.chan_p01 = parse_double(key, value);
        } else if (key == "chan_gamma") {
            cfg.chan_gamma = parse_double(key, value);
        } else if (key == "chan_tap_variances") {
            cfg.chan_tap_variances.clear();
            if (!value.empty()) {
                for (const auto& part : split_list(value)) {
                    cfg.chan_tap_variances.push_back(parse_double(key, trim(part)));
                }
            }
        } else if (key == "channel_file") {
            cfg.channel_file = value;
        } else if (key == "max_iters") {
            cfg.turbo.max_iters = static_cast<int>(parse_u64(key, value));
        } else if (key == "stop_tol") {
            cfg.turbo.stop_tol = parse_double(key, value);
        } else if (key == "damping") {
            cfg.turbo.damping = parse_double(key, value);
        } else if (key == "residual_floor") {
            cfg.turbo.residual_floor = parse_double(key, value);
        } else if (key == "v_min") {
            cfg.turbo.v_min = parse_double(key, value);
        } else if (key == "v_max") {
            cfg.turbo.v_max = parse_double(key, value);
        } else if (key == "threads") {
            cfg.threads = static_cast<int>(parse_u64(key, value));
        } else if (key == "se_trials") {
            cfg.se_trials = static_cast<int>(parse_u64(key, value));
        } else if (key == "se_max_iter") {
            cfg.se_max_iter = static_cast<int>(parse_u64(key, value));
        } else if (key == "se_tol") {
            cfg.se_tol = parse_double(key, value);
        } else {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": unknown key '" + key + "'");
        }
    }
    if (!saw_m) cfg.m_grid = {103};
    if (!saw_snr) cfg.snr_grid_db = {30.0};
    validate(cfg);
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse_config(in);
}

ChannelGenSpec channel_spec_from(const ExperimentConfig& cfg) {
    ChannelGenSpec spec;
    spec.n = cfg.n;
    spec.p_taps = cfg.p_taps;
    spec.l_max = cfg.l_max;
    spec.p10 = cfg.chan_p10;
    spec.p01 = cfg.chan_p01;
    spec.gamma = cfg.chan_gamma;
    spec.tap_variances = cfg.chan_tap_variances;
    spec.seed = cfg.base_seed;
    return spec;
}

namespace {

struct UnionChain {
    double lambda = 0.0;
    double p01 = 0.0;
    double p10 = 0.0;
    double sigma2 = 0.0;  ///< per-entry slab variance in the frequency domain
};

// The frequency-domain row support is the union of the per-column angular
// supports. Each column contributes an independent stationary chain gated by
// gamma, so the union is itself a stationary chain whose rates follow from
//   P(row inactive)              = (1 - gamma lambda)^L
//   P(row and next both inactive) = (1 - gamma + gamma (1-lambda)(1-p10))^L.
UnionChain union_chain(const ChannelGenSpec& gen) {
    const double lam = chain_stationary_activity(gen.p10, gen.p01);
    const double lcount = static_cast<double>(gen.l_max);
    const double q0 = std::pow(1.0 - gen.gamma * lam, lcount);
    const double keep00 = std::pow(1.0 - gen.gamma + gen.gamma * (1.0 - lam) * (1.0 - gen.p10),
                                   lcount);
    UnionChain u;
    u.lambda = em_project_prob(1.0 - q0);
    const double flow01 = std::max(q0 - keep00, 0.0);
    u.p10 = em_project_prob(q0 > 0.0 ? flow01 / q0 : 1.0);
    u.p01 = em_project_prob(u.p10 * (1.0 - u.lambda) / u.lambda);
    double total = 0.0;
    for (std::size_t l = 0; l < gen.l_max; ++l) total += gen.gamma * lam * gen.tap_variance(l);
    u.sigma2 = std::max(total / (static_cast<double>(gen.p_taps) * u.lambda), kEmVarFloor);
    return u;
}

}  // namespace

FsParams fs_params_from_gen(const ChannelGenSpec& gen) {
    const UnionChain u = union_chain(gen);
    FsParams params;
    params.lambda = u.lambda;
    params.p01 = u.p01;
    params.p10 = u.p10;
    params.sigma2.assign(gen.p_taps, u.sigma2);
    return params;
}

DsParams ds_params_from_gen(const ChannelGenSpec& gen, double epsilon) {
    const double lam = chain_stationary_activity(gen.p10, gen.p01);
    DsParams params;
    params.epsilon = epsilon;
    params.taps.resize(gen.p_taps);
    for (std::size_t p = 0; p < gen.p_taps; ++p) {
        DsTapParams& tap = params.taps[p];
        tap.lambda = lam;
        tap.p01 = gen.p01;
        tap.p10 = gen.p10;
        // Column-activity probabilities are clipped away from {0, 1}: the
        // gate posterior stays well defined even for never-active columns.
        tap.gamma = std::clamp(p < gen.l_max ? gen.gamma : 0.0, 1e-3, 1.0 - 1e-3);
        tap.sigma2 = std::max(gen.tap_variance(p), kEmVarFloor);
    }
    return params;
}

std::vector<BGPrior> bg_params_from_gen(const ChannelGenSpec& gen) {
    const UnionChain u = union_chain(gen);
    std::vector<BGPrior> prior(gen.p_taps);
    for (auto& bg : prior) {
        bg.pi = u.lambda;
        bg.sigma2 = u.sigma2;
    }
    return prior;
}

double sigma2_for_snr(double entry_power, double snr_db) {
    if (!(entry_power > 0.0)) throw std::invalid_argument("sigma2_for_snr: entry_power must be positive");
    return entry_power / std::pow(10.0, snr_db / 10.0);
}

namespace {

ChannelMatrix load_channel_file(const std::string& path) {
    try {
        auto [values, domain] = load_matrix_binary(path);
        return ChannelMatrix{std::move(values), domain};
    } catch (const std::exception&) {
        auto [values, domain] = load_matrix_text(path);
        return ChannelMatrix{std::move(values), domain};
    }
}

TrialRecord run_one_trial(const ExperimentConfig& cfg, const SensingOperator& op, double sigma2,
                          int trial, const ChannelGenSpec& chan_spec,
                          const ChannelMatrix* file_delay, const FsParams* fs_known,
                          const DsParams* ds_known, const std::vector<BGPrior>* bg_known) {
    TrialRecord rec;
    rec.trial = trial;
    rec.seed = cfg.base_seed + 1 + static_cast<std::uint64_t>(trial);
    try {
        Rng rng(rec.seed);
        ChannelMatrix h_delay =
            file_delay != nullptr ? *file_delay : generate_channel(chan_spec, rng);
        ChannelMatrix h_freq = delay_to_freq(h_delay);
        const CMat y_freq = observe(op, h_freq.values, sigma2, rng);
        const std::vector<SensingOperator> ops = {op};
        switch (cfg.algorithm) {
            case Algorithm::TurboCs: {
                BgIidDenoiser den(cfg.em ? em_init_bg(y_freq, cfg.n) : *bg_known,
                                  Domain::AngleFrequency, cfg.em);
                rec.result = run_turbo(ops, y_freq, sigma2, den, cfg.turbo, &h_freq);
                break;
            }
            case Algorithm::StcsFs: {
                FsDenoiser den(cfg.em ? em_init_fs(y_freq, cfg.n) : *fs_known, cfg.em);
                rec.result = run_turbo(ops, y_freq, sigma2, den, cfg.turbo, &h_freq);
                break;
            }
            case Algorithm::StcsDs: {
                const CMat y_delay = rows_to_delay(y_freq);
                DsDenoiser den(cfg.em ? em_init_ds(y_delay, cfg.n, cfg.ds_epsilon) : *ds_known,
                               cfg.ds_mode, cfg.em);
                rec.result = run_turbo(ops, y_delay, sigma2, den, cfg.turbo, &h_delay);
                break;
            }
        }
    } catch (const std::exception& e) {
        rec.result = TrialResult{};
        rec.result.diverged = true;
        rec.result.final_nmse = std::numeric_limits<double>::quiet_NaN();
        rec.result.diagnostic = std::string("trial failed: ") + e.what();
    }
    return rec;
}

void summarize(CellResult& cell) {
    std::vector<double> lin;
    double iter_sum = 0.0;
    double conv_sum = 0.0;
    for (const TrialRecord& rec : cell.trials) {
        if (rec.result.diverged || !std::isfinite(rec.result.final_nmse)) continue;
        lin.push_back(rec.result.final_nmse);
        iter_sum += rec.result.iterations;
        conv_sum += rec.result.converged ? 1.0 : 0.0;
    }
    cell.excluded = static_cast<int>(cell.trials.size() - lin.size());
    const std::size_t k = lin.size();
    if (k == 0) {
        cell.mean_nmse_lin = std::numeric_limits<double>::quiet_NaN();
        cell.mean_nmse_db = std::numeric_limits<double>::quiet_NaN();
        cell.median_nmse_db = std::numeric_limits<double>::quiet_NaN();
        cell.stderr_nmse_lin = 0.0;
        cell.stderr_nmse_db = 0.0;
        cell.mean_iterations = 0.0;
        cell.converged_fraction = 0.0;
        return;
    }
    double sum = 0.0;
    for (double v : lin) sum += v;
    const double mean = sum / static_cast<double>(k);
    double ss = 0.0;
    for (double v : lin) ss += (v - mean) * (v - mean);
    cell.mean_nmse_lin = mean;
    cell.stderr_nmse_lin = k > 1 ? std::sqrt(ss / (static_cast<double>(k) * (k - 1.0))) : 0.0;
    cell.mean_nmse_db = to_db(mean);
    cell.stderr_nmse_db =
        mean > 0.0 ? (10.0 / std::log(10.0)) * cell.stderr_nmse_lin / mean : 0.0;
    std::sort(lin.begin(), lin.end());
    const double median =
        k % 2 == 1 ? lin[k / 2] : 0.5 * (lin[k / 2 - 1] + lin[k / 2]);
    cell.median_nmse_db = to_db(median);
    cell.mean_iterations = iter_sum / static_cast<double>(k);
    cell.converged_fraction = conv_sum / static_cast<double>(k);
}

}  // namespace

CellResult run_cell(const ExperimentConfig& cfg, std::size_t m, double snr_db) {
    validate(cfg);
    if (m == 0 || m > cfg.n) throw std::invalid_argument("run_cell: need 0 < m <= n");

    const ChannelGenSpec chan_spec = channel_spec_from(cfg);
    const SensingOperator op = make_sensing_operator(cfg.n, m, cfg.kind, cfg.base_seed);

    ChannelMatrix file_delay;
    const ChannelMatrix* file_ptr = nullptr;
    double entry_power = 0.0;
    if (!cfg.channel_file.empty()) {
        ChannelMatrix loaded = load_channel_file(cfg.channel_file);
        if (loaded.values.rows != cfg.n || loaded.values.cols != cfg.p_taps) {
            throw std::invalid_argument("run_cell: channel file shape does not match config");
        }
        file_delay = loaded.domain == Domain::AngleDelay ? std::move(loaded) : freq_to_delay(loaded);
        file_ptr = &file_delay;
        entry_power = fro_norm_sq(file_delay.values) /
                      static_cast<double>(cfg.n * cfg.p_taps);
        if (!(entry_power > 0.0)) {
            throw std::invalid_argument("run_cell: channel file carries no energy");
        }
    } else {
        entry_power = expected_entry_power(chan_spec);
    }
    const double sigma2 = sigma2_for_snr(entry_power, snr_db);

    // Generator-matched priors, shared read-only across the pool.
    FsParams fs_known;
    DsParams ds_known;
    std::vector<BGPrior> bg_known;
    if (!cfg.em) {
        switch (cfg.algorithm) {
            case Algorithm::TurboCs: bg_known = bg_params_from_gen(chan_spec); break;
            case Algorithm::StcsFs: fs_known = fs_params_from_gen(chan_spec); break;
            case Algorithm::StcsDs: ds_known = ds_params_from_gen(chan_spec, cfg.ds_epsilon); break;
        }
    }

    CellResult cell;
    cell.algorithm = cfg.algorithm;
    cell.m = m;
    cell.snr_db = snr_db;
    cell.sigma2 = sigma2;
    cell.entry_power = entry_power;
    cell.trials.resize(cfg.trials);

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int nthreads =
        std::max(1, std::min(cfg.threads > 0 ? cfg.threads : static_cast<int>(hw), cfg.trials));
    auto work = [&](int t) {
        cell.trials[t] = run_one_trial(cfg, op, sigma2, t, chan_spec, file_ptr, &fs_known,
                                       &ds_known, &bg_known);
    };
    if (nthreads == 1) {
        for (int t = 0; t < cfg.trials; ++t) work(t);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (int w = 0; w < nthreads; ++w) {
            pool.emplace_back([&] {
                for (int t = next.fetch_add(1); t < cfg.trials; t = next.fetch_add(1)) work(t);
            });
        }
        for (auto& th : pool) th.join();
    }

    summarize(cell);
    return cell;
}

void write_trials_csv(std::ostream& out, const CellResult& cell) {
    out << "trial,seed,final_nmse_db,nmse_lin,iterations,converged,degeneracies\n";
    for (const TrialRecord& rec : cell.trials) {
        out << rec.trial << ',' << rec.seed << ',' << db_to_string(to_db(rec.result.final_nmse))
            << ',' << lin_to_string(rec.result.final_nmse) << ',' << rec.result.iterations << ','
            << (rec.result.converged ? 1 : 0) << ',' << rec.result.degeneracies << '\n';
    }
}

void write_trace_csv(std::ostream& out, const CellResult& cell) {
    out << "trial,iteration,nmse_db\n";
    for (const TrialRecord& rec : cell.trials) {
        for (std::size_t k = 0; k < rec.result.nmse_trace_db.size(); ++k) {
            out << rec.trial << ',' << (k + 1) << ',' << db_to_string(rec.result.nmse_trace_db[k])
                << '\n';
        }
    }
}

void write_sweep_csv(std::ostream& out, const std::vector<CellResult>& cells) {
    out << "snr_db,m,algorithm,mean_nmse_db,stderr_db,trials\n";
    for (const CellResult& cell : cells) {
        out << db_to_string(cell.snr_db) << ',' << cell.m << ',' << algorithm_name(cell.algorithm)
            << ',' << db_to_string(cell.mean_nmse_db) << ',' << db_to_string(cell.stderr_nmse_db)
            << ',' << (cell.trials.size() - static_cast<std::size_t>(cell.excluded)) << '\n';
    }
}

void write_se_trajectory_csv(std::ostream& out, const SeState& state) {
    out << "iteration,tau_a,tau_b,mc_stderr\n";
    for (const SeTrajectoryPoint& pt : state.trajectory) {
        out << pt.iteration << ',' << lin_to_string(pt.tau_a) << ',' << lin_to_string(pt.tau_b)
            << ',' << lin_to_string(pt.mc_stderr) << '\n';
    }
}

std::vector<double> simulated_iteration_nmse_db(const CellResult& cell) {
    std::size_t max_len = 0;
    for (const TrialRecord& rec : cell.trials) {
        if (rec.result.diverged || !std::isfinite(rec.result.final_nmse)) continue;
        max_len = std::max(max_len, rec.result.nmse_trace_db.size());
    }
    std::vector<double> out;
    out.reserve(max_len);
    for (std::size_t k = 0; k < max_len; ++k) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const TrialRecord& rec : cell.trials) {
            if (rec.result.diverged || !std::isfinite(rec.result.final_nmse)) continue;
            const auto& trace = rec.result.nmse_trace_db;
            if (trace.empty()) continue;
            // Converged trials hold their final estimate in later iterations.
            const double db = trace[std::min(k, trace.size() - 1)];
            sum += std::isinf(db) && db < 0.0 ? 0.0 : std::pow(10.0, db / 10.0);
            ++count;
        }
        out.push_back(count > 0 ? to_db(sum / static_cast<double>(count))
                                : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

void write_se_comparison_csv(std::ostream& out, const SeState& state, const CellResult& cell) {
    const std::vector<double> sim = simulated_iteration_nmse_db(cell);
    const std::size_t rows = std::max(state.trajectory.size(), sim.size());
    out << "iteration,predicted_nmse_db,predicted_post_nmse_db,simulated_nmse_db\n";
    for (std::size_t k = 0; k < rows; ++k) {
        const SeTrajectoryPoint& pt =
            state.trajectory[std::min(k, state.trajectory.size() - 1)];
        const double pred_db = to_db(pt.tau_a / state.entry_power);
        const double pred_post_db = to_db(pt.mse_post / state.entry_power);
        const double sim_db =
            sim.empty() ? std::numeric_limits<double>::quiet_NaN() : sim[std::min(k, sim.size() - 1)];
        out << (k + 1) << ',' << db_to_string(pred_db) << ',' << db_to_string(pred_post_db) << ','
            << db_to_string(sim_db) << '\n';
    }
}

SeState predict_cell(const ExperimentConfig& cfg, std::size_t m, double snr_db) {
    validate(cfg);
    if (!cfg.channel_file.empty()) {
        throw std::invalid_argument("predict_cell: state evolution needs the synthetic generator");
    }
    const ChannelGenSpec chan_spec = channel_spec_from(cfg);
    const double sigma2 = sigma2_for_snr(expected_entry_power(chan_spec), snr_db);
    switch (cfg.algorithm) {
        case Algorithm::TurboCs: {
            BgIidDenoiser den(bg_params_from_gen(chan_spec), Domain::AngleFrequency);
            return se_fixed_point(sigma2, m, cfg.n, den, chan_spec, cfg.se_tol, cfg.se_max_iter,
                                  cfg.se_trials, cfg.base_seed);
        }
        case Algorithm::StcsFs: {
            FsDenoiser den(fs_params_from_gen(chan_spec));
            return se_fixed_point(sigma2, m, cfg.n, den, chan_spec, cfg.se_tol, cfg.se_max_iter,
                                  cfg.se_trials, cfg.base_seed);
        }
        case Algorithm::StcsDs: {
            DsDenoiser den(ds_params_from_gen(chan_spec, cfg.ds_epsilon), cfg.ds_mode);
            return se_fixed_point(sigma2, m, cfg.n, den, chan_spec, cfg.se_tol, cfg.se_max_iter,
                                  cfg.se_trials, cfg.base_seed);
        }
    }
    throw std::invalid_argument("predict_cell: unknown algorithm");
}

std::vector<BenchRow> run_bench(const ExperimentConfig& cfg, const std::vector<std::size_t>& n_grid,
                                int iters) {
    validate(cfg);
    if (n_grid.empty()) throw std::invalid_argument("run_bench: empty n grid");
    if (iters < 1) throw std::invalid_argument("run_bench: iters must be >= 1");
    std::vector<BenchRow> rows;
    for (std::size_t n : n_grid) {
        ExperimentConfig sized = cfg;
        sized.n = n;
        sized.channel_file.clear();
        sized.turbo.max_iters = iters;
        sized.turbo.stop_tol = 0.0;  // fixed iteration count for stable timing
        sized.trials = 1;
        sized.em = false;
        const std::size_t m = static_cast<std::size_t>(std::llround(0.4 * static_cast<double>(n)));
        // Warm-up run populates the FFT plan cache before the timed pass.
        ExperimentConfig warm = sized;
        warm.turbo.max_iters = 2;
        run_cell(warm, m, cfg.snr_grid_db.front());
        const CellResult timed = run_cell(sized, m, cfg.snr_grid_db.front());
        BenchRow row;
        row.n = n;
        row.p_taps = cfg.p_taps;
        row.iters = timed.trials.front().result.iterations;
        row.ms_per_iter = timed.trials.front().result.wall_ms / std::max(1, row.iters);
        rows.push_back(row);
    }
    return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << "n,p,iters,ms_per_iter\n";
    for (const BenchRow& row : rows) {
        out << row.n << ',' << row.p_taps << ',' << row.iters << ','
            << lin_to_string(row.ms_per_iter) << '\n';
    }
}

}  // namespace stcs

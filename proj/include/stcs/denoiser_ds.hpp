#pragma once

#include "stcs/engine.hpp"
#include "stcs/priors.hpp"

namespace stcs {

/// Per-tap parameters of the delay-support model: each delay tap p has its
/// own occupancy gate t_p ~ Bern(gamma), and when occupied its angular
/// support follows a Markov chain with the given rates and slab variance.
struct DsTapParams {
    double lambda = 1.0 / 16.0;
    double p01 = 1.0 / 16.0;
    double p10 = 1.0 / 240.0;
    double gamma = 0.5;
    double sigma2 = 1.0;
};

struct DsParams {
    std::vector<DsTapParams> taps;  ///< size P
    double epsilon = 1e-3;          ///< leak activity of an unoccupied tap
};

void validate(const DsParams& params, std::size_t p_taps);

/// Inference schedule for the delay-support denoiser.
enum class DsMode {
    Exact,     ///< tap-conditional chain sweeps + exact gate posterior (normative)
    TwoSweep,  ///< loopy variant: two mixed-kernel sweeps with gate messages in between
};

const char* ds_mode_name(DsMode mode);
DsMode ds_mode_from_name(const std::string& name);

/// Module B for the delay-support model. Taps are independent, so each
/// column is denoised on its own chain; the occupancy gate mixes the
/// chain-structured branch with an i.i.d. Bern(epsilon) leak branch.
class DsDenoiser final : public ModuleB {
  public:
    explicit DsDenoiser(DsParams params, DsMode mode = DsMode::Exact, bool learn = false);

    Domain domain() const override { return Domain::AngleDelay; }
    void denoise(const CMat& pri_mean, const std::vector<double>& pri_var) override;
    std::vector<double> prior_power(std::size_t p_taps) const override;
    void em_update() override;
    bool learning() const override { return learn_; }
    nlohmann::json params_json() const override;

    const DsParams& params() const { return params_; }
    DsMode mode() const { return mode_; }

    /// P(t_p = 1 | everything) after the last denoise call.
    const std::vector<double>& column_activity() const { return t_posterior_; }
    /// P(s_{n,p} = 1 | everything) per entry after the last denoise call.
    const RMat& support_marginal() const { return marginal_; }

  private:
    void denoise_exact_tap(std::size_t p, const CMat& pri_mean, double v);
    void denoise_schedule_tap(std::size_t p, const CMat& pri_mean, double v);

    DsParams params_;
    DsMode mode_;
    bool learn_;
    bool has_last_ = false;
    std::vector<double> t_posterior_;
    RMat marginal_;
    RMat e2_active_;
    // Gate-conditional chain statistics per tap from the exact decomposition,
    // kept when learning (used by em_update in either inference mode).
    std::vector<std::vector<double>> marginal_t1_;
    std::vector<std::vector<std::array<double, 4>>> pairwise_t1_;
    std::vector<std::vector<double>> em_marginal_;
    std::vector<double> t_posterior_exact_;
};

}  // namespace stcs

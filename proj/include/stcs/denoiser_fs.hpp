#pragma once

#include "stcs/engine.hpp"
#include "stcs/priors.hpp"

namespace stcs {

/// Frequency-support model: one support chain s_1..s_N shared by all P
/// frequency bins. An active row carries independent CN(0, sigma2[p]) values
/// in every bin; an inactive row is zero everywhere.
struct FsParams {
    double lambda = 1.0 / 16.0;  ///< initial/stationary activity of the chain
    double p01 = 1.0 / 16.0;     ///< exit rate
    double p10 = 1.0 / 240.0;    ///< entry rate (tied to lambda/p01 when learning)
    std::vector<double> sigma2;  ///< per-bin slab variance, size P
};

void validate(const FsParams& params, std::size_t p_taps);

/// Module B for the common-support model. Per-entry slab evidence is pooled
/// across bins in the log-odds domain, passed once through the exact chain
/// forward/backward sweep, and combined with leave-one-bin-out extrinsic
/// support before the per-entry spike-and-slab moments.
class FsDenoiser final : public ModuleB {
  public:
    /// tie_sigma pools the learned slab variance across bins (useful when P is
    /// small and per-bin statistics are noisy). Ignored unless learn is set.
    explicit FsDenoiser(FsParams params, bool learn = false, bool tie_sigma = false);

    Domain domain() const override { return Domain::AngleFrequency; }
    void denoise(const CMat& pri_mean, const std::vector<double>& pri_var) override;
    std::vector<double> prior_power(std::size_t p_taps) const override;
    void em_update() override;
    bool learning() const override { return learn_; }
    nlohmann::json params_json() const override;

    const FsParams& params() const { return params_; }

    /// P(s_n = 1 | everything) after the last denoise call.
    const std::vector<double>& support_marginal() const { return marginal_; }
    const std::vector<std::array<double, 4>>& support_pairwise() const { return pairwise_; }

    /// Leave-one-bin-out extrinsic support probabilities per entry: chain
    /// messages plus all other bins' evidence, excluding the entry's own.
    const RMat& extrinsic_support() const { return ext_support_; }

  private:
    FsParams params_;
    bool learn_;
    bool tie_sigma_;
    bool has_last_ = false;
    std::vector<double> marginal_;
    std::vector<std::array<double, 4>> pairwise_;
    RMat ext_support_;
    RMat e2_active_;
};

}  // namespace stcs

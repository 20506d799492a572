#pragma once

#include <json.hpp>

#include <memory>
#include <string>
#include <vector>

#include "stcs/linops.hpp"
#include "stcs/priors.hpp"
#include "stcs/types.hpp"

namespace stcs {

struct TurboConfig {
    int max_iters = 50;
    double stop_tol = 1e-6;  ///< relative Frobenius change of the Module B
                             ///< posterior mean; <= 0 disables early stopping
    double damping = 1.0;    ///< in (0, 1], applied to extrinsic means; 1 = off
    double v_min = 1e-13;    ///< variance clamp floor
    double v_max = 1e13;     ///< variance clamp ceiling
    /// Residual consistency floor on the per-tap Module A input variance:
    /// before each LMMSE pass, v_A_pri[p] is raised to at least
    /// residual_floor * (|y_p - A h_A_pri_p|^2 / m - sigma2) whenever that
    /// measured error energy exceeds the claimed variance. An overconfident
    /// extrinsic message (claimed variance far below the actual error) would
    /// otherwise freeze the iteration on a wrong estimate; the floor re-opens
    /// it using only quantities Module A already owns. 0 disables, 1 uses the
    /// unbiased residual estimate. Leaves well-calibrated trajectories
    /// essentially untouched because there the claim already matches the
    /// residual.
    double residual_floor = 1.0;
};

void validate(const TurboConfig& cfg);

/// Module A: per-tap LMMSE refinement of the prior mean h_pri with variance
/// v_pri given measurements y = A h + CN(0, sigma2 I) over a row-orthonormal
/// operator:
///   h_post = h_pri + v/(v+sigma2) * A^H (y - A h_pri)
///   v_post = v - (m/n) * v^2 / (v + sigma2)
/// The scratch vectors avoid per-call allocation in the iteration loop.
void lmmse_update(const SensingOperator& op, const cplx* y, const cplx* h_pri, double v_pri,
                  double sigma2, cplx* h_post, double& v_post, CVec& fft_scratch,
                  CVec& m_scratch, CVec& n_scratch);

/// Allocating convenience overload.
std::pair<CVec, double> lmmse_update(const SensingOperator& op, const CVec& y, const CVec& h_pri,
                                     double v_pri, double sigma2);

/// Measured error variance of a candidate mean h_pri against the
/// observations: |y - A h_pri|^2 / m - sigma2. For a row-orthonormal A and
/// h_pri = h + e with i.i.d. error e, the estimate is unbiased for the
/// per-entry error variance of e. May be negative when the residual is below
/// the noise floor; callers treat that as "no evidence of excess error".
double residual_variance_estimate(const SensingOperator& op, const cplx* y, const cplx* h_pri,
                                  double sigma2, CVec& fft_scratch, CVec& m_scratch);

/// Allocating convenience overload.
double residual_variance_estimate(const SensingOperator& op, const CVec& y, const CVec& h_pri,
                                  double sigma2);

/// Extrinsic (Gaussian-division) message from a posterior back to its prior:
///   1/v_ext  = 1/v_post - 1/v_pri
///   h_ext    = v_ext (h_post/v_post - h_pri/v_pri)
/// When the posterior carries no new information (v_post >= v_pri) the
/// message degenerates to an uninformative one: zero mean at the variance
/// ceiling. Otherwise the mean uses the exact division variance and the
/// reported variance is clamped into [v_min, v_max].
struct ExtrinsicResult {
    double v_ext = 0.0;
    bool degenerate = false;
};

ExtrinsicResult extrinsic_update(const cplx* post_mean, double v_post, const cplx* pri_mean,
                                 double v_pri, std::size_t count, cplx* ext_mean, double v_min,
                                 double v_max);

/// Module B interface: a structured MMSE denoiser of the per-tap pseudo
/// observations pri_mean = H + CN(0, pri_var[p]) per column. Implementations
/// keep their outputs (and any learning state) between calls.
class ModuleB {
  public:
    virtual ~ModuleB() = default;

    /// Domain the denoiser models its input in.
    virtual Domain domain() const = 0;

    virtual void denoise(const CMat& pri_mean, const std::vector<double>& pri_var) = 0;

    const CMat& post_mean() const { return post_mean_; }
    const std::vector<double>& post_var() const { return post_var_; }

    /// Per-tap prior second moment used to seed v_A^pri.
    virtual std::vector<double> prior_power(std::size_t p_taps) const = 0;

    /// One parameter-learning step from the stats of the last denoise call.
    /// No-op unless the implementation was constructed with learning enabled.
    virtual void em_update() {}

    /// True when em_update actually learns (drives trajectory recording).
    virtual bool learning() const { return false; }

    /// True for the diagnostic pass-through denoiser; state evolution treats
    /// its extrinsic error as exactly the input variance.
    virtual bool passthrough() const { return false; }

    /// Current parameters for result records.
    virtual nlohmann::json params_json() const { return nlohmann::json::object(); }

  protected:
    CMat post_mean_;
    std::vector<double> post_var_;
};

/// Pass-through Module B used in engine diagnostics and state-evolution
/// conventions: posterior equals prior.
class IdentityDenoiser final : public ModuleB {
  public:
    explicit IdentityDenoiser(Domain domain) : domain_(domain) {}
    Domain domain() const override { return domain_; }
    void denoise(const CMat& pri_mean, const std::vector<double>& pri_var) override {
        post_mean_ = pri_mean;
        post_var_ = pri_var;
    }
    std::vector<double> prior_power(std::size_t p_taps) const override {
        return std::vector<double>(p_taps, 1.0);
    }
    bool passthrough() const override { return true; }

  private:
    Domain domain_;
};

/// Baseline Module B: entry-wise i.i.d. Bernoulli-Gaussian denoising with no
/// structure across rows or taps. Optionally learns (pi, sigma2) per tap with
/// the activity tied across taps.
class BgIidDenoiser final : public ModuleB {
  public:
    BgIidDenoiser(std::vector<BGPrior> prior, Domain domain, bool learn = false);

    Domain domain() const override { return domain_; }
    void denoise(const CMat& pri_mean, const std::vector<double>& pri_var) override;
    std::vector<double> prior_power(std::size_t p_taps) const override;
    void em_update() override;
    bool learning() const override { return learn_; }
    nlohmann::json params_json() const override;

    const std::vector<BGPrior>& prior() const { return prior_; }

  private:
    std::vector<BGPrior> prior_;
    Domain domain_;
    bool learn_;
    BgDenoiseResult last_;
    bool has_last_ = false;
};

/// One full turbo estimation run.
struct TrialResult {
    CMat h_hat;                ///< final Module B posterior mean
    Domain domain = Domain::AngleDelay;
    std::vector<double> nmse_trace_db;      ///< posterior-estimate NMSE per iteration
    std::vector<double> ext_nmse_trace_db;  ///< extrinsic-estimate NMSE per iteration
    double final_nmse = 0.0;                ///< linear posterior NMSE at the last iteration
    int iterations = 0;
    bool converged = false;   ///< stop_tol reached within max_iters
    bool diverged = false;    ///< non-finite values encountered; run aborted
    int degeneracies = 0;     ///< count of uninformative extrinsic fallbacks
    double wall_ms = 0.0;
    std::string diagnostic;   ///< human-readable note on aborts
    nlohmann::json learned_params;  ///< denoiser parameters after the run
    nlohmann::json param_trajectory = nlohmann::json::array();  ///< per-iteration
                                                                ///< parameters while learning
};

nlohmann::json to_json(const TrialResult& result);

/// Runs the Module A / Module B turbo iteration until the relative change of
/// the Module B posterior mean falls below stop_tol or max_iters is reached.
///
/// ops holds either one shared operator or one operator per tap. y is the
/// m-by-p observation matrix in the denoiser's domain. truth, when provided,
/// must match the denoiser's domain and enables the NMSE traces.
TrialResult run_turbo(const std::vector<SensingOperator>& ops, const CMat& y, double sigma2,
                      ModuleB& denoiser, const TurboConfig& cfg,
                      const ChannelMatrix* truth = nullptr);

}  // namespace stcs

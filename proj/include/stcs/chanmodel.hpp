#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stcs/linops.hpp"
#include "stcs/rng.hpp"
#include "stcs/types.hpp"

namespace stcs {

/// Synthetic structured channel in the angle-delay domain. Each of the first
/// l_max columns (delay taps) is active with probability gamma; an active
/// column draws a clustered angular support from a stationary two-state
/// Markov chain down the rows and fills supported entries with
/// CN(0, tap_variances[p]). Columns at or beyond l_max are zero.
struct ChannelGenSpec {
    std::size_t n = 256;      ///< angular grid size (rows)
    std::size_t p_taps = 32;  ///< number of columns (delay taps / frequency bins)
    std::size_t l_max = 16;   ///< maximum delay spread; columns >= l_max are zero
    double p10 = 1.0 / 240.0;  ///< P(s_n = 1 | s_{n-1} = 0), cluster entry rate
    double p01 = 1.0 / 16.0;   ///< P(s_n = 0 | s_{n-1} = 1), cluster exit rate
    double gamma = 1.0;        ///< per-column activity probability
    std::vector<double> tap_variances;  ///< per-column slab variance; empty = all 1.0
    std::uint64_t seed = 0;

    double tap_variance(std::size_t p) const {
        return tap_variances.empty() ? 1.0 : tap_variances.at(p);
    }
};

void validate(const ChannelGenSpec& spec);

/// Stationary activity of the support chain: P(s = 1) = (1 + p01/p10)^{-1}.
double chain_stationary_activity(double p10, double p01);

/// Expected squared Frobenius norm per entry, E||H||_F^2 / (N P), in closed
/// form from the generator parameters. Invariant under the domain transform.
double expected_entry_power(const ChannelGenSpec& spec);

/// Samples a length-n support chain: s_1 ~ Bernoulli(lambda0), then
/// transitions with entry rate p10 and exit rate p01.
std::vector<std::uint8_t> sample_support_chain(std::size_t n, double lambda0, double p10,
                                               double p01, Rng& rng);

/// Draws one channel realization in the angle-delay domain. Draw order per
/// active-candidate column: activity gate, support chain, then slab values on
/// the support; this order is part of the determinism contract.
ChannelMatrix generate_channel(const ChannelGenSpec& spec, Rng& rng);

/// Convenience overload seeding a fresh stream from spec.seed.
ChannelMatrix generate_channel(const ChannelGenSpec& spec);

/// Right-multiplies each row by the symmetric unitary P-point DFT (delay ->
/// frequency) or its conjugate inverse (frequency -> delay). Exact inverses
/// of each other and norm-preserving.
CMat rows_to_frequency(const CMat& delay);
CMat rows_to_delay(const CMat& freq);

/// Domain-tagged wrappers; throw if the input is already in the target domain.
ChannelMatrix delay_to_freq(const ChannelMatrix& h);
ChannelMatrix freq_to_delay(const ChannelMatrix& h);

/// Y = A H + W with W i.i.d. CN(0, sigma2), drawn column-major.
/// H is taken in whatever domain it is supplied; the observation inherits it.
CMat observe(const SensingOperator& op, const CMat& h, double sigma2, Rng& rng);

/// Text container: header "rows cols domain", then one line per row with
/// re,im pairs for each column. Round-trips through load_matrix_text.
void save_matrix_text(std::ostream& out, const CMat& m, Domain domain);
void save_matrix_text(const std::string& path, const CMat& m, Domain domain);
std::pair<CMat, Domain> load_matrix_text(std::istream& in);
std::pair<CMat, Domain> load_matrix_text(const std::string& path);

/// Binary container: 16-byte magic, u32 rows/cols/domain/reserved, then
/// row-major little-endian float64 re,im pairs.
void save_matrix_binary(const std::string& path, const CMat& m, Domain domain);
std::pair<CMat, Domain> load_matrix_binary(const std::string& path);

}  // namespace stcs

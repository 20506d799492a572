#include "stcs/chanmodel.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "stcs/fft.hpp"

namespace stcs {

void validate(const ChannelGenSpec& spec) {
    if (spec.n == 0 || spec.p_taps == 0) throw std::invalid_argument("channel spec: empty dimensions");
    if (spec.l_max > spec.p_taps) throw std::invalid_argument("channel spec: l_max must be <= p_taps");
    if (spec.p10 <= 0.0 || spec.p10 > 1.0 || spec.p01 <= 0.0 || spec.p01 > 1.0) {
        throw std::invalid_argument("channel spec: transition probabilities must lie in (0, 1]");
    }
    if (spec.gamma < 0.0 || spec.gamma > 1.0) throw std::invalid_argument("channel spec: gamma must lie in [0, 1]");
    if (!spec.tap_variances.empty() && spec.tap_variances.size() != spec.p_taps) {
        throw std::invalid_argument("channel spec: tap_variances must be empty or sized p_taps");
    }
    for (double v : spec.tap_variances) {
        if (v < 0.0) throw std::invalid_argument("channel spec: negative tap variance");
    }
}

double chain_stationary_activity(double p10, double p01) { return 1.0 / (1.0 + p01 / p10); }

double expected_entry_power(const ChannelGenSpec& spec) {
    const double lambda = chain_stationary_activity(spec.p10, spec.p01);
    double total = 0.0;
    for (std::size_t p = 0; p < spec.l_max; ++p) total += spec.gamma * lambda * spec.tap_variance(p);
    return total / static_cast<double>(spec.p_taps);
}

namespace {

inline double draw_uniform(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

std::vector<std::uint8_t> sample_support_chain(std::size_t n, double lambda0, double p10,
                                               double p01, Rng& rng) {
    std::vector<std::uint8_t> s(n);
    if (n == 0) return s;
    s[0] = draw_uniform(rng) < lambda0 ? 1 : 0;
    for (std::size_t i = 1; i < n; ++i) {
        const double p_on = s[i - 1] ? 1.0 - p01 : p10;
        s[i] = draw_uniform(rng) < p_on ? 1 : 0;
    }
    return s;
}

ChannelMatrix generate_channel(const ChannelGenSpec& spec, Rng& rng) {
    validate(spec);
    const double lambda = chain_stationary_activity(spec.p10, spec.p01);
    ChannelMatrix h;
    h.domain = Domain::AngleDelay;
    h.values = CMat(spec.n, spec.p_taps);
    for (std::size_t p = 0; p < spec.l_max; ++p) {
        const bool active = draw_uniform(rng) < spec.gamma;
        if (!active) continue;
        const auto support = sample_support_chain(spec.n, lambda, spec.p10, spec.p01, rng);
        const double var = spec.tap_variance(p);
        cplx* col = h.values.col(p);
        for (std::size_t i = 0; i < spec.n; ++i) {
            if (support[i]) col[i] = draw_cgauss(rng, var);
        }
    }
    return h;
}

ChannelMatrix generate_channel(const ChannelGenSpec& spec) {
    Rng rng(spec.seed);
    return generate_channel(spec, rng);
}

namespace {

CMat transform_rows(const CMat& m, FftDirection dir) {
    CMat out(m.rows, m.cols);
    CVec row(m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t p = 0; p < m.cols; ++p) row[p] = m(i, p);
        dft_inplace(row.data(), row.size(), dir);
        for (std::size_t p = 0; p < m.cols; ++p) out(i, p) = row[p];
    }
    return out;
}

}  // namespace

CMat rows_to_frequency(const CMat& delay) { return transform_rows(delay, FftDirection::Forward); }

CMat rows_to_delay(const CMat& freq) { return transform_rows(freq, FftDirection::Inverse); }

ChannelMatrix delay_to_freq(const ChannelMatrix& h) {
    if (h.domain != Domain::AngleDelay) {
        throw std::invalid_argument("delay_to_freq: input must be in the angle-delay domain");
    }
    return ChannelMatrix{rows_to_frequency(h.values), Domain::AngleFrequency};
}

ChannelMatrix freq_to_delay(const ChannelMatrix& h) {
    if (h.domain != Domain::AngleFrequency) {
        throw std::invalid_argument("freq_to_delay: input must be in the angle-frequency domain");
    }
    return ChannelMatrix{rows_to_delay(h.values), Domain::AngleDelay};
}

CMat observe(const SensingOperator& op, const CMat& h, double sigma2, Rng& rng) {
    if (sigma2 < 0.0) throw std::invalid_argument("observe: negative noise variance");
    CMat y = apply_forward(op, h);
    if (sigma2 > 0.0) {
        for (cplx& v : y.data) v += draw_cgauss(rng, sigma2);
    }
    return y;
}

void save_matrix_text(std::ostream& out, const CMat& m, Domain domain) {
    out << m.rows << ' ' << m.cols << ' ' << domain_name(domain) << '\n';
    char buf[64];
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t p = 0; p < m.cols; ++p) {
            const cplx v = m(i, p);
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g", v.real(), v.imag());
            if (p != 0) out << ',';
            out << buf;
        }
        out << '\n';
    }
}

void save_matrix_text(const std::string& path, const CMat& m, Domain domain) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    save_matrix_text(out, m, domain);
}

std::pair<CMat, Domain> load_matrix_text(std::istream& in) {
    std::size_t rows = 0, cols = 0;
    std::string domain_str;
    if (!(in >> rows >> cols >> domain_str)) {
        throw std::invalid_argument("matrix text: malformed header");
    }
    const Domain domain = domain_from_name(domain_str);
    std::string rest;
    std::getline(in, rest);
    CMat m(rows, cols);
    std::string line;
    for (std::size_t i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw std::invalid_argument("matrix text: truncated body");
        std::stringstream ss(line);
        std::string item;
        for (std::size_t p = 0; p < cols; ++p) {
            double re = 0.0, im = 0.0;
            if (!std::getline(ss, item, ',')) throw std::invalid_argument("matrix text: short row");
            re = std::stod(item);
            if (!std::getline(ss, item, ',')) throw std::invalid_argument("matrix text: short row");
            im = std::stod(item);
            m(i, p) = cplx{re, im};
        }
    }
    return {std::move(m), domain};
}

std::pair<CMat, Domain> load_matrix_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return load_matrix_text(in);
}

namespace {

constexpr char kBinaryMagic[16] = {'S', 'T', 'C', 'S', '-', 'C', 'O', 'M',
                                   'P', 'L', 'E', 'X', '-', 'V', '1', '\0'};

}  // namespace

void save_matrix_binary(const std::string& path, const CMat& m, Domain domain) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(kBinaryMagic, sizeof(kBinaryMagic));
    const std::uint32_t header[4] = {static_cast<std::uint32_t>(m.rows),
                                     static_cast<std::uint32_t>(m.cols),
                                     static_cast<std::uint32_t>(domain == Domain::AngleDelay ? 1 : 0),
                                     0u};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    std::vector<double> row(2 * m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t p = 0; p < m.cols; ++p) {
            row[2 * p] = m(i, p).real();
            row[2 * p + 1] = m(i, p).imag();
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::pair<CMat, Domain> load_matrix_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    char magic[16];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kBinaryMagic, sizeof(magic)) != 0) {
        throw std::invalid_argument("matrix binary: bad magic in " + path);
    }
    std::uint32_t header[4];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in) throw std::invalid_argument("matrix binary: truncated header in " + path);
    const std::size_t rows = header[0], cols = header[1];
    const Domain domain = header[2] == 1 ? Domain::AngleDelay : Domain::AngleFrequency;
    CMat m(rows, cols);
    std::vector<double> row(2 * cols);
    for (std::size_t i = 0; i < rows; ++i) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(double)));
        if (!in) throw std::invalid_argument("matrix binary: truncated body in " + path);
        for (std::size_t p = 0; p < cols; ++p) m(i, p) = cplx{row[2 * p], row[2 * p + 1]};
    }
    return {std::move(m), domain};
}

}  // namespace stcs

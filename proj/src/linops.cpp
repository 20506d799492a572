#include "stcs/linops.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "stcs/rng.hpp"

namespace stcs {

std::string sensing_kind_name(SensingKind kind) {
    return kind == SensingKind::DftRp ? "dft_rp" : "dft";
}

SensingKind sensing_kind_from_name(const std::string& name) {
    if (name == "dft_rp") return SensingKind::DftRp;
    if (name == "dft") return SensingKind::Dft;
    throw std::invalid_argument("unknown sensing kind: " + name);
}

SensingOperator make_sensing_operator(std::size_t n, std::size_t m, SensingKind kind,
                                      std::uint64_t seed) {
    if (n == 0 || m == 0 || m > n) {
        throw std::invalid_argument("make_sensing_operator: need 1 <= m <= n");
    }
    SensingOperator op;
    op.n = n;
    op.m = m;
    op.kind = kind;
    op.seed = seed;

    Rng rng(seed);
    // Row selection: random m-subset, kept in shuffled order. Drawn first so
    // the selected rows match across kinds for the same seed.
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    std::shuffle(idx.begin(), idx.end(), rng);
    op.row_selection.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m));

    if (kind == SensingKind::DftRp) {
        std::iota(idx.begin(), idx.end(), 0u);
        std::shuffle(idx.begin(), idx.end(), rng);
        op.permutation = idx;
    } else {
        op.permutation.resize(n);
        std::iota(op.permutation.begin(), op.permutation.end(), 0u);
    }
    return op;
}

void apply_forward(const SensingOperator& op, const cplx* x, cplx* y, CVec& scratch) {
    scratch.resize(op.n);
    for (std::size_t i = 0; i < op.n; ++i) scratch[i] = x[op.permutation[i]];
    dft_inplace(scratch.data(), op.n, FftDirection::Forward);
    for (std::size_t j = 0; j < op.m; ++j) y[j] = scratch[op.row_selection[j]];
}

CVec apply_forward(const SensingOperator& op, const CVec& x) {
    if (x.size() != op.n) throw std::invalid_argument("apply_forward: x must have length n");
    CVec y(op.m), scratch;
    apply_forward(op, x.data(), y.data(), scratch);
    return y;
}

void apply_adjoint(const SensingOperator& op, const cplx* y, cplx* x, CVec& scratch) {
    scratch.assign(op.n, cplx{0.0, 0.0});
    for (std::size_t j = 0; j < op.m; ++j) scratch[op.row_selection[j]] = y[j];
    dft_inplace(scratch.data(), op.n, FftDirection::Inverse);
    for (std::size_t i = 0; i < op.n; ++i) x[op.permutation[i]] = scratch[i];
}

CVec apply_adjoint(const SensingOperator& op, const CVec& y) {
    if (y.size() != op.m) throw std::invalid_argument("apply_adjoint: y must have length m");
    CVec x(op.n), scratch;
    apply_adjoint(op, y.data(), x.data(), scratch);
    return x;
}

CMat apply_forward(const SensingOperator& op, const CMat& x) {
    if (x.rows != op.n) throw std::invalid_argument("apply_forward: matrix rows must equal n");
    CMat y(op.m, x.cols);
    CVec scratch;
    for (std::size_t p = 0; p < x.cols; ++p) apply_forward(op, x.col(p), y.col(p), scratch);
    return y;
}

CMat apply_adjoint(const SensingOperator& op, const CMat& y) {
    if (y.rows != op.m) throw std::invalid_argument("apply_adjoint: matrix rows must equal m");
    CMat x(op.n, y.cols);
    CVec scratch;
    for (std::size_t p = 0; p < y.cols; ++p) apply_adjoint(op, y.col(p), x.col(p), scratch);
    return x;
}

namespace {

void write_index_list(std::ostream& out, const char* key,
                      const std::vector<std::uint32_t>& values) {
    out << key << '=';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i != 0) out << ',';
        out << values[i];
    }
    out << '\n';
}

std::vector<std::uint32_t> parse_index_list(const std::string& text) {
    std::vector<std::uint32_t> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        values.push_back(static_cast<std::uint32_t>(std::stoul(item)));
    }
    return values;
}

}  // namespace

void serialize(const SensingOperator& op, std::ostream& out) {
    out << "sensing_operator v1\n";
    out << "n=" << op.n << '\n';
    out << "m=" << op.m << '\n';
    out << "kind=" << sensing_kind_name(op.kind) << '\n';
    out << "seed=" << op.seed << '\n';
    write_index_list(out, "row_selection", op.row_selection);
    write_index_list(out, "permutation", op.permutation);
}

std::string serialize(const SensingOperator& op) {
    std::ostringstream out;
    serialize(op, out);
    return out.str();
}

SensingOperator parse_operator(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "sensing_operator v1") {
        throw std::invalid_argument("parse_operator: missing 'sensing_operator v1' header");
    }
    SensingOperator op;
    bool saw_n = false, saw_m = false, saw_rows = false, saw_perm = false;
    while (std::getline(in, line)) {
        if (line.empty()) break;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("parse_operator: malformed line: " + line);
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "n") {
            op.n = std::stoul(value);
            saw_n = true;
        } else if (key == "m") {
            op.m = std::stoul(value);
            saw_m = true;
        } else if (key == "kind") {
            op.kind = sensing_kind_from_name(value);
        } else if (key == "seed") {
            op.seed = std::stoull(value);
        } else if (key == "row_selection") {
            op.row_selection = parse_index_list(value);
            saw_rows = true;
        } else if (key == "permutation") {
            op.permutation = parse_index_list(value);
            saw_perm = true;
        } else {
            throw std::invalid_argument("parse_operator: unknown key: " + key);
        }
    }
    if (!saw_n || !saw_m || !saw_rows || !saw_perm) {
        throw std::invalid_argument("parse_operator: incomplete descriptor");
    }
    validate(op);
    return op;
}

SensingOperator parse_operator(const std::string& text) {
    std::istringstream in(text);
    return parse_operator(in);
}

void validate(const SensingOperator& op) {
    if (op.n == 0 || op.m == 0 || op.m > op.n) {
        throw std::invalid_argument("sensing operator: need 1 <= m <= n");
    }
    if (op.row_selection.size() != op.m) {
        throw std::invalid_argument("sensing operator: row_selection size != m");
    }
    if (op.permutation.size() != op.n) {
        throw std::invalid_argument("sensing operator: permutation size != n");
    }
    std::vector<bool> seen(op.n, false);
    for (std::uint32_t r : op.row_selection) {
        if (r >= op.n || seen[r]) {
            throw std::invalid_argument("sensing operator: row_selection not a distinct subset of [0, n)");
        }
        seen[r] = true;
    }
    seen.assign(op.n, false);
    for (std::uint32_t i : op.permutation) {
        if (i >= op.n || seen[i]) {
            throw std::invalid_argument("sensing operator: permutation is not a bijection");
        }
        seen[i] = true;
    }
}

}  // namespace stcs

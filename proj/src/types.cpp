#include "stcs/types.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace stcs {

std::string domain_name(Domain d) {
    return d == Domain::AngleFrequency ? "angle_frequency" : "angle_delay";
}

Domain domain_from_name(const std::string& name) {
    if (name == "angle_frequency") return Domain::AngleFrequency;
    if (name == "angle_delay") return Domain::AngleDelay;
    throw std::invalid_argument("unknown domain name: " + name);
}

double fro_norm_sq(const CVec& v) {
    double acc = 0.0;
    for (const cplx& x : v) acc += std::norm(x);
    return acc;
}

double fro_norm_sq(const CMat& m) { return fro_norm_sq(m.data); }

bool all_finite(const CVec& v) {
    for (const cplx& x : v) {
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
    }
    return true;
}

bool all_finite(const CMat& m) { return all_finite(m.data); }

double nmse(const CMat& estimate, const CMat& reference) {
    if (estimate.rows != reference.rows || estimate.cols != reference.cols) {
        throw std::invalid_argument("nmse: shape mismatch");
    }
    const double ref = fro_norm_sq(reference);
    if (ref == 0.0) throw std::invalid_argument("nmse: zero reference");
    double err = 0.0;
    for (std::size_t i = 0; i < estimate.data.size(); ++i) {
        err += std::norm(estimate.data[i] - reference.data[i]);
    }
    return err / ref;
}

double to_db(double ratio) {
    if (ratio == 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(ratio);
}

std::string db_to_string(double db) {
    if (std::isinf(db) && db < 0) return "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", db);
    return buf;
}

}  // namespace stcs

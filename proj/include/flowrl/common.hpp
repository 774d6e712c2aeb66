#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowrl {

using Vec = std::vector<double>;

// Error taxonomy. ConfigError and InputError are caller mistakes (CLI maps
// them to exit code 2), the rest are runtime failures (exit code 1).
struct FlowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : FlowError {
    using FlowError::FlowError;
};
struct InputError : FlowError {
    using FlowError::FlowError;
};
struct NumericError : FlowError {
    using FlowError::FlowError;
};
struct TrainingError : FlowError {
    using FlowError::FlowError;
};
struct CompatibilityError : FlowError {
    using FlowError::FlowError;
};

inline bool all_finite(const Vec& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline void require_finite(const Vec& v, const char* what) {
    if (!all_finite(v)) throw InputError(std::string(what) + ": non-finite entry");
}

inline void require_dim(const Vec& v, std::size_t d, const char* what) {
    if (v.size() != d) {
        throw InputError(std::string(what) + ": expected dimension " + std::to_string(d) +
                         ", got " + std::to_string(v.size()));
    }
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(const Vec& a) { return dot(a, a); }

inline double squared_distance(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace flowrl

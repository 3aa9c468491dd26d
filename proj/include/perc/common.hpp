#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace perc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Error taxonomy shared across the library.  Each maps to a distinct
// failure mode callers may want to branch on.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SamplingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A window does not cover the region an event predicate needs.
struct CoverageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Measure values may be exact (lo == hi) or certified intervals.
struct MassInterval {
    double lo = 0.0;
    double hi = 0.0;

    bool exact() const { return lo == hi; }
    double mid() const { return 0.5 * (lo + hi); }
};

} // namespace perc

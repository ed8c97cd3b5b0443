#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace nsketch {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Error hierarchy. Everything thrown by the library derives from Error so
// callers can catch one type at the CLI boundary.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class InvalidSpec : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class RankDeficientError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class LineSearchError : public Error {
public:
    using Error::Error;
};

/// splitmix64 finalizer. Used to turn (seed, counter) pairs into
/// well-separated 64-bit seeds for the per-iteration sketches.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for the counter-th draw of a stream identified by `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter) noexcept {
    return seed ^ mix64(counter + 1);
}

inline bool is_power_of_two(Index n) noexcept { return n > 0 && (n & (n - 1)) == 0; }

inline Index next_power_of_two(Index n) noexcept {
    Index p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Ceiling that ignores floating-point fuzz just above an integer, so that
/// e.g. 4 * log(e) gives 4 and not 5.
inline double tolerant_ceil(double x) noexcept {
    const double r = std::round(x);
    if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return r;
    return std::ceil(x);
}

}  // namespace nsketch

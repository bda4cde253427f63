#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace specden {

// Error taxonomy shared by all modules. The CLI maps these onto exit codes:
// invalid input -> 2, numeric failure -> 3, resource limit -> 4.
class InvalidInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericFailureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ResourceLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when a requested Ritz pair has not converged to tolerance.
class ConvergenceError : public NumericFailureError {
public:
    using NumericFailureError::NumericFailureError;
};

/// Deterministic random stream (splitmix64 core, Box-Muller normals).
/// All randomness in the library flows through this so that identical seeds
/// give bit-identical results independent of the standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; generates pairs, caches the second.
    double gaussian();

    /// Derive an independent stream seed, e.g. one per probe or per trial.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// Shortest decimal form that round-trips a double (17 significant digits).
std::string format_double(double x);

} // namespace specden

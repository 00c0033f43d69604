#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcgen {

/// Bad or malformed input data (files, manifests, user-supplied geometry).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure (non-finite values, solver non-termination).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Deterministic random stream. All conversions from raw 64-bit draws are
/// spelled out here so two runs with the same seed agree byte for byte.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; generates pairs, caches the second.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    /// Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
        const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
        return lo + static_cast<int>(eng_() % span);
    }

    /// Derived stream for per-item work; keeps results independent of
    /// the order items are processed in.
    Rng derive(std::uint64_t index) const {
        std::uint64_t s = seed_mix_ ^ (0x9e3779b97f4a7c15ULL * (index + 1));
        return Rng(s);
    }

    void set_mix(std::uint64_t m) { seed_mix_ = m; }

private:
    std::mt19937_64 eng_;
    std::uint64_t seed_mix_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Correctly rounded sum of doubles (Shewchuk expansion, as in fsum).
/// The result is independent of the order of the inputs, which is what
/// makes set pooling bit-identical under permutation.
double exact_sum(std::span<const double> xs);

/// Mean via exact_sum.
double exact_mean(std::span<const double> xs);

/// Worker count: PCGEN_THREADS if set and valid, else 1.
int thread_count();

bool all_finite(std::span<const double> xs);

}  // namespace pcgen

#include "pcgen/common.hpp"

#include <cmath>
#include <cstdlib>

namespace pcgen {

double exact_sum(std::span<const double> xs) {
    // Grow-expansion of non-overlapping partials; the final left-to-right
    // collapse is exact because the partials stay non-overlapping.
    std::vector<double> partials;
    for (double x : xs) {
        std::size_t used = 0;
        for (double y : partials) {
            if (std::abs(x) < std::abs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials[used++] = lo;
            x = hi;
        }
        partials.resize(used);
        partials.push_back(x);
    }
    double total = 0.0;
    for (double p : partials) total += p;
    return total;
}

double exact_mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("exact_mean: empty input");
    return exact_sum(xs) / static_cast<double>(xs.size());
}

int thread_count() {
    const char* env = std::getenv("PCGEN_THREADS");
    if (env == nullptr) return 1;
    const int n = std::atoi(env);
    return n > 0 ? n : 1;
}

bool all_finite(std::span<const double> xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace pcgen

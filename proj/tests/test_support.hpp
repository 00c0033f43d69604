#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "pcgen/common.hpp"
#include "pcgen/diffcore.hpp"

namespace pcgen::test {

inline bool close_rel(double a, double b, double tol = 1e-4) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline bool close_abs(double a, double b, double tol) { return std::abs(a - b) <= tol; }

/// Central finite difference of eval() with respect to *slot.
template <typename F>
double central_diff(F&& eval, double* slot, double h = 1e-4) {
    const double orig = *slot;
    *slot = orig + h;
    const double fp = eval();
    *slot = orig - h;
    const double fm = eval();
    *slot = orig;
    return (fp - fm) / (2.0 * h);
}

inline diff::Matrix random_matrix(int rows, int cols, Rng& rng, double lo = -2.0, double hi = 2.0) {
    diff::Matrix m(rows, cols);
    for (double& x : m.values()) x = rng.uniform(lo, hi);
    return m;
}

/// Random values bounded away from the kinks of abs/relu/max ties.
inline diff::Matrix random_smooth_matrix(int rows, int cols, Rng& rng, double margin = 0.05) {
    diff::Matrix m(rows, cols);
    for (double& x : m.values()) {
        do {
            x = rng.uniform(-2.0, 2.0);
        } while (std::abs(x) < margin);
    }
    // separate column values so max pooling has no near-ties
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i)
            for (int k = 0; k < i; ++k)
                if (std::abs(m(i, j) - m(k, j)) < margin) m(i, j) += 3.0 * margin;
    return m;
}

inline std::vector<int> random_permutation(int n, Rng& rng) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i)
        std::swap(p[static_cast<std::size_t>(i)],
                  p[static_cast<std::size_t>(rng.uniform_int(0, i))]);
    return p;
}

inline diff::Matrix permute_rows(const diff::Matrix& m, const std::vector<int>& perm) {
    diff::Matrix out(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) out(i, j) = m(perm[static_cast<std::size_t>(i)], j);
    return out;
}

inline bool bit_identical(const diff::Matrix& a, const diff::Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

/// Scratch directory under the build tree, fresh per name.
inline std::string scratch_dir(const std::string& name) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("pcgen_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

}  // namespace pcgen::test

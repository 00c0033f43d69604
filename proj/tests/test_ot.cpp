#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcgen/ot.hpp"
#include "test_support.hpp"

using namespace pcgen;
using diff::Matrix;
using test::close_abs;

namespace {

/// Exhaustive minimum over all bijections; the independent oracle for the
/// solvers (n <= 8).
double brute_force_min_cost(const Cloud& X, const Cloud& Y, ot::Metric metric = ot::Metric::L1) {
    const int n = X.rows();
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += ot::cost_rows(X, i, Y, perm[static_cast<std::size_t>(i)], metric);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

Cloud cloud_1d(std::initializer_list<double> xs) {
    Cloud c(static_cast<int>(xs.size()), 1);
    int i = 0;
    for (double x : xs) c(i++, 0) = x;
    return c;
}

bool is_bijection(const std::vector<int>& pi) {
    std::vector<char> seen(pi.size(), 0);
    for (int t : pi) {
        if (t < 0 || t >= static_cast<int>(pi.size()) || seen[static_cast<std::size_t>(t)])
            return false;
        seen[static_cast<std::size_t>(t)] = 1;
    }
    return true;
}

}  // namespace

TEST_CASE("ground cost basics") {
    const std::vector<double> zero2 = {0.0, 0.0};
    CHECK(ot::cost(zero2, zero2) == 0.0);
    const std::vector<double> a = {1.0, 2.0}, b = {4.0, 6.0};
    CHECK(ot::cost(a, b, ot::Metric::L1) == 7.0);
    const std::vector<double> c = {0.0, 0.0}, d = {3.0, 4.0};
    CHECK(ot::cost(c, d, ot::Metric::L2) == doctest::Approx(5.0).epsilon(1e-15));
    const std::vector<double> e = {1.0};
    CHECK_THROWS_AS(ot::cost(a, e), std::invalid_argument);
}

TEST_CASE("auction on identical well-separated sets returns zero cost") {
    Cloud x(16, 2);
    for (int i = 0; i < 16; ++i) {
        x(i, 0) = 2.0 * std::cos(i * 0.3926990816987241);
        x(i, 1) = 2.0 * std::sin(i * 0.3926990816987241);
    }
    const auto cfg = ot::auction_config_rel(x, x, 0.01);
    const auto asg = ot::auction_assign(x, x, cfg);
    CHECK(asg.total_cost == 0.0);
    CHECK(ot::w_upper(x, x, cfg) == 0.0);
}

TEST_CASE("1D pair {0,1} vs {2,3} has average cost 2") {
    const Cloud x = cloud_1d({0.0, 1.0});
    const Cloud y = cloud_1d({2.0, 3.0});
    CHECK(brute_force_min_cost(x, y) == 4.0);  // both bijections tie
    const auto asg = ot::auction_assign(x, y, ot::auction_config_rel(x, y, 0.01));
    CHECK(is_bijection(asg.target_of));
    CHECK(asg.average_cost == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("single-pair clouds") {
    const Cloud x = cloud_1d({0.0});
    const Cloud y = cloud_1d({3.0});
    const auto cfg = ot::auction_config_rel(x, y, 0.01);
    CHECK(ot::w_upper(x, y, cfg) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("hungarian matches the exhaustive oracle") {
    Rng rng(2024);
    for (int rep = 0; rep < 120; ++rep) {
        const int n = rng.uniform_int(1, 7);
        const Cloud x = test::random_matrix(n, rng.uniform_int(1, 3), rng, 0.0, 1.0);
        const Cloud y = test::random_matrix(n, x.cols(), rng, 0.0, 1.0);
        const auto h = ot::hungarian_assign(x, y);
        CHECK(is_bijection(h.target_of));
        CHECK(close_abs(h.total_cost, brute_force_min_cost(x, y), 1e-10));
    }
}

TEST_CASE("hungarian on the 2x2 permutation matrix picks the diagonal") {
    const auto asg = ot::hungarian_assign_matrix(Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}}));
    CHECK(asg.target_of[0] == 0);
    CHECK(asg.target_of[1] == 1);
    CHECK(asg.total_cost == 0.0);
}

TEST_CASE("hungarian guards") {
    CHECK_THROWS_AS(ot::hungarian_assign_matrix(Matrix(2, 3)), std::invalid_argument);
    CHECK_THROWS_AS(ot::hungarian_assign_matrix(Matrix(513, 513)), std::invalid_argument);
    Cloud a(2, 2), b(3, 2);
    CHECK_THROWS_AS(ot::hungarian_assign(a, b), std::invalid_argument);
    CHECK_THROWS_AS(ot::auction_assign(a, b, ot::AuctionConfig::single_phase(0.1)),
                    std::invalid_argument);
}

TEST_CASE("auction vs hungarian over random instances") {
    Rng rng(99);
    for (int rep = 0; rep < 60; ++rep) {
        const int n = rng.uniform_int(4, 64);
        const Cloud x = test::random_matrix(n, 3, rng, 0.0, 1.0);
        const Cloud y = test::random_matrix(n, 3, rng, 0.0, 1.0);
        const auto cfg = ot::auction_config_rel(x, y, 0.01);
        const auto a = ot::auction_assign(x, y, cfg);
        const auto h = ot::hungarian_assign(x, y);
        CHECK(is_bijection(a.target_of));
        // additive auction guarantee, and never below the optimum
        CHECK(a.total_cost >= h.total_cost);
        CHECK(a.total_cost <= h.total_cost + a.gap_bound + 1e-9);
        CHECK(a.total_cost <= 1.01 * h.total_cost + 1e-12);
        // scaling phases never regress by more than their own slack
        for (std::size_t ph = 1; ph < a.phase_costs.size(); ++ph)
            CHECK(a.phase_costs[ph] <=
                  a.phase_costs[ph - 1] + n * a.phase_eps[ph] + 1e-9);
    }
}

TEST_CASE("w_upper is symmetric within the auction slack") {
    Rng rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = rng.uniform_int(4, 40);
        const Cloud x = test::random_matrix(n, 2, rng, 0.0, 1.0);
        const Cloud y = test::random_matrix(n, 2, rng, 0.0, 1.0);
        const auto cfg = ot::auction_config_rel(x, y, 0.01);
        const double ab = ot::w_upper(x, y, cfg);
        const double ba = ot::w_upper(y, x, cfg);
        CHECK(close_abs(ab, ba, cfg.eps_final * n));
    }
}

TEST_CASE("auction reports non-termination with diagnostics") {
    Rng rng(1);
    const Cloud x = test::random_matrix(12, 2, rng, 0.0, 1.0);
    const Cloud y = test::random_matrix(12, 2, rng, 0.0, 1.0);
    ot::AuctionConfig cfg = ot::auction_config_rel(x, y, 0.001);
    cfg.max_rounds = 1;
    CHECK_THROWS_WITH_AS(ot::auction_assign(x, y, cfg), doctest::Contains("rounds"), NumericError);
}

TEST_CASE("auction config validation") {
    ot::AuctionConfig cfg;
    cfg.eps_final = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ot::AuctionConfig{};
    cfg.scale_factor = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("L2 metric is honored end to end") {
    const Cloud x = Matrix::from_rows({{0.0, 0.0}, {1.0, 0.0}});
    const Cloud y = Matrix::from_rows({{3.0, 4.0}, {1.0, 0.0}});
    const auto h = ot::hungarian_assign(x, y, ot::Metric::L2);
    CHECK(h.total_cost == doctest::Approx(5.0).epsilon(1e-12));
    const auto a = ot::auction_assign(x, y, ot::auction_config_rel(x, y, 0.01, ot::Metric::L2),
                                      ot::Metric::L2);
    CHECK(a.total_cost == doctest::Approx(5.0).epsilon(1e-9));
}

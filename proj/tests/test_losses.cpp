#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pcgen/losses.hpp"
#include "pcgen/ot.hpp"
#include "test_support.hpp"

using namespace pcgen;
using diff::Matrix;
using nets::Activation;

TEST_CASE("sandwich_loss endpoints and arithmetic") {
    CHECK(losses::sandwich_loss(3.25, -7.0, 0.0) == 3.25);
    CHECK(losses::sandwich_loss(3.25, -7.0, 1.0) == -7.0);
    // the default 1:20 mixture weights the lower bound by 1/21
    CHECK(losses::sandwich_loss(21.0, 0.0, 1.0 / 21.0) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK_THROWS_AS(losses::sandwich_loss(1.0, 1.0, -0.01), std::invalid_argument);
    CHECK_THROWS_AS(losses::sandwich_loss(1.0, 1.0, 1.01), std::invalid_argument);
}

TEST_CASE("sandwich_loss is linear and monotone in both arguments") {
    Rng rng(4);
    for (int rep = 0; rep < 100; ++rep) {
        const double lam = rng.uniform();
        const double wu = rng.uniform(-5.0, 5.0), wl = rng.uniform(-5.0, 5.0);
        const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
        const double lhs = losses::sandwich_loss(wu + a, wl + b, lam);
        const double rhs = losses::sandwich_loss(wu, wl, lam) + (1.0 - lam) * a + lam * b;
        CHECK(test::close_abs(lhs, rhs, 1e-12));
        CHECK(losses::sandwich_loss(wu + 1.0, wl, lam) >= losses::sandwich_loss(wu, wl, lam));
        CHECK(losses::sandwich_loss(wu, wl + 1.0, lam) >= losses::sandwich_loss(wu, wl, lam));
    }
}

TEST_CASE("lemma1_verify on the worked example") {
    // w=1, eps1=0.2, eps2=0.4: window (1/3, 0.5)
    std::vector<double> grid;
    for (int i = 1; i <= 49; ++i) grid.push_back(i * 0.01);
    const auto res = losses::lemma1_verify(1.0, 0.2, 0.4, grid);
    CHECK(res.window_lo == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(res.window_hi == 0.5);
    CHECK(res.lambda_star > res.window_lo);
    CHECK(res.lambda_star < res.window_hi);
    CHECK(res.achieved_error < 0.2);  // beats eps1 * w, the best one-sided error bound
    CHECK(res.achieved_error < std::min(res.err_upper, res.err_lower));
    // at lambda = 0.45 the worst-case sandwich error is (1 - 2*lambda) * eps2 = 0.04
    const double err_045 = std::abs(losses::sandwich_loss(1.4, 0.6, 0.45) - 1.0);
    CHECK(err_045 == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("lemma1_verify names the violated hypothesis") {
    CHECK_THROWS_WITH_AS(losses::lemma1_verify(1.0, 0.4, 0.4), doctest::Contains("eps2 > eps1"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(losses::lemma1_verify(1.0, 0.1, 0.4), doctest::Contains("eps1 > eps2/3"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(losses::lemma1_verify(1.0, 0.0, 0.4), doctest::Contains("eps1 > 0"),
                         std::invalid_argument);
}

TEST_CASE("lemma1_verify tightens 100 random admissible instances") {
    Rng rng(17);
    for (int rep = 0; rep < 100; ++rep) {
        const double w = rng.uniform(0.1, 10.0);
        const double eps2 = rng.uniform(0.05, 0.9);
        const double eps1 = rng.uniform(eps2 / 3.0 + 1e-6, eps2 - 1e-6);
        const auto res = losses::lemma1_verify(w, eps1, eps2);
        CHECK(res.lambda_star > res.window_lo);
        CHECK(res.lambda_star < 0.5);
        CHECK(res.achieved_error < std::min(res.err_upper, res.err_lower));
        CHECK(res.achieved_error < eps1 * w);  // the lemma's bound
    }
}

TEST_CASE("w_lower_value basics") {
    Rng rng(5);
    nets::Critic critic("critic", 1, {8}, Activation::Softplus, 0.5, rng);
    const Cloud same = test::random_matrix(12, 1, rng);
    CHECK(losses::w_lower_value(critic, same, same) == 0.0);

    for (auto* p : critic.params()) p->set_value(Matrix(p->value.rows(), p->value.cols()));
    const Cloud other = test::random_matrix(9, 1, rng);
    CHECK(losses::w_lower_value(critic, same, other) == 0.0);

    CHECK_THROWS_AS(losses::w_lower_value(critic, Cloud(0, 1), other), std::invalid_argument);
}

TEST_CASE("critic_update clips, and large c with rho=0 reduces to plain ascent") {
    Rng rng(6);
    const Cloud real = test::random_matrix(32, 2, rng, -1.0, 1.0);
    const Cloud fake = test::random_matrix(32, 2, rng, -1.0, 1.0);

    SUBCASE("post-step weights always inside the clip range") {
        nets::Critic critic("critic", 2, {8}, Activation::Softplus, 0.05, rng);
        diff::Adam opt(critic.params(), {1e-2, 0.5, 0.9, 1e-8});
        losses::LowerBoundConfig cfg;
        cfg.clip_c = 0.05;
        for (int i = 0; i < 10; ++i) {
            losses::critic_update(critic, real, fake, cfg, opt);
            CHECK(critic.max_abs_weight() <= 0.05);
        }
    }

    SUBCASE("limiting configuration") {
        Rng r1(9), r2(9);
        nets::Critic a("critic", 2, {8}, Activation::Softplus, 1e9, r1);
        nets::Critic b("critic", 2, {8}, Activation::Softplus, 1e9, r2);
        diff::Adam opt_a(a.params(), {1e-3, 0.5, 0.9, 1e-8});
        diff::Adam opt_b(b.params(), {1e-3, 0.5, 0.9, 1e-8});

        losses::LowerBoundConfig cfg;
        cfg.clip_c = 1e9;
        cfg.rho = 0.0;
        losses::critic_update(a, real, fake, cfg, opt_a);
        CHECK(cfg.alpha == 0.0);  // multiplier never moves when rho = 0

        // plain IPM ascent by hand
        diff::Tape t;
        const auto gap = t.sub(t.mean_all(b.forward(t, t.constant(real), true)),
                               t.mean_all(b.forward(t, t.constant(fake), true)));
        t.backward_scalar(gap, -1.0);
        opt_b.step();

        auto pa = a.params();
        auto pb = b.params();
        for (std::size_t i = 0; i < pa.size(); ++i)
            CHECK(test::bit_identical(pa[i]->value, pb[i]->value));
    }
}

TEST_CASE("critic objective ascends on a fixed toy pair") {
    Rng rng(31);
    Cloud real(64, 1), fake(64, 1);
    for (int i = 0; i < 64; ++i) {
        real(i, 0) = rng.normal();
        fake(i, 0) = 3.0 + rng.normal();
    }
    nets::Critic critic("critic", 1, {16}, Activation::Softplus, 0.5, rng);
    diff::Adam opt(critic.params(), {1e-3, 0.5, 0.9, 1e-8});
    losses::LowerBoundConfig cfg;

    double prev = -std::numeric_limits<double>::infinity();
    int violations = 0;
    for (int i = 0; i < 50; ++i) {
        const auto res = losses::critic_update(critic, real, fake, cfg, opt);
        if (res.objective < prev - 1e-9) ++violations;
        prev = res.objective;
    }
    CHECK(violations <= 5);
}

TEST_CASE("point masses at 0 and 3: trained lower bound approaches the true distance") {
    Rng rng(8);
    Cloud real(8, 1), fake(8, 1);
    for (int i = 0; i < 8; ++i) {
        real(i, 0) = 0.0;
        fake(i, 0) = 3.0;
    }
    // depth-1 critic: k = c, and the bound is attainable
    nets::Critic critic("critic", 1, {}, Activation::Identity, 0.5, rng);
    diff::Adam opt(critic.params(), {1e-2, 0.5, 0.9, 1e-8});
    losses::LowerBoundConfig cfg;
    for (int i = 0; i < 500; ++i) losses::critic_update(critic, real, fake, cfg, opt);

    const double value = losses::w_lower_value(critic, real, fake);
    const double k = critic.lipschitz_bound();
    CHECK(value / k <= 3.0 + 1e-12);  // Lipschitz bound: never beyond the exact distance
    CHECK(value / k >= 2.7);          // and the trained critic nearly attains it
}

TEST_CASE("clipped-critic lower bound never exceeds the exact matched cost") {
    Rng rng(40);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = rng.uniform_int(2, 64);
        const Cloud real = test::random_matrix(n, 2, rng, -1.5, 1.5);
        const Cloud fake = test::random_matrix(n, 2, rng, -1.5, 1.5);
        nets::Critic critic("critic", 2, {8}, Activation::Softplus, 0.5, rng);
        diff::Adam opt(critic.params(), {5e-3, 0.5, 0.9, 1e-8});
        losses::LowerBoundConfig cfg;
        for (int i = 0; i < 10; ++i) losses::critic_update(critic, real, fake, cfg, opt);

        const double value = losses::w_lower_value(critic, real, fake);
        const double k = critic.lipschitz_bound();
        const double exact = ot::hungarian_assign(real, fake).average_cost;
        CHECK(value / k <= exact + 1e-12);
    }
}

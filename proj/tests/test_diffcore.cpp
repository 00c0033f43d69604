#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pcgen/diffcore.hpp"
#include "test_support.hpp"

using namespace pcgen;
using diff::Matrix;
using diff::ParamTensor;
using diff::Tape;
using test::bit_identical;
using test::central_diff;
using test::close_rel;

TEST_CASE("linear layer with identity weights is the identity") {
    Rng rng(1);
    const Matrix x = test::random_matrix(5, 3, rng);
    Matrix eye(3, 3);
    for (int i = 0; i < 3; ++i) eye(i, i) = 1.0;
    ParamTensor W("W", eye), b("b", Matrix(1, 3));

    Tape t;
    const auto out = t.add_rowvec(t.matmul(t.input(x), t.param(W)), t.param(b));
    CHECK(bit_identical(t.value(out), x));
}

TEST_CASE("softplus at 0 is ln 2") {
    Tape t;
    const auto out = t.softplus(t.input(Matrix(1, 1)));
    CHECK(t.value(out)(0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("max-pool over the set axis takes columnwise maxima") {
    Tape t;
    const auto out = t.max_pool_rows(t.input(Matrix::from_rows({{1.0, 0.0}, {0.0, 2.0}})));
    CHECK(t.value(out)(0, 0) == 1.0);
    CHECK(t.value(out)(0, 1) == 2.0);
}

TEST_CASE("square gradient: f(x)=x^2 at x=3 gives dx=6") {
    Tape t;
    Matrix x(1, 1);
    x(0, 0) = 3.0;
    const auto in = t.input(x);
    const auto out = t.square(in);
    t.backward_scalar(out);
    CHECK(t.grad(in)(0, 0) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("max-pool routes gradient to the lowest index on ties") {
    Tape t;
    const auto in = t.input(Matrix::from_rows({{2.0, 1.0}, {2.0, 5.0}, {0.5, 5.0}}));
    const auto pooled = t.max_pool_rows(in);
    Matrix seed(1, 2);
    seed(0, 0) = 1.0;
    seed(0, 1) = 1.0;
    t.backward(pooled, seed);
    const Matrix& g = t.grad(in);
    CHECK(g(0, 0) == 1.0);  // tie in column 0 goes to row 0
    CHECK(g(1, 0) == 0.0);
    CHECK(g(1, 1) == 1.0);  // tie in column 1 goes to row 1
    CHECK(g(2, 1) == 0.0);
}

TEST_CASE("pooling is permutation-invariant bit for bit") {
    Rng rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        const Matrix m = test::random_matrix(rng.uniform_int(1, 40), rng.uniform_int(1, 6), rng);
        const auto perm = test::random_permutation(m.rows(), rng);
        const Matrix mp = test::permute_rows(m, perm);
        Tape ta, tb;
        CHECK(bit_identical(ta.value(ta.mean_pool_rows(ta.input(m))),
                            tb.value(tb.mean_pool_rows(tb.input(mp)))));
        Tape tc, td;
        CHECK(bit_identical(tc.value(tc.max_pool_rows(tc.input(m))),
                            td.value(td.max_pool_rows(td.input(mp)))));
    }
}

namespace {

/// Checks analytic input gradients of `build` against central differences.
template <typename Build>
void check_gradients(Matrix x, Build&& build, double tol = 1e-4) {
    Tape t;
    const auto in = t.input(x);
    const auto out = build(t, in);
    REQUIRE(t.value(out).rows() == 1);
    REQUIRE(t.value(out).cols() == 1);
    t.backward_scalar(out);
    const Matrix analytic = t.grad(in);

    auto eval = [&]() {
        Tape ft;
        return ft.value(build(ft, ft.input(x)))(0, 0);
    };
    for (int r = 0; r < x.rows(); ++r)
        for (int c = 0; c < x.cols(); ++c) {
            const double fd = central_diff(eval, &x(r, c));
            CHECK_MESSAGE(close_rel(analytic(r, c), fd, tol),
                          "entry (" << r << "," << c << "): analytic " << analytic(r, c)
                                    << " vs fd " << fd);
        }
}

}  // namespace

TEST_CASE("every primitive matches central finite differences") {
    Rng rng(42);

    SUBCASE("matmul + add_rowvec + softplus + mean_all") {
        const Matrix W = test::random_matrix(4, 3, rng);
        const Matrix b = test::random_matrix(1, 3, rng);
        check_gradients(test::random_matrix(5, 4, rng), [&](Tape& t, Tape::NodeId in) {
            return t.mean_all(t.softplus(t.add_rowvec(t.matmul(in, t.constant(W)), t.constant(b))));
        });
    }
    SUBCASE("leaky_relu + sum_all") {
        check_gradients(test::random_smooth_matrix(6, 3, rng), [&](Tape& t, Tape::NodeId in) {
            return t.sum_all(t.leaky_relu(in, 0.2));
        });
    }
    SUBCASE("abs + mean_all") {
        check_gradients(test::random_smooth_matrix(6, 3, rng), [&](Tape& t, Tape::NodeId in) {
            return t.mean_all(t.abs(in));
        });
    }
    SUBCASE("square + sub + mul") {
        const Matrix other = test::random_matrix(4, 4, rng);
        check_gradients(test::random_matrix(4, 4, rng), [&](Tape& t, Tape::NodeId in) {
            const auto d = t.sub(in, t.constant(other));
            return t.sum_all(t.mul(t.square(d), t.constant(other)));
        });
    }
    SUBCASE("max_pool_rows") {
        check_gradients(test::random_smooth_matrix(5, 4, rng), [&](Tape& t, Tape::NodeId in) {
            return t.sum_all(t.max_pool_rows(in));
        });
    }
    SUBCASE("mean_pool_rows + repeat_rows + concat_cols") {
        check_gradients(test::random_matrix(5, 3, rng), [&](Tape& t, Tape::NodeId in) {
            const auto pooled = t.mean_pool_rows(in);
            const auto wide = t.concat_cols(in, t.repeat_rows(pooled, 5));
            return t.mean_all(t.square(wide));
        });
    }
    SUBCASE("mul_scalar + affine") {
        const Matrix s = test::random_matrix(1, 1, rng);
        check_gradients(test::random_matrix(3, 3, rng), [&](Tape& t, Tape::NodeId in) {
            return t.sum_all(t.affine(t.mul_scalar(in, t.constant(s)), 1.7, 0.3));
        });
    }
    SUBCASE("gradient with respect to parameters") {
        Matrix w0 = test::random_matrix(3, 2, rng);
        const Matrix x = test::random_matrix(4, 3, rng);
        ParamTensor W("W", w0);
        auto eval = [&]() {
            Tape ft;
            return ft.value(ft.mean_all(ft.softplus(ft.matmul(ft.constant(x), ft.param(W)))))(0, 0);
        };
        Tape t;
        const auto out = t.mean_all(t.softplus(t.matmul(t.constant(x), t.param(W))));
        t.backward_scalar(out);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 2; ++c) {
                const double fd = central_diff(eval, &W.value(r, c));
                CHECK(close_rel(W.grad(r, c), fd));
            }
    }
}

TEST_CASE("forward is deterministic given identical inputs") {
    Rng rng(3);
    const Matrix x = test::random_matrix(6, 4, rng);
    const Matrix W = test::random_matrix(4, 4, rng);
    auto once = [&]() {
        Tape t;
        return t.value(t.mean_all(t.softplus(t.matmul(t.constant(x), t.constant(W)))))(0, 0);
    };
    const double a = once();
    const double b = once();
    CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
}

TEST_CASE("tape error paths") {
    SUBCASE("backward twice throws") {
        Tape t;
        const auto out = t.square(t.input(Matrix(1, 1)));
        t.backward_scalar(out);
        CHECK_THROWS_AS(t.backward_scalar(out), std::invalid_argument);
    }
    SUBCASE("non-finite input rejected") {
        Tape t;
        Matrix bad(1, 1);
        bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(t.input(bad), NumericError);
    }
    SUBCASE("shape mismatch is descriptive") {
        Tape t;
        const auto a = t.input(Matrix(2, 3));
        const auto b = t.input(Matrix(2, 4));
        CHECK_THROWS_WITH_AS(t.add(a, b), doctest::Contains("shape mismatch"),
                             std::invalid_argument);
    }
    SUBCASE("param rejects non-finite writes") {
        ParamTensor p("p", Matrix(2, 2));
        Matrix bad(2, 2);
        bad(0, 1) = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(p.set_value(bad), NumericError);
        CHECK_THROWS_AS(p.set_entry(0, 0, std::nan("")), NumericError);
    }
}

TEST_CASE("adam first step with unit gradients moves by about -lr") {
    ParamTensor p("p", Matrix(2, 2, 0.5));
    diff::Adam opt({&p}, {1e-3, 0.9, 0.999, 1e-8});
    p.grad.fill(1.0);
    p.grad_ready = true;
    opt.step();
    for (double v : p.value.values()) CHECK(test::close_abs(v, 0.5 - 1e-3, 1e-9));
    // gradients zeroed afterwards
    for (double g : p.grad.values()) CHECK(g == 0.0);
    CHECK_FALSE(p.grad_ready);
}

TEST_CASE("adam with zero gradient leaves fresh parameters unchanged") {
    ParamTensor p("p", Matrix(2, 2, 0.25));
    diff::Adam opt({&p}, {});
    p.grad_ready = true;  // populated with zeros
    opt.step();
    for (double v : p.value.values()) CHECK(v == 0.25);
}

TEST_CASE("adam steps on a quadratic bowl decrease the loss monotonically") {
    ParamTensor w("w", Matrix(1, 1, 1.0));
    diff::Adam opt({&w}, {1e-2, 0.5, 0.9, 1e-8});
    double prev = w.value(0, 0) * w.value(0, 0);
    for (int i = 0; i < 20; ++i) {
        Tape t;
        const auto loss = t.square(t.param(w));
        t.backward_scalar(loss);
        opt.step();
        const double cur = w.value(0, 0) * w.value(0, 0);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("adam without populated gradients throws") {
    ParamTensor p("p", Matrix(1, 1));
    diff::Adam opt({&p}, {});
    CHECK_THROWS_AS(opt.step(), std::invalid_argument);
}

TEST_CASE("checkpoint save/load round-trips bit-exactly") {
    Rng rng(11);
    ParamTensor a("net.l0.W", test::random_matrix(7, 5, rng));
    ParamTensor b("net.l0.b", test::random_matrix(1, 5, rng, -1e-12, 1e-12));
    ParamTensor c("net.gamma", test::random_matrix(1, 1, rng, -1e300, 1e300));
    const std::string path = test::scratch_dir("ckpt") + "/params.txt";
    const std::vector<const ParamTensor*> saved = {&a, &b, &c};
    diff::save_params(path, saved);

    ParamTensor a2("net.l0.W", Matrix(7, 5)), b2("net.l0.b", Matrix(1, 5)),
        c2("net.gamma", Matrix(1, 1));
    const std::vector<ParamTensor*> loaded = {&a2, &b2, &c2};
    diff::load_params(path, loaded);
    CHECK(bit_identical(a.value, a2.value));
    CHECK(bit_identical(b.value, b2.value));
    CHECK(bit_identical(c.value, c2.value));

    SUBCASE("name mismatch is rejected") {
        ParamTensor wrong("other", Matrix(7, 5));
        std::vector<ParamTensor*> bad = {&wrong, &b2, &c2};
        CHECK_THROWS_AS(diff::load_params(path, bad), DataError);
    }
}

TEST_CASE("exact_sum is order independent") {
    Rng rng(5);
    std::vector<double> xs(500);
    for (double& x : xs) x = rng.uniform(-1e10, 1e10) * std::pow(10.0, rng.uniform_int(-8, 8));
    const double s1 = exact_sum(xs);
    std::reverse(xs.begin(), xs.end());
    const double s2 = exact_sum(xs);
    CHECK(std::memcmp(&s1, &s2, sizeof(double)) == 0);
}

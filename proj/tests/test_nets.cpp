#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pcgen/model.hpp"
#include "pcgen/nets.hpp"
#include "test_support.hpp"

using namespace pcgen;
using diff::Matrix;
using diff::Tape;
using nets::Activation;
using nets::Pool;
using test::bit_identical;
using test::central_diff;
using test::close_rel;

namespace {

nets::Encoder circle_encoder(Rng& rng, Pool pool = Pool::Mean) {
    return nets::Encoder("q", 2, {30, 30, 15}, pool, Activation::Softplus, {}, 15, rng);
}

}  // namespace

TEST_CASE("encode is invariant to point order, bit for bit") {
    Rng rng(1);
    auto q = circle_encoder(rng);
    for (int rep = 0; rep < 100; ++rep) {
        const Cloud x = test::random_matrix(rng.uniform_int(1, 60), 2, rng);
        const Matrix a = q.encode(x);
        const Matrix b = q.encode(test::permute_rows(x, test::random_permutation(x.rows(), rng)));
        CHECK(bit_identical(a, b));
    }
    auto qmax = circle_encoder(rng, Pool::Max);
    for (int rep = 0; rep < 100; ++rep) {
        const Cloud x = test::random_matrix(rng.uniform_int(1, 60), 2, rng);
        const Matrix a = qmax.encode(x);
        const Matrix b =
            qmax.encode(test::permute_rows(x, test::random_permutation(x.rows(), rng)));
        CHECK(bit_identical(a, b));
    }
}

TEST_CASE("encode handles n = 1, 2, 1000 and stays finite") {
    Rng rng(2);
    auto q = circle_encoder(rng);
    for (int n : {1, 2, 1000}) {
        const Matrix psi = q.encode(test::random_matrix(n, 2, rng));
        CHECK(psi.rows() == 1);
        CHECK(psi.cols() == 15);
        CHECK(psi.finite());
    }
}

TEST_CASE("encode rejects empty clouds and bad dimensions") {
    Rng rng(3);
    auto q = circle_encoder(rng);
    CHECK_THROWS_AS(q.encode(Matrix(0, 2)), std::invalid_argument);
    CHECK_THROWS_AS(q.encode(Matrix(5, 3)), std::invalid_argument);
}

TEST_CASE("single equivariant layer with gamma=0 and identity activation is affine") {
    Rng rng(4);
    nets::Encoder q("q", 2, {3}, Pool::Mean, Activation::Identity, {}, 3, rng);
    const Cloud x = test::random_matrix(1, 2, rng);
    const Matrix psi = q.encode(x);
    // gamma starts at zero, so psi = x W + b exactly
    auto params = q.params();
    REQUIRE(params.size() == 3);
    const Matrix& W = params[0]->value;
    const Matrix& b = params[1]->value;
    for (int j = 0; j < 3; ++j) {
        const double expect = x(0, 0) * W(0, j) + x(0, 1) * W(1, j) + b(0, j);
        CHECK(psi(0, j) == doctest::Approx(expect).epsilon(1e-15));
    }
}

TEST_CASE("generate_points honors the variable-size contract") {
    Rng init(5);
    nets::PointGenerator gx("gx", 10, 15, {30, 30}, 2, Activation::Softplus, init);
    const Matrix psi = test::random_matrix(1, 15, init);
    Rng a(77);
    const Cloud one = gx.generate(psi, 1, a);
    CHECK(one.rows() == 1);
    Rng b(77);
    const Cloud many = gx.generate(psi, 10000, b);
    CHECK(many.rows() == 10000);
    CHECK(many.finite());

    Rng c(123), d(123);
    CHECK(bit_identical(gx.generate(psi, 64, c), gx.generate(psi, 64, d)));

    Rng e(9);
    CHECK_THROWS_AS(gx.generate(psi, 0, e), std::invalid_argument);
    CHECK_THROWS_AS(gx.generate(test::random_matrix(1, 7, e), 4, e), std::invalid_argument);
}

TEST_CASE("hierarchical sampling reuses one code across point batches") {
    Rng init(6);
    nets::Mlp gtheta("gtheta", {10, 20, 15}, Activation::Softplus, Activation::Identity, init);
    nets::PointGenerator gx("gx", 10, 15, {20, 20}, 2, Activation::Softplus, init);

    Rng r1(42), r2(42);
    const Matrix psi1 = nets::sample_object_code(gtheta, 10, r1);
    const Matrix psi2 = nets::sample_object_code(gtheta, 10, r2);
    CHECK(bit_identical(psi1, psi2));  // same u gives the same code
    const Cloud pts1 = gx.generate(psi1, 16, r1);
    const Cloud pts2 = gx.generate(psi2, 16, r2);
    CHECK(bit_identical(pts1, pts2));
    const Cloud pts3 = gx.generate(psi1, 16, r1);  // fresh z, same code
    CHECK_FALSE(bit_identical(pts1, pts3));

    Rng r3(1);
    CHECK_THROWS_AS(nets::hierarchical_sample(gtheta, gx, 0, r3), std::invalid_argument);
    nets::Mlp empty;
    CHECK_THROWS_AS(nets::hierarchical_sample(empty, gx, 4, r3), std::invalid_argument);
}

TEST_CASE("zero-weight critic scores zero everywhere") {
    Rng rng(8);
    nets::Critic critic("critic", 2, {8, 8}, Activation::Softplus, 0.5, rng);
    for (auto* p : critic.params()) p->set_value(Matrix(p->value.rows(), p->value.cols()));
    const Matrix s = critic.score(test::random_matrix(10, 2, rng));
    for (double v : s.values()) CHECK(v == 0.0);
}

TEST_CASE("critic scores are pointwise and order-equivariant") {
    Rng rng(9);
    nets::Critic critic("critic", 3, {16}, Activation::LeakyRelu, 0.5, rng);
    const Cloud x = test::random_matrix(20, 3, rng);
    const auto perm = test::random_permutation(20, rng);
    const Matrix s = critic.score(x);
    const Matrix sp = critic.score(test::permute_rows(x, perm));
    for (int i = 0; i < 20; ++i)
        CHECK(sp(i, 0) == s(perm[static_cast<std::size_t>(i)], 0));
}

TEST_CASE("clip_weights clamps, is idempotent, and tracks the bound") {
    Rng rng(10);
    nets::Critic critic("critic", 3, {4}, Activation::Softplus, 0.5, rng);
    auto params = critic.params();
    params[0]->set_entry(0, 0, -5.0);
    params[0]->set_entry(0, 1, 0.05);
    params[0]->set_entry(0, 2, 5.0);
    critic.clip(0.1);
    CHECK(params[0]->value(0, 0) == -0.1);
    CHECK(params[0]->value(0, 1) == 0.05);
    CHECK(params[0]->value(0, 2) == 0.1);
    CHECK(critic.max_abs_weight() <= 0.1);

    const Matrix snapshot = params[0]->value;
    critic.clip(0.1);
    CHECK(bit_identical(snapshot, params[0]->value));

    // two linear layers: k = (c * fan_in_1) * (c * fan_in_2) = (0.1*3)*(0.1*4)
    CHECK(critic.lipschitz_bound() == doctest::Approx(0.12).epsilon(1e-12));

    CHECK_THROWS_AS(critic.clip(0.0), std::invalid_argument);
    CHECK_THROWS_AS(critic.clip(-1.0), std::invalid_argument);
}

TEST_CASE("sampled score differences never exceed the analytic bound") {
    Rng rng(11);
    nets::Critic critic("critic", 2, {16, 16}, Activation::Softplus, 0.5, rng);
    critic.clip(0.5);
    const double k = critic.lipschitz_bound();
    const Cloud xs = test::random_matrix(10000, 2, rng);
    const Cloud ys = test::random_matrix(10000, 2, rng);
    const Matrix sx = critic.score(xs);
    const Matrix sy = critic.score(ys);
    for (int i = 0; i < 10000; ++i) {
        const double d1 = std::abs(xs(i, 0) - ys(i, 0)) + std::abs(xs(i, 1) - ys(i, 1));
        CHECK(std::abs(sx(i, 0) - sy(i, 0)) <= k * d1 + 1e-12);
    }
}

namespace {

/// Finite-difference sweep over every parameter of a taped scalar function.
template <typename Fwd>
void check_param_gradients(std::vector<diff::ParamTensor*> params, Fwd&& fwd, double tol = 1e-4) {
    Tape t;
    const auto out = fwd(t, true);
    t.backward_scalar(out);
    std::vector<Matrix> analytic;
    for (auto* p : params) analytic.push_back(p->grad);

    auto eval = [&]() {
        Tape ft;
        return ft.value(fwd(ft, false))(0, 0);
    };
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        diff::ParamTensor* p = params[pi];
        for (int r = 0; r < p->value.rows(); ++r)
            for (int c = 0; c < p->value.cols(); ++c) {
                const double fd = central_diff(eval, &p->value(r, c));
                CHECK_MESSAGE(close_rel(analytic[pi](r, c), fd, tol),
                              p->name << "(" << r << "," << c << "): analytic "
                                      << analytic[pi](r, c) << " vs fd " << fd);
            }
        p->zero_grad();
    }
}

}  // namespace

TEST_CASE("full-network gradients match finite differences") {
    Rng rng(12);

    SUBCASE("encoder, mean pool") {
        auto q = nets::Encoder("q", 2, {6, 5}, Pool::Mean, Activation::Softplus, {}, 5, rng);
        const Cloud x = test::random_matrix(7, 2, rng);
        check_param_gradients(q.params(), [&](Tape& t, bool train) {
            return t.mean_all(t.square(q.forward(t, t.constant(x), train)));
        });
    }
    SUBCASE("encoder with head, max pool") {
        auto q = nets::Encoder("q", 3, {6, 6}, Pool::Max, Activation::LeakyRelu, {5}, 4, rng);
        const Cloud x = test::random_smooth_matrix(6, 3, rng);
        check_param_gradients(q.params(), [&](Tape& t, bool train) {
            return t.mean_all(t.square(q.forward(t, t.constant(x), train)));
        });
    }
    SUBCASE("point generator conditioned on an encoder code") {
        auto q = nets::Encoder("q", 2, {5, 4}, Pool::Mean, Activation::Softplus, {}, 4, rng);
        auto gx = nets::PointGenerator("gx", 3, 4, {6}, 2, Activation::Softplus, rng);
        const Cloud x = test::random_matrix(5, 2, rng);
        Rng zr(55);
        const Matrix z = gx.sample_noise(5, zr);
        auto params = q.params();
        for (auto* p : gx.params()) params.push_back(p);
        check_param_gradients(params, [&](Tape& t, bool train) {
            const auto psi = q.forward(t, t.constant(x), train);
            const auto fake = gx.forward(t, psi, z, train);
            return t.mean_all(t.square(fake));
        });
    }
    SUBCASE("critic") {
        nets::Critic critic("critic", 2, {8, 6}, Activation::Softplus, 0.5, rng);
        const Cloud x = test::random_matrix(9, 2, rng);
        check_param_gradients(critic.params(), [&](Tape& t, bool train) {
            return t.mean_all(critic.forward(t, t.constant(x), train));
        });
    }
}

TEST_CASE("model checkpoints round-trip through disk") {
    nets::ModelSpec spec;
    spec.d = 2;
    spec.q_pel = {8, 6};
    spec.d2 = 6;
    spec.gx_hidden = {8};
    spec.critic_hidden = {8};
    spec.code_critic_hidden = {8};
    spec.gtheta_hidden = {8};
    nets::Model model = nets::Model::build(spec, 77);
    model.norm.offset = {1.5, -2.25};
    model.norm.scale = 3.125;

    Rng rng(13);
    const Cloud x = test::random_matrix(12, 2, rng);
    const Matrix before = model.q.encode(x);

    const std::string dir = test::scratch_dir("model_roundtrip");
    model.save(dir);
    nets::Model loaded = nets::Model::load(dir);
    CHECK(bit_identical(before, loaded.q.encode(x)));
    CHECK(loaded.norm.scale == 3.125);
    CHECK(loaded.norm.offset == std::vector<double>{1.5, -2.25});
    CHECK(loaded.spec.q_pel == spec.q_pel);

    Rng g1(5), g2(5);
    const Matrix psi = model.q.encode(x);
    CHECK(bit_identical(model.gx.generate(psi, 8, g1), loaded.gx.generate(psi, 8, g2)));
    CHECK(loaded.critic.lipschitz_bound() == model.critic.lipschitz_bound());
}

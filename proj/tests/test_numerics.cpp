#include <cmath>

#include "doctest.h"
#include "hyperts/core/rng.hpp"
#include "hyperts/num/grad_check.hpp"
#include "hyperts/num/graph.hpp"

using namespace hyperts;
using namespace hyperts::num;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
    std::vector<double> data(shape_numel(shape));
    for (auto& v : data) v = rng.uniform(lo, hi);
    return Tensor::from_data(std::move(shape), std::move(data), false);
}

// Random values bounded away from zero, for kinked ops like relu.
Tensor random_tensor_away_from_zero(Shape shape, Rng& rng, double margin = 0.1) {
    std::vector<double> data(shape_numel(shape));
    for (auto& v : data) {
        double x = rng.uniform(margin, 2.0);
        v = rng.bernoulli(0.5) ? x : -x;
    }
    return Tensor::from_data(std::move(shape), std::move(data), false);
}

} // namespace

TEST_CASE("matmul basics") {
    Graph g;
    Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    SUBCASE("identity") {
        Tensor out = g.matmul(Tensor::identity(2), a);
        CHECK(out.data() == a.data());
    }
    SUBCASE("hand product") {
        Tensor b = Tensor::from_data({2, 1}, {1, 1});
        Tensor out = g.matmul(a, b);
        CHECK(out.data()[0] == doctest::Approx(3.0));
        CHECK(out.data()[1] == doctest::Approx(7.0));
    }
    SUBCASE("zero matrix") {
        Tensor out = g.matmul(Tensor::zeros({2, 2}), a);
        for (double v : out.data()) CHECK(v == 0.0);
    }
    SUBCASE("shape mismatch throws") {
        Tensor b = Tensor::from_data({3, 1}, {1, 1, 1});
        CHECK_THROWS_AS((void)g.matmul(a, b), DimensionError);
    }
    SUBCASE("transpose flags") {
        Tensor b = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
        Tensor lhs = g.matmul(a, b, true, false); // a^T b
        Tensor rhs = g.matmul(b, b, false, true); // b b^T
        CHECK(lhs.shape() == Shape{2, 3});
        CHECK(rhs.shape() == Shape{2, 2});
        // a^T = [[1,3],[2,4]]; (a^T b)[0][0] = 1*1 + 3*4 = 13
        CHECK(lhs.data()[0] == doctest::Approx(13.0));
        // (b b^T)[0][0] = 1 + 4 + 9 = 14
        CHECK(rhs.data()[0] == doctest::Approx(14.0));
    }
}

TEST_CASE("activations hit their closed forms and ranges") {
    Graph g;
    Tensor x = Tensor::from_data({3}, {0.0, -3.0, 1.0});
    Tensor sx = g.sigmoid(x), rx = g.relu(x), tx = g.tanh(x);
    CHECK(sx.data()[0] == doctest::Approx(0.5));
    CHECK(rx.data()[1] == 0.0);
    CHECK(tx.data()[2] == doctest::Approx(0.76159).epsilon(1e-4));
    CHECK(tx.data()[2] == doctest::Approx(std::tanh(1.0)));

    Rng rng(11);
    Tensor r = random_tensor({100}, rng, -50.0, 50.0);
    Tensor sr = g.sigmoid(r), tr = g.tanh(r), rr = g.relu(r);
    for (double v : sr.data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    for (double v : tr.data()) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
    for (double v : rr.data()) CHECK(v >= 0.0);

    Tensor ax = g.activation(x, Activation::sigmoid);
    CHECK(ax.data()[0] == doctest::Approx(0.5));
}

TEST_CASE("softmax with temperature") {
    Graph g;
    SUBCASE("equal scores are uniform for any tau") {
        Tensor s = Tensor::full({4}, 3.7);
        for (double tau : {0.1, 1.0, 25.0}) {
            Tensor p = g.softmax_temperature(s, tau);
            for (double v : p.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
        }
    }
    SUBCASE("two-point closed form") {
        Tensor s = Tensor::from_data({2}, {1.0, 0.0});
        Tensor p = g.softmax_temperature(s, 1.0);
        CHECK(p.data()[0] == doctest::Approx(0.7311).epsilon(1e-4));
        CHECK(p.data()[1] == doctest::Approx(0.2689).epsilon(1e-4));
    }
    SUBCASE("large tau approaches uniform") {
        Tensor s = Tensor::from_data({2}, {1.0, 0.0});
        Tensor p = g.softmax_temperature(s, 1e6);
        CHECK(p.data()[0] == doctest::Approx(0.5).epsilon(1e-5));
    }
    SUBCASE("probability vector invariant") {
        Rng rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            Tensor s = random_tensor({7}, rng, -5.0, 5.0);
            Tensor p = g.softmax_temperature(s, rng.uniform(0.05, 4.0));
            double total = 0.0;
            for (double v : p.data()) {
                CHECK(v >= 0.0);
                total += v;
            }
            CHECK(std::abs(total - 1.0) < 1e-12);
        }
    }
    SUBCASE("order preserving") {
        Tensor s = Tensor::from_data({3}, {0.3, -1.0, 2.0});
        Tensor p = g.softmax_temperature(s, 0.7);
        CHECK(p.data()[2] > p.data()[0]);
        CHECK(p.data()[0] > p.data()[1]);
    }
    SUBCASE("tau must be positive") {
        Tensor s = Tensor::from_data({2}, {1.0, 0.0});
        CHECK_THROWS_AS((void)g.softmax_temperature(s, 0.0), ConfigError);
        CHECK_THROWS_AS((void)g.softmax_temperature(s, -1.0), ConfigError);
    }
}

TEST_CASE("batch norm forward semantics") {
    Graph g;
    Tensor gamma1 = Tensor::full({2}, 1.0);
    Tensor beta0 = Tensor::zeros({2});

    SUBCASE("eval with unit running stats is the identity") {
        auto state = BatchNormState::init(2);
        Tensor x = Tensor::from_data({3, 2}, {1, 2, 3, 4, 5, 6});
        Tensor y = g.batch_norm(x, state, gamma1, beta0, BnMode::eval);
        for (std::size_t i = 0; i < x.numel(); ++i)
            CHECK(y.data()[i] == doctest::Approx(x.data()[i]).epsilon(1e-4));
    }
    SUBCASE("train on a constant batch returns beta") {
        auto state = BatchNormState::init(2);
        Tensor x = Tensor::full({4, 2}, 7.5);
        Tensor beta = Tensor::from_data({2}, {0.25, -1.5});
        Tensor y = g.batch_norm(x, state, gamma1, beta, BnMode::train);
        for (int b = 0; b < 4; ++b) {
            CHECK(y.data()[static_cast<std::size_t>(b) * 2 + 0] == doctest::Approx(0.25));
            CHECK(y.data()[static_cast<std::size_t>(b) * 2 + 1] == doctest::Approx(-1.5));
        }
    }
    SUBCASE("affine transform of standardized input") {
        auto state = BatchNormState::init(1);
        // Mean 0, variance 1 across the batch.
        Tensor x = Tensor::from_data({2, 1}, {1.0, -1.0});
        Tensor gamma = Tensor::from_data({1}, {2.0});
        Tensor beta = Tensor::from_data({1}, {1.0});
        Tensor y = g.batch_norm(x, state, gamma, beta, BnMode::train);
        CHECK(y.data()[0] == doctest::Approx(2.0 * 1.0 + 1.0).epsilon(1e-4));
        CHECK(y.data()[1] == doctest::Approx(2.0 * -1.0 + 1.0).epsilon(1e-4));
    }
    SUBCASE("running stats move with momentum") {
        auto state = BatchNormState::init(1);
        Tensor x = Tensor::from_data({2, 1}, {10.0, 10.0});
        (void)g.batch_norm(x, state, Tensor::full({1}, 1.0), Tensor::zeros({1}), BnMode::train);
        CHECK(state.running_mean[0] == doctest::Approx(0.9 * 0.0 + 0.1 * 10.0));
    }
}

TEST_CASE("backward basics") {
    SUBCASE("d(x^2)/dx at 3 is 6") {
        Graph g;
        Tensor x = Tensor::from_data({1}, {3.0}, true);
        Tensor y = g.mul(x, x);
        g.backward(y);
        CHECK(x.grad()[0] == doctest::Approx(6.0));
    }
    SUBCASE("sum of sigmoid at 0 gives 0.25 per element") {
        Graph g;
        Tensor x = Tensor::zeros({5}, true);
        Tensor y = g.sum(g.sigmoid(x));
        g.backward(y);
        for (double gv : x.grad()) CHECK(gv == doctest::Approx(0.25));
    }
    SUBCASE("constant loss leaves all gradients zero") {
        Graph g;
        Tensor x = Tensor::from_data({2}, {1.0, 2.0}, true);
        Tensor c = Tensor::scalar(5.0);
        g.backward(c);
        CHECK(x.grad()[0] == 0.0);
        CHECK(x.grad()[1] == 0.0);
    }
    SUBCASE("backward twice without reset is a state error") {
        Graph g;
        Tensor x = Tensor::from_data({1}, {2.0}, true);
        Tensor y = g.mul(x, x);
        g.backward(y);
        CHECK_THROWS_AS(g.backward(y), StateError);
        g.reset();
        Tensor y2 = g.mul(x, x);
        CHECK_NOTHROW(g.backward(y2));
    }
    SUBCASE("fan-out sums both contributions") {
        Graph g;
        Tensor x = Tensor::from_data({3}, {0.2, -0.4, 1.1}, true);
        Tensor y = g.sum(g.add(g.tanh(x), g.sigmoid(x)));
        g.backward(y);
        for (std::size_t i = 0; i < 3; ++i) {
            const double t = std::tanh(x.data()[i]);
            const double s = 1.0 / (1.0 + std::exp(-x.data()[i]));
            CHECK(x.grad()[i] == doctest::Approx((1 - t * t) + s * (1 - s)));
        }
    }
}

TEST_CASE("grad_check oracle agrees with itself") {
    Rng rng(17);
    SUBCASE("sum of squares") {
        Tensor x = random_tensor({6}, rng);
        double err = grad_check([](Graph& g, const Tensor& t) { return g.sum(g.mul(t, t)); }, x);
        CHECK(err < 1e-6);
    }
    SUBCASE("sum of tanh") {
        Tensor x = random_tensor({6}, rng);
        double err = grad_check([](Graph& g, const Tensor& t) { return g.sum(g.tanh(t)); }, x);
        CHECK(err < 1e-6);
    }
    SUBCASE("constant function has zero error") {
        Tensor x = random_tensor({4}, rng);
        double err = grad_check(
            [](Graph& g, const Tensor& t) {
                (void)t;
                Tensor c = Tensor::scalar(2.0);
                return g.scale(c, 1.0);
            },
            x);
        CHECK(err == 0.0);
    }
}

TEST_CASE("grad_check passes for every primitive on random inputs") {
    Rng rng(23);
    const double tol = 1e-4;

    for (int trial = 0; trial < 3; ++trial) {
        Tensor x23 = random_tensor({2, 3}, rng);
        Tensor x32 = random_tensor({3, 2}, rng);
        Tensor v2 = random_tensor({2}, rng);
        Tensor v3 = random_tensor({3}, rng);

        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.matmul(t, x32)); }, x23) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.matmul(x23, t)); }, x32) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.matmul(t, x23, true, true)); }, x32) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.mul(g.add(t, x23), g.sub(t, x23))); }, random_tensor({2, 3}, rng)) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.sigmoid(t)); }, x23) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.relu(t)); },
                         random_tensor_away_from_zero({2, 3}, rng)) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.mean(g.scale(g.add_scalar(t, 0.7), -1.3)); }, x23) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.softmax_temperature(t, 0.6)); }, v3) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) {
                  return g.sum(g.mul(g.softmax_temperature(t, 1.3), t));
              }, v3) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.row_sum(t)); }, x23) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.mul(g.col_sum(t), v3)); }, x23) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.scale_rows(t, v2)); }, x23) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.scale_rows(x23, t)); }, v2) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.scale_cols(t, v3)); }, x23) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.scale_cols(x23, t)); }, v3) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.rsqrt_clamped(t, 1e-8)); },
                         random_tensor({5}, rng, 0.5, 3.0)) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.recip_clamped(t, 1e-8)); },
                         random_tensor({5}, rng, 0.5, 3.0)) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.mul(g.reshape(t, {3, 2}), x32)); }, x23) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.concat_cols(t, x23)); }, x23) < tol);

        Tensor x4 = random_tensor({2, 3, 2, 4}, rng);
        CHECK(grad_check([&](Graph& g, const Tensor& t) {
                  return g.sum(g.permute4(t, {0, 3, 1, 2}));
              }, x4) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.crop_time(t, 2)); }, x4) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) {
                  std::vector<Tensor> parts{t, g.scale(t, 2.0)};
                  return g.sum(g.concat_channels(parts));
              }, x4) < tol);

        Tensor w = random_tensor({2, 3, 2}, rng, -0.8, 0.8);
        Tensor bias = random_tensor({2}, rng, -0.3, 0.3);
        CHECK(grad_check([&](Graph& g, const Tensor& t) {
                  return g.sum(g.conv_time(t, w, bias, 2));
              }, x4) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) {
                  return g.sum(g.conv_time(x4, t, bias, 1));
              }, w) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) {
                  return g.sum(g.conv_time(x4, w, t, 1));
              }, bias) < tol);

        Tensor mixer = random_tensor({2, 2}, rng);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.node_mix(t, mixer)); }, x4) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) { return g.sum(g.node_mix(x4, t)); }, mixer) < tol);

        Tensor gamma = random_tensor({3}, rng, 0.5, 1.5);
        Tensor beta = random_tensor({3}, rng, -0.5, 0.5);
        Tensor bn_x = random_tensor({4, 3}, rng);
        Tensor bn_w = random_tensor({4, 3}, rng);
        CHECK(grad_check([&](Graph& g, const Tensor& t) {
                  auto st = BatchNormState::init(3);
                  return g.sum(g.mul(g.batch_norm(t, st, gamma, beta, BnMode::train), bn_w));
              }, bn_x) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) {
                  auto st = BatchNormState::init(3);
                  return g.sum(g.mul(g.batch_norm(bn_x, st, t, beta, BnMode::train), bn_w));
              }, gamma) < tol);
        CHECK(grad_check([&](Graph& g, const Tensor& t) {
                  auto st = BatchNormState::init(3);
                  st.running_mean = {0.1, -0.2, 0.3};
                  st.running_var = {1.5, 0.7, 1.1};
                  return g.sum(g.mul(g.batch_norm(t, st, gamma, beta, BnMode::eval), bn_w));
              }, bn_x) < tol);
    }
}

TEST_CASE("non-finite op output raises a numeric error") {
    Graph g;
    Tensor big = Tensor::full({2}, 1e308);
    CHECK_THROWS_AS((void)g.add(big, big), NumericError);
    Tensor x = Tensor::from_data({2, 2}, {1e308, 1e308, 1e308, 1e308});
    CHECK_THROWS_AS((void)g.matmul(x, x), NumericError);
}

TEST_CASE("determinism: identical graphs produce identical bits") {
    auto run = []() {
        Rng rng(99);
        Graph g;
        Tensor x = random_tensor({4, 4}, rng);
        Tensor y = g.matmul(g.tanh(x), g.sigmoid(x), false, true);
        return y.data();
    };
    CHECK(run() == run());
}

#include <cmath>

#include "doctest.h"
#include "hyperts/core/csv.hpp"
#include "hyperts/core/linalg.hpp"
#include "hyperts/core/rng.hpp"
#include "hyperts/hg/mtcl.hpp"
#include "hyperts/num/grad_check.hpp"
#include "test_helpers.hpp"

using namespace hyperts;
using namespace hyperts::hg;
using num::Graph;
using num::Tensor;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Mat to_mat(const Tensor& t) {
    return Mat(static_cast<std::size_t>(t.dim(0)), static_cast<std::size_t>(t.dim(1)), t.data());
}

} // namespace

TEST_CASE("embed transform") {
    Graph g;
    SUBCASE("scalar closed form") {
        MtclParams p;
        p.n1 = Tensor::from_data({1, 1}, {1.0});
        p.n2 = Tensor::from_data({1, 1}, {1.0});
        p.w1 = Tensor::from_data({1, 1}, {1.0});
        p.w2 = Tensor::from_data({1, 1}, {1.0});
        auto [n1t, n2t] = embed_transform(g, p, 2.0);
        CHECK(n1t.data()[0] == doctest::Approx(0.96403).epsilon(1e-4));
        CHECK(n1t.data()[0] == doctest::Approx(std::tanh(2.0)));
        CHECK(n2t.data()[0] == doctest::Approx(std::tanh(2.0)));
    }
    SUBCASE("alpha zero collapses to zero") {
        Rng rng(1);
        MtclConfig config{.nodes = 3, .embed_dim = 4};
        auto p = MtclParams::init(config, rng);
        auto [n1t, n2t] = embed_transform(g, p, 0.0);
        for (double v : n1t.data()) CHECK(v == 0.0);
        for (double v : n2t.data()) CHECK(v == 0.0);
    }
    SUBCASE("zero embeddings stay zero through identity weights") {
        MtclParams p;
        p.n1 = Tensor::zeros({2, 2});
        p.n2 = Tensor::zeros({2, 2});
        p.w1 = Tensor::identity(2);
        p.w2 = Tensor::identity(2);
        auto [n1t, n2t] = embed_transform(g, p, 1.0);
        for (double v : n1t.data()) CHECK(v == 0.0);
    }
    SUBCASE("outputs stay inside (-1, 1)") {
        Rng rng(2);
        MtclConfig config{.nodes = 6, .embed_dim = 5, .alpha = 3.0};
        auto p = MtclParams::init(config, rng);
        auto [n1t, n2t] = embed_transform(g, p, config.alpha);
        for (double v : n1t.data()) {
            CHECK(v > -1.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("hyperedge generator") {
    Graph g;
    SUBCASE("one-dimensional hand case") {
        MtclParams p;
        p.wh1 = Tensor::from_data({1, 1}, {2.0});
        p.wh2 = Tensor::from_data({1, 1}, {3.0});
        Tensor n1t = Tensor::from_data({1, 1}, {1.0});
        Tensor gen = hyperedge_generator(g, n1t, p);
        CHECK(gen.data()[0] == doctest::Approx(6.0));
    }
    SUBCASE("zero input gives zero output") {
        MtclParams p;
        p.wh1 = Tensor::from_data({2, 2}, {0.3, -0.2, 0.4, 0.9});
        p.wh2 = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
        Tensor gen = hyperedge_generator(g, Tensor::zeros({4, 2}), p);
        for (double v : gen.data()) CHECK(v == 0.0);
    }
    SUBCASE("all-negative preactivations are flattened by the inner relu") {
        MtclParams p;
        p.wh1 = Tensor::from_data({1, 2}, {-1.0, -2.0});
        p.wh2 = Tensor::from_data({2, 1}, {5.0, 7.0});
        Tensor n1t = Tensor::from_data({3, 1}, {1.0, 2.0, 0.5});
        Tensor gen = hyperedge_generator(g, n1t, p);
        for (double v : gen.data()) CHECK(v == 0.0);
    }
}

TEST_CASE("attention scores") {
    Graph g;
    MtclParams p;
    p.wa = Tensor::from_data({1, 1}, {1.0});
    SUBCASE("zero logits give one half") {
        Tensor att = attention_scores(g, Tensor::zeros({3, 1}), p);
        for (double v : att.data()) CHECK(v == doctest::Approx(0.5));
    }
    SUBCASE("logit one") {
        Tensor att = attention_scores(g, Tensor::from_data({1, 1}, {1.0}), p);
        CHECK(att.data()[0] == doctest::Approx(0.7311).epsilon(1e-4));
    }
    SUBCASE("large logits saturate toward one") {
        Tensor att = attention_scores(g, Tensor::from_data({1, 1}, {40.0}), p);
        CHECK(att.data()[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("incidence construction") {
    Graph g;
    SUBCASE("attention of one half halves the relu'd generator") {
        Tensor gen = Tensor::from_data({2, 2}, {2.0, -4.0, 6.0, 0.5});
        Tensor att = Tensor::full({2, 2}, 0.5);
        Tensor h = build_incidence(g, gen, att);
        CHECK(h.data()[0] == doctest::Approx(1.0));
        CHECK(h.data()[1] == 0.0);
        CHECK(h.data()[2] == doctest::Approx(3.0));
        CHECK(h.data()[3] == doctest::Approx(0.25));
    }
    SUBCASE("nonpositive generator output zeroes the incidence") {
        Tensor gen = Tensor::from_data({2, 1}, {-1.0, 0.0});
        Tensor att = Tensor::full({2, 1}, 0.9);
        Tensor h = build_incidence(g, gen, att);
        for (double v : h.data()) CHECK(v == 0.0);
    }
    SUBCASE("product of the worked scalar pair") {
        Tensor gen = Tensor::from_data({1, 1}, {6.0});
        Tensor att = Tensor::from_data({1, 1}, {sigmoid(1.0)});
        Tensor h = build_incidence(g, gen, att);
        CHECK(h.data()[0] == doctest::Approx(4.3866).epsilon(1e-3));
        CHECK(h.data()[0] == doctest::Approx(6.0 * sigmoid(1.0)));
    }
}

TEST_CASE("self-loop augmentation") {
    Graph g;
    SUBCASE("no learned hyperedges leaves the identity") {
        Tensor h = augment_self_loops(g, Tensor::zeros({3, 0}));
        Tensor eye = Tensor::identity(3);
        CHECK(h.shape() == num::Shape{3, 3});
        CHECK(h.data() == eye.data());
    }
    SUBCASE("two-node worked example") {
        Tensor h = augment_self_loops(g, Tensor::from_data({2, 1}, {1.0, 1.0}));
        CHECK(h.shape() == num::Shape{2, 3});
        CHECK(h.data() == std::vector<double>{1, 1, 0, 1, 0, 1});
    }
    SUBCASE("every row sums to at least one") {
        Rng rng(3);
        std::vector<double> raw(12);
        for (auto& v : raw) v = std::max(0.0, rng.uniform(-1.0, 1.0));
        Tensor h = augment_self_loops(g, Tensor::from_data({4, 3}, raw));
        Tensor dv = g.row_sum(h);
        for (double v : dv.data()) CHECK(v >= 1.0);
    }
}

TEST_CASE("degree vectors") {
    Graph g;
    SUBCASE("identity incidence") {
        auto [dv, de] = degrees(g, Tensor::identity(3));
        for (double v : dv.data()) CHECK(v == 1.0);
        for (double v : de.data()) CHECK(v == 1.0);
    }
    SUBCASE("worked example sums") {
        Tensor h = Tensor::from_data({2, 3}, {1, 1, 0, 1, 0, 1});
        auto [dv, de] = degrees(g, h);
        CHECK(dv.data() == std::vector<double>{2, 2});
        CHECK(de.data() == std::vector<double>{2, 1, 1});
    }
    SUBCASE("all-zero raw incidence still yields unit node degrees") {
        Tensor h = augment_self_loops(g, Tensor::zeros({3, 2}));
        auto [dv, de] = degrees(g, h);
        for (double v : dv.data()) CHECK(v == 1.0);
    }
}

TEST_CASE("normalized laplacian") {
    Graph g;
    SUBCASE("identity incidence gives zero laplacian") {
        Tensor h = Tensor::identity(4);
        auto [dv, de] = degrees(g, h);
        auto [theta, lap] = laplacian(g, h, dv, de);
        for (double v : lap.data()) CHECK(std::abs(v) < 1e-15);
        for (int i = 0; i < 4; ++i)
            CHECK(theta.data()[static_cast<std::size_t>(i) * 4 + i] == doctest::Approx(1.0));
    }
    SUBCASE("two-node worked example, exact to 1e-12") {
        Tensor h = Tensor::from_data({2, 3}, {1, 1, 0, 1, 0, 1});
        auto [dv, de] = degrees(g, h);
        auto [theta, lap] = laplacian(g, h, dv, de);
        CHECK(theta.data()[0] == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(theta.data()[1] == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(lap.data()[0] == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(lap.data()[1] == doctest::Approx(-0.25).epsilon(1e-12));
        CHECK(lap.data()[2] == doctest::Approx(-0.25).epsilon(1e-12));
        CHECK(lap.data()[3] == doctest::Approx(0.25).epsilon(1e-12));
        auto eig = linalg::sym_eigen(to_mat(lap));
        CHECK(eig.values[0] == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(eig.values[1] == doctest::Approx(0.5).epsilon(1e-10));
    }
    SUBCASE("self-loop-only structure is flat") {
        auto s = identity_structure(3);
        for (double v : s.laplacian.data()) CHECK(v == 0.0);
    }
}

TEST_CASE("spectral invariants over random parameter draws") {
    Rng rng(29);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 3 + static_cast<int>(rng.next_below(10));
        MtclConfig config{.nodes = n, .embed_dim = 4, .alpha = 3.0};
        auto params = MtclParams::init(config, rng);
        Graph g(false);
        auto s = build_structure(g, params, config);

        for (double v : s.incidence.data()) CHECK(v >= 0.0);

        const auto un = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i < un; ++i)
            for (std::size_t j = 0; j < i; ++j)
                CHECK(std::abs(s.laplacian.data()[i * un + j] - s.laplacian.data()[j * un + i]) <
                      1e-10);

        auto eig = linalg::sym_eigen(to_mat(s.laplacian));
        CHECK(eig.values.front() > -1e-8);
        CHECK(eig.values.back() <= 1.0 + 1e-8);

        // The scaled all-ones vector lies in the kernel.
        for (std::size_t i = 0; i < un; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < un; ++j)
                acc += s.laplacian.data()[i * un + j] * std::sqrt(s.node_degree.data()[j]);
            CHECK(std::abs(acc) < 1e-8);
        }
    }
}

TEST_CASE("structure chain is differentiable end to end") {
    Rng rng(31);
    MtclConfig config{.nodes = 3, .embed_dim = 2, .hyperedges = 2, .alpha = 1.5};
    auto params = MtclParams::init(config, rng);
    Tensor weights = Tensor::from_data({3, 3}, {0.3, -0.8, 0.2, 1.1, 0.5, -0.4, 0.9, -0.2, 0.6});

    auto through = [&](auto swap) {
        return [&, swap](Graph& g, const Tensor& t) {
            MtclParams q = params;
            swap(q, t);
            auto s = build_structure(g, q, config);
            return g.sum(g.mul(s.laplacian, weights));
        };
    };

    CHECK(num::grad_check(through([](MtclParams& q, const Tensor& t) { q.n1 = t; }), params.n1) <
          1e-4);
    CHECK(num::grad_check(through([](MtclParams& q, const Tensor& t) { q.n2 = t; }), params.n2) <
          1e-4);
    CHECK(num::grad_check(through([](MtclParams& q, const Tensor& t) { q.wh2 = t; }), params.wh2) <
          1e-4);
    CHECK(num::grad_check(through([](MtclParams& q, const Tensor& t) { q.wa = t; }), params.wa) <
          1e-4);
}

TEST_CASE("determinism and snapshots") {
    SUBCASE("fixed seed reproduces the incidence") {
        MtclConfig config{.nodes = 5, .embed_dim = 3};
        Rng r1(77), r2(77);
        auto p1 = MtclParams::init(config, r1);
        auto p2 = MtclParams::init(config, r2);
        Graph g1(false), g2(false);
        auto s1 = build_structure(g1, p1, config);
        auto s2 = build_structure(g2, p2, config);
        CHECK(s1.incidence.data() == s2.incidence.data());
    }
    SUBCASE("snapshot files round-trip within 1e-9") {
        testutil::TempDir tmp("hyperts_lap");
        Rng rng(5);
        MtclConfig config{.nodes = 4, .embed_dim = 3};
        auto params = MtclParams::init(config, rng);
        Graph g(false);
        auto s = build_structure(g, params, config);

        for (int epoch = 1; epoch <= 5; ++epoch) {
            auto path = snapshot_laplacian(s.laplacian, {"a", "b", "c", "d"}, epoch, tmp.path());
            CHECK(path.find("laplacian_epoch" + std::to_string(epoch) + ".csv") != std::string::npos);
        }
        auto table = csv::read_file(tmp.file("laplacian_epoch3.csv"));
        CHECK(table.header == std::vector<std::string>{"a", "b", "c", "d"});
        REQUIRE(table.rows.size() == 4);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c)
                CHECK(std::stod(table.rows[r][c]) ==
                      doctest::Approx(s.laplacian.data()[r * 4 + c]).epsilon(1e-9));
    }
}

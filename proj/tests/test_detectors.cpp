#include <cmath>

#include "doctest.h"
#include "hyperts/core/rng.hpp"
#include "hyperts/detect/errors.hpp"
#include "hyperts/detect/gmm.hpp"
#include "hyperts/detect/pca.hpp"
#include "hyperts/detect/report.hpp"
#include "test_helpers.hpp"

using namespace hyperts;
using namespace hyperts::detect;

TEST_CASE("error normalization") {
    SUBCASE("perfect predictions standardize to the negated mean over sigma") {
        Mat val(4, 1, {1.0, 3.0, 1.0, 3.0}); // mean 2, sigma 1
        auto norm = ErrorNormalizer::fit(val);
        Mat zero(2, 1, {0.0, 0.0});
        Mat out = norm.apply(zero);
        CHECK(out(0, 0) == doctest::Approx(-2.0));
    }
    SUBCASE("already standardized errors pass through almost unchanged") {
        Rng rng(3);
        Mat val(5000, 2);
        for (auto& v : val.data()) v = rng.normal();
        auto norm = ErrorNormalizer::fit(val);
        Mat probe(1, 2, {1.0, -0.5});
        Mat out = norm.apply(probe);
        CHECK(out(0, 0) == doctest::Approx(1.0).epsilon(0.05));
        CHECK(out(0, 1) == doctest::Approx(-0.5).epsilon(0.1));
    }
    SUBCASE("constant error column stays finite through the sigma floor") {
        Mat val(10, 1, std::vector<double>(10, 0.25));
        auto norm = ErrorNormalizer::fit(val);
        Mat probe(1, 1, {0.25});
        Mat out = norm.apply(probe);
        CHECK(std::isfinite(out(0, 0)));
        CHECK(out(0, 0) == doctest::Approx(0.0));
    }
    SUBCASE("sliding window restandardizes against trailing rows") {
        Mat e(200, 1);
        for (std::size_t r = 0; r < 200; ++r) e(r, 0) = r < 100 ? 0.0 : 10.0;
        Mat out = sliding_window_normalize(e, 50);
        // Deep inside each regime the values are unremarkable.
        CHECK(std::abs(out(90, 0)) < 1e-6);
        CHECK(std::abs(out(190, 0)) < 1e-6);
        // The regime boundary stands out.
        CHECK(out(100, 0) > 3.0);
    }
}

TEST_CASE("pca detector") {
    SUBCASE("rank-one validation errors keep a single component") {
        Rng rng(5);
        Mat val(50, 3);
        for (std::size_t r = 0; r < 50; ++r) {
            const double u = rng.uniform(-2.0, 2.0);
            val(r, 0) = u;
            val(r, 1) = 2.0 * u;
            val(r, 2) = -u;
        }
        auto det = pca_fit(val, 0.95);
        CHECK(det.components() == 1);
    }
    SUBCASE("full variance target keeps the full rank") {
        Rng rng(7);
        Mat val(100, 3);
        for (auto& v : val.data()) v = rng.normal();
        auto det = pca_fit(val, 1.0);
        CHECK(det.components() == 3);
    }
    SUBCASE("isotropic errors need roughly 95 percent of the features") {
        Rng rng(9);
        const std::size_t n = 20;
        Mat val(3000, n);
        for (auto& v : val.data()) v = rng.normal();
        auto det = pca_fit(val, 0.95);
        CHECK(det.components() >= 17);
        CHECK(det.components() <= 20);
    }
    SUBCASE("basis columns are orthonormal within 1e-8") {
        Rng rng(11);
        Mat val(200, 5);
        for (auto& v : val.data()) v = rng.normal();
        for (std::size_t r = 0; r < 200; ++r) val(r, 3) = 0.8 * val(r, 0) + 0.2 * val(r, 3);
        auto det = pca_fit(val, 0.9);
        const auto p = val.cols() < det.basis.cols() ? val.cols() : det.basis.cols();
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b) {
                double dot = 0.0;
                for (std::size_t r = 0; r < 5; ++r) dot += det.basis(r, a) * det.basis(r, b);
                CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-8);
            }
    }
    SUBCASE("full basis scores vanish") {
        Rng rng(13);
        Mat val(100, 4);
        for (auto& v : val.data()) v = rng.normal();
        auto det = pca_fit(val, 1.0);
        REQUIRE(det.components() == 4);
        Mat probe(10, 4);
        for (auto& v : probe.data()) v = rng.uniform(-3.0, 3.0);
        auto scores = pca_score(probe, det);
        for (double s : scores) CHECK(s < 1e-10);
    }
    SUBCASE("projection geometry on perfectly correlated features") {
        // Validation errors live on the diagonal (u, u); the single
        // component is (1,1)/sqrt(2) and scoring measures the distance
        // |a-b|/sqrt(2) from that line.
        Mat val(100, 2);
        for (std::size_t r = 0; r < 100; ++r) {
            const double u = r % 2 == 0 ? 1.0 : -1.0;
            val(r, 0) = u;
            val(r, 1) = u;
        }
        auto det = pca_fit(val, 0.95);
        REQUIRE(det.components() == 1);
        Mat probe(3, 2, {3.0, 1.0, 2.0, 2.0, -1.0, 1.0});
        auto scores = pca_score(probe, det);
        CHECK(scores[0] == doctest::Approx(2.0 / std::sqrt(2.0)));
        CHECK(scores[1] == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(scores[2] == doctest::Approx(2.0 / std::sqrt(2.0)));
        // Moving along the subspace leaves the score unchanged.
        Mat shifted(1, 2, {3.0 + 5.0, 1.0 + 5.0});
        auto moved = pca_score(shifted, det);
        CHECK(moved[0] == doctest::Approx(scores[0]));
    }
    SUBCASE("scores are nonnegative and the fit threshold matches max validation score") {
        Rng rng(15);
        Mat val(80, 3);
        for (auto& v : val.data()) v = rng.normal();
        auto det = pca_fit(val, 0.6);
        auto val_scores = pca_score(val, det);
        double mx = 0.0;
        for (double s : val_scores) {
            CHECK(s >= 0.0);
            mx = std::max(mx, s);
        }
        CHECK(det.threshold == doctest::Approx(mx));
    }
}

TEST_CASE("gmm detector") {
    SUBCASE("single tight gaussian selects one component by bic") {
        Rng rng(17);
        Mat val(300, 2);
        for (auto& v : val.data()) v = rng.normal(0.0, 1.0);
        auto det = gmm_fit(val);
        CHECK(det.components() == 1);
    }
    SUBCASE("two well-separated clusters select two components with centered means") {
        Rng rng(19);
        Mat val(400, 2);
        for (std::size_t r = 0; r < 400; ++r) {
            const double base = r < 200 ? 0.0 : 6.0;
            val(r, 0) = base + rng.normal(0.0, 0.3);
            val(r, 1) = base + rng.normal(0.0, 0.3);
        }
        auto det = gmm_fit(val);
        REQUIRE(det.components() == 2);
        CHECK(det.weights[0] == doctest::Approx(0.5).epsilon(0.05));
        // Means are far apart in standardized space.
        const double gap = std::abs(det.means(0, 0) - det.means(1, 0));
        CHECK(gap > 1.5);
    }
    SUBCASE("weights always sum to one") {
        Rng rng(21);
        Mat val(250, 3);
        for (auto& v : val.data()) v = rng.normal();
        GmmFitOptions options;
        options.k_max = 4;
        auto det = gmm_fit(val, options);
        double total = 0.0;
        for (double w : det.weights) total += w;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("em log-likelihood trace is nondecreasing") {
        Rng rng(23);
        Mat val(300, 2);
        for (std::size_t r = 0; r < 300; ++r) {
            const double base = r % 3 == 0 ? -2.0 : 1.0;
            val(r, 0) = base + rng.normal(0.0, 0.4);
            val(r, 1) = rng.normal(0.0, 0.7);
        }
        auto det = gmm_fit(val);
        REQUIRE(det.em_trace.size() >= 2);
        for (std::size_t i = 1; i < det.em_trace.size(); ++i)
            CHECK(det.em_trace[i] >= det.em_trace[i - 1] - 1e-8);
    }
    SUBCASE("score grows strictly along a ray from a single component mean") {
        Rng rng(25);
        Mat val(300, 2);
        for (auto& v : val.data()) v = rng.normal();
        GmmFitOptions options;
        options.k_max = 1;
        auto det = gmm_fit(val, options);
        double prev = -1.0;
        for (int step = 0; step <= 6; ++step) {
            Mat probe(1, 2, {0.5 * step, 0.5 * step});
            const double s = gmm_score(probe, det)[0];
            CHECK(std::isfinite(s));
            if (step >= 1) CHECK(s > prev);
            prev = s;
        }
    }
    SUBCASE("f1 mode needs labels and uses them") {
        Rng rng(27);
        Mat val(200, 1);
        std::vector<std::uint8_t> labels(200, 0);
        for (std::size_t r = 0; r < 200; ++r) {
            val(r, 0) = rng.normal();
            if (r % 29 == 0) {
                val(r, 0) += 8.0;
                labels[r] = 1;
            }
        }
        GmmFitOptions options;
        options.mode = KSelection::f1;
        CHECK_THROWS_AS((void)gmm_fit(val, options), ConfigError);
        auto det = gmm_fit(val, options, &labels);
        CHECK(det.components() >= 1);
    }
    SUBCASE("too few rows are rejected") {
        Mat val(5, 1, {1, 2, 3, 4, 5});
        CHECK_THROWS_AS((void)gmm_fit(val), DataError);
    }
}

TEST_CASE("threshold selection") {
    SUBCASE("max policy") {
        CHECK(threshold_select({1.0, 5.0, 3.0}, ThresholdPolicy::max) == 5.0);
    }
    SUBCASE("median quantile") {
        CHECK(threshold_select({1.0, 2.0, 3.0}, ThresholdPolicy::quantile, 0.5) == 2.0);
    }
    SUBCASE("all-equal scores give that value") {
        CHECK(threshold_select({2.5, 2.5, 2.5}, ThresholdPolicy::max) == 2.5);
        CHECK(threshold_select({2.5, 2.5, 2.5}, ThresholdPolicy::quantile, 0.9) == 2.5);
    }
    SUBCASE("empty scores are an error") {
        CHECK_THROWS_AS((void)threshold_select({}, ThresholdPolicy::max), DataError);
    }
}

TEST_CASE("detection report") {
    Mat errors(3, 3, {0.1, 0.2, 0.1, 0.0, 3.0, 1.0, 0.2, 0.1, 0.0});
    std::vector<int> steps{5, 6, 7};
    std::vector<std::string> names{"a", "b", "c"};

    SUBCASE("no scores above the threshold means no flags") {
        auto report = flag_anomalies({1.0, 2.0, 1.5}, 2.0, errors, steps, names);
        CHECK(report.flagged_count() == 0);
        for (int f : report.top_feature) CHECK(f == -1);
    }
    SUBCASE("one score above gives exactly one attributed flag") {
        auto report = flag_anomalies({1.0, 9.0, 1.5}, 2.0, errors, steps, names);
        CHECK(report.flagged_count() == 1);
        CHECK(report.flags[1] == 1);
        CHECK(report.top_feature[1] == 1); // |3.0| dominates row 1
    }
    SUBCASE("attribution picks the largest absolute residual") {
        Mat residual(1, 3, {0.0, 3.0, 1.0});
        auto report = flag_anomalies({10.0}, 1.0, residual, {0}, names);
        CHECK(report.top_feature[0] == 1);
    }
    SUBCASE("csv and json round trip") {
        testutil::TempDir tmp("hyperts_report");
        auto report = flag_anomalies({1.0, 9.0, 1.5}, 2.0, errors, steps, names);
        write_report_csv(tmp.file("report.csv"), report);
        write_report_json(tmp.file("report.json"), report, "gmm");
        auto loaded = load_report_csv(tmp.file("report.csv"));
        CHECK(loaded.timesteps == report.timesteps);
        CHECK(loaded.flags == report.flags);
        CHECK(loaded.threshold == doctest::Approx(report.threshold));
        auto text = testutil::read_text(tmp.file("report.json"));
        CHECK(text.find("\"n_flagged\": 1") != std::string::npos);
    }
}

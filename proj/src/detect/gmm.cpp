#include "hyperts/detect/gmm.hpp"

#include <algorithm>
#include <cmath>

#include "hyperts/core/error.hpp"
#include "hyperts/core/rng.hpp"

namespace hyperts::detect {

namespace {

constexpr double kVarianceFloor = 1e-6;
constexpr double kLog2Pi = 1.8378770664093453;

struct Mixture {
    std::vector<double> weights;
    Mat means;     // k x n
    Mat variances; // k x n
};

double log_component_density(const Mixture& mix, std::size_t k, const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        const double var = mix.variances(k, c);
        const double d = x[c] - mix.means(k, c);
        acc += -0.5 * (kLog2Pi + std::log(var) + d * d / var);
    }
    return acc;
}

// log sum_k w_k N(x; mu_k, var_k) via log-sum-exp.
double log_density(const Mixture& mix, const double* x, std::size_t n) {
    const std::size_t k = mix.weights.size();
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(k);
    for (std::size_t j = 0; j < k; ++j) {
        terms[j] = std::log(std::max(mix.weights[j], 1e-300)) + log_component_density(mix, j, x, n);
        best = std::max(best, terms[j]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - best);
    return best + std::log(acc);
}

struct EmResult {
    Mixture mix;
    std::vector<double> trace; // mean log-likelihood per iteration
    double final_ll = 0.0;
};

std::vector<double> column_variances(const Mat& x) {
    const std::size_t n = x.cols();
    std::vector<double> vars(n, 0.0);
    const auto rows = static_cast<double>(x.rows());
    for (std::size_t c = 0; c < n; ++c) {
        double m = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) m += x(r, c);
        m /= rows;
        double v = 0.0;
        for (std::size_t r = 0; r < x.rows(); ++r) {
            const double d = x(r, c) - m;
            v += d * d;
        }
        vars[c] = std::max(v / rows, kVarianceFloor);
    }
    return vars;
}

EmResult run_em(const Mat& x, int k, const GmmFitOptions& options) {
    const std::size_t rows = x.rows();
    const std::size_t n = x.cols();
    const auto uk = static_cast<std::size_t>(k);
    Rng rng(options.seed ^ (0x9e37u * static_cast<std::uint64_t>(k)));

    const auto global_var = column_variances(x);
    Mixture mix;
    mix.weights.assign(uk, 1.0 / k);
    mix.means = Mat(uk, n);
    mix.variances = Mat(uk, n);
    auto seed_component = [&](std::size_t j) {
        const auto row = static_cast<std::size_t>(rng.next_below(rows));
        for (std::size_t c = 0; c < n; ++c) {
            mix.means(j, c) = x(row, c);
            mix.variances(j, c) = global_var[c];
        }
    };
    for (std::size_t j = 0; j < uk; ++j) seed_component(j);

    EmResult result;
    Mat resp(rows, uk);
    int reseeds = 0;
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < options.max_iter; ++iter) {
        // E-step with per-row log-sum-exp.
        double total_ll = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < uk; ++j) {
                resp(r, j) = std::log(std::max(mix.weights[j], 1e-300)) +
                             log_component_density(mix, j, x.row_ptr(r), n);
                best = std::max(best, resp(r, j));
            }
            double denom = 0.0;
            for (std::size_t j = 0; j < uk; ++j) denom += std::exp(resp(r, j) - best);
            const double log_denom = best + std::log(denom);
            total_ll += log_denom;
            for (std::size_t j = 0; j < uk; ++j) resp(r, j) = std::exp(resp(r, j) - log_denom);
        }
        const double mean_ll = total_ll / static_cast<double>(rows);
        if (!std::isfinite(mean_ll)) throw NumericError("gmm_fit: log-likelihood diverged");
        if (!result.trace.empty() && mean_ll < prev_ll - 1e-8)
            throw NumericError("gmm_fit: log-likelihood decreased during EM");
        result.trace.push_back(mean_ll);
        const bool converged = iter > 0 && mean_ll - prev_ll < options.tol;
        prev_ll = mean_ll;
        if (converged) break;

        // M-step.
        bool reseeded = false;
        for (std::size_t j = 0; j < uk; ++j) {
            double nj = 0.0;
            for (std::size_t r = 0; r < rows; ++r) nj += resp(r, j);
            if (nj < 1e-10 * static_cast<double>(rows)) {
                if (++reseeds > 3)
                    throw NumericError("gmm_fit: component collapsed more than three times");
                seed_component(j);
                mix.weights[j] = 1.0 / k;
                reseeded = true;
                continue;
            }
            mix.weights[j] = nj / static_cast<double>(rows);
            for (std::size_t c = 0; c < n; ++c) {
                double m = 0.0;
                for (std::size_t r = 0; r < rows; ++r) m += resp(r, j) * x(r, c);
                m /= nj;
                double v = 0.0;
                for (std::size_t r = 0; r < rows; ++r) {
                    const double d = x(r, c) - m;
                    v += resp(r, j) * d * d;
                }
                mix.means(j, c) = m;
                mix.variances(j, c) = std::max(v / nj, kVarianceFloor);
            }
        }
        if (reseeded) {
            // Weights may no longer sum to one after a reseed.
            double total = 0.0;
            for (double w : mix.weights) total += w;
            for (auto& w : mix.weights) w /= total;
            prev_ll = -std::numeric_limits<double>::infinity();
            result.trace.clear(); // monotonicity restarts with the new mixture
        }
    }
    result.final_ll = prev_ll;
    result.mix = std::move(mix);
    return result;
}

double bic(const EmResult& em, std::size_t rows, std::size_t n, int k) {
    const double params = static_cast<double>(k - 1) + 2.0 * k * static_cast<double>(n);
    return -2.0 * em.final_ll * static_cast<double>(rows) +
           params * std::log(static_cast<double>(rows));
}

double best_f1_for_scores(const std::vector<double>& scores,
                          const std::vector<std::uint8_t>& labels) {
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    long positives = 0;
    for (auto l : labels) positives += l;
    long tp = 0;
    double best = 0.0;
    // Sweep thresholds just below each score in descending order.
    for (std::size_t i = 0; i < order.size(); ++i) {
        tp += labels[order[i]];
        const auto predicted = static_cast<long>(i + 1);
        if (positives == 0) break;
        const double precision = static_cast<double>(tp) / static_cast<double>(predicted);
        const double recall = static_cast<double>(tp) / static_cast<double>(positives);
        if (precision + recall > 0.0)
            best = std::max(best, 2.0 * precision * recall / (precision + recall));
    }
    return best;
}

} // namespace

GmmDetector gmm_fit(const Mat& val_errors, const GmmFitOptions& options,
                    const std::vector<std::uint8_t>* val_labels) {
    if (options.k_max < 1) throw ConfigError("gmm component bound must be >= 1");
    if (val_errors.rows() < 10)
        throw DataError("gmm_fit needs at least 10 validation rows");
    if (options.mode == KSelection::f1 &&
        (val_labels == nullptr || val_labels->size() != val_errors.rows()))
        throw ConfigError("gmm_fit in f1 mode needs validation labels aligned with the errors");

    GmmDetector det;
    det.normalizer = ErrorNormalizer::fit(val_errors);
    const Mat x = det.normalizer.apply(val_errors);

    double best_criterion = 0.0;
    bool have_best = false;
    EmResult best_em;
    const int k_cap = std::min<int>(options.k_max, static_cast<int>(x.rows()) / 10);
    for (int k = 1; k <= std::max(1, k_cap); ++k) {
        if (x.rows() < static_cast<std::size_t>(10 * k)) break;
        EmResult em = run_em(x, k, options);
        double criterion;
        if (options.mode == KSelection::bic) {
            criterion = bic(em, x.rows(), x.cols(), k); // lower is better
        } else {
            GmmDetector candidate;
            candidate.normalizer = det.normalizer;
            candidate.weights = em.mix.weights;
            candidate.means = em.mix.means;
            candidate.variances = em.mix.variances;
            const auto scores = gmm_score(val_errors, candidate);
            criterion = -best_f1_for_scores(scores, *val_labels); // lower is better
        }
        if (!have_best || criterion < best_criterion) {
            best_criterion = criterion;
            best_em = std::move(em);
            have_best = true;
        }
    }

    det.weights = best_em.mix.weights;
    det.means = best_em.mix.means;
    det.variances = best_em.mix.variances;
    det.em_trace = best_em.trace;

    auto val_scores = gmm_score(val_errors, det);
    det.threshold = *std::max_element(val_scores.begin(), val_scores.end());
    return det;
}

std::vector<double> gmm_score(const Mat& errors, const GmmDetector& detector) {
    if (detector.weights.empty()) throw StateError("gmm_score: detector is not fitted");
    const Mat x = detector.normalizer.apply(errors);
    Mixture mix{detector.weights, detector.means, detector.variances};
    std::vector<double> scores(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r)
        scores[r] = -log_density(mix, x.row_ptr(r), x.cols());
    return scores;
}

} // namespace hyperts::detect

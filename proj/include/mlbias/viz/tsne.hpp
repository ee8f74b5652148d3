#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlbias/error.hpp"
#include "mlbias/random.hpp"
#include "mlbias/viz/matrix.hpp"

namespace mlbias::viz {

enum class GenderTag { male_form, female_form, adjective };

inline std::string to_string(GenderTag t) {
    switch (t) {
    case GenderTag::male_form: return "male_form";
    case GenderTag::female_form: return "female_form";
    case GenderTag::adjective: return "adjective";
    }
    return "?";
}

/// Squared distance below which two rows count as the same point.
inline constexpr double duplicate_epsilon = 1e-12;

struct EmbeddingMatrix {
    std::vector<std::string> labels;
    Matrix rows;
    std::vector<GenderTag> gender_tags;

    void validate() const {
        const std::size_t n = rows.rows();
        if (n < 3) throw InputError("embedding matrix needs at least 3 rows");
        if (labels.size() != n || gender_tags.size() != n) throw InputError("labels/tags do not match matrix rows");
        for (double x : rows.data())
            if (!std::isfinite(x)) throw InputError("non-finite embedding component");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (squared_distance(rows.row(i), rows.row(j)) < duplicate_epsilon)
                    throw InputError("duplicate points: \"" + labels[i] + "\" and \"" + labels[j] + "\"");
    }
};

struct TsneConfig {
    double perplexity = 5.0;
    int iterations = 1000;
    double learning_rate = 100.0;
    double early_exaggeration_factor = 4.0;
    int early_exaggeration_iters = 100;
    std::uint64_t seed = 42;

    void validate(std::size_t n) const {
        if (!(perplexity > 1.0)) throw InputError("perplexity must exceed 1");
        if (perplexity > static_cast<double>(n) - 1.0)
            throw InputError("perplexity " + std::to_string(perplexity) + " exceeds n - 1 = " + std::to_string(n - 1));
        if (early_exaggeration_iters < 0 || iterations < early_exaggeration_iters)
            throw InputError("need iterations >= early_exaggeration_iters >= 0");
        if (!(learning_rate > 0.0)) throw InputError("learning_rate must be positive");
        if (!(early_exaggeration_factor > 0.0)) throw InputError("early_exaggeration_factor must be positive");
    }
};

inline constexpr double entropy_tolerance = 1e-6;
inline constexpr int max_bisection_steps = 200;

struct Affinities {
    Matrix p;                         // symmetric joint P, sums to 1
    std::vector<double> row_entropy;  // entropy (nats) of each conditional row
    std::vector<double> beta;         // precision 1 / (2 sigma^2) per row
};

/// Joint t-SNE affinities. Each conditional row uses a Gaussian kernel whose
/// precision is found by bisection so that the row entropy is ln(perplexity).
inline Affinities pairwise_affinities(const EmbeddingMatrix& m, double perplexity) {
    m.validate();
    const std::size_t n = m.rows.rows();
    if (!(perplexity > 1.0) || perplexity > static_cast<double>(n) - 1.0)
        throw InputError("perplexity must lie in (1, n - 1]");
    const double target = std::log(perplexity);

    Matrix dist(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dist(i, j) = dist(j, i) = squared_distance(m.rows.row(i), m.rows.row(j));

    Affinities out{Matrix(n, n), std::vector<double>(n), std::vector<double>(n)};
    Matrix cond(n, n);
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
        double dmin = INFINITY;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) dmin = std::min(dmin, dist(i, j));

        // entropy of the row at precision beta; distances shifted by dmin for stability
        auto evaluate = [&](double beta) {
            double sum = 0.0, weighted = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) {
                    row[j] = 0.0;
                    continue;
                }
                const double shifted = dist(i, j) - dmin;
                row[j] = std::exp(-beta * shifted);
                sum += row[j];
                weighted += shifted * row[j];
            }
            for (auto& v : row) v /= sum;
            return std::log(sum) + beta * weighted / sum;
        };

        double beta = 1.0, lo = 0.0, hi = INFINITY;
        double h = evaluate(beta);
        int steps = 0;
        while (std::abs(h - target) > entropy_tolerance) {
            if (++steps > max_bisection_steps)
                throw NumericalError("perplexity bisection did not converge for row " + std::to_string(i) + " (\"" +
                                     m.labels[i] + "\")");
            if (h > target) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
            h = evaluate(beta);
        }
        out.row_entropy[i] = h;
        out.beta[i] = beta;
        for (std::size_t j = 0; j < n; ++j) cond(i, j) = row[j];
    }
    const double denom = 2.0 * static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out.p(i, j) = i == j ? 0.0 : (cond(i, j) + cond(j, i)) / denom;
    return out;
}

/// KL(P || Q) for the Student-t affinities of a 2-D layout.
inline double kl_divergence(const Matrix& p, const Matrix& y) {
    const std::size_t n = p.rows();
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) z += 1.0 / (1.0 + squared_distance(y.row(i), y.row(j)));
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || p(i, j) <= 0.0) continue;
            const double q = 1.0 / (1.0 + squared_distance(y.row(i), y.row(j))) / z;
            kl += p(i, j) * std::log(p(i, j) / q);
        }
    return kl;
}

struct TsneResult {
    Matrix coords;  // n x 2
    double kl = 0.0;
    /// KL fifty iterations after early exaggeration ends, when the run is that long.
    std::optional<double> kl_after_exaggeration;
};

/// Exact t-SNE: gradient descent with momentum and per-parameter gains on
/// KL(P || Q), Student-t kernel in two dimensions. Single threaded, so the
/// layout is a pure function of (input, config).
inline TsneResult tsne(const EmbeddingMatrix& m, const TsneConfig& cfg) {
    const std::size_t n = m.rows.rows();
    cfg.validate(n);
    const Matrix p = pairwise_affinities(m, cfg.perplexity).p;

    Rng rng(cfg.seed);
    Matrix y(n, 2), update(n, 2), gains(n, 2, 1.0), grad(n, 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < 2; ++k) y(i, k) = 1e-4 * rng.normal();

    TsneResult result;
    Matrix num(n, n);
    const int checkpoint = cfg.early_exaggeration_iters + 50;
    for (int it = 0; it < cfg.iterations; ++it) {
        const bool exaggerating = it < cfg.early_exaggeration_iters;
        const double exaggeration = exaggerating ? cfg.early_exaggeration_factor : 1.0;
        const double momentum = exaggerating ? 0.5 : 0.8;

        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double v = 1.0 / (1.0 + squared_distance(y.row(i), y.row(j)));
                num(i, j) = num(j, i) = v;
                z += 2.0 * v;
            }
        for (std::size_t i = 0; i < n; ++i) {
            double gx = 0.0, gy = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double mult = (exaggeration * p(i, j) - num(i, j) / z) * num(i, j);
                gx += mult * (y(i, 0) - y(j, 0));
                gy += mult * (y(i, 1) - y(j, 1));
            }
            grad(i, 0) = 4.0 * gx;
            grad(i, 1) = 4.0 * gy;
        }

        double mean[2] = {0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < 2; ++k) {
                double& g = gains(i, k);
                g = (grad(i, k) > 0.0) != (update(i, k) > 0.0) ? g + 0.2 : g * 0.8;
                if (g < 0.01) g = 0.01;
                update(i, k) = momentum * update(i, k) - cfg.learning_rate * g * grad(i, k);
                y(i, k) += update(i, k);
                mean[k] += y(i, k);
            }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < 2; ++k) {
                y(i, k) -= mean[k] / static_cast<double>(n);
                if (!std::isfinite(y(i, k)))
                    throw NumericalError("t-SNE diverged (non-finite coordinate) at iteration " + std::to_string(it));
            }
        if (it + 1 == checkpoint) result.kl_after_exaggeration = kl_divergence(p, y);
    }
    result.kl = kl_divergence(p, y);
    if (!std::isfinite(result.kl)) throw NumericalError("t-SNE produced a non-finite KL divergence");
    result.coords = std::move(y);
    return result;
}

} // namespace mlbias::viz

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "rng.hpp"

namespace aga {

struct SvmTrainConfig {
    double cost = 10.0;        // C
    double tolerance = 1e-4;   // projected-gradient stopping threshold
    std::size_t max_passes = 1000;
    std::uint64_t seed = 0;    // fixes the coordinate visiting order
};

inline std::vector<double> l1_normalize(std::span<const double> x) {
    double norm = 0.0;
    for (double v : x) norm += std::abs(v);
    std::vector<double> out(x.begin(), x.end());
    if (norm == 0.0) return out;  // zero vectors pass through unchanged
    for (double& v : out) v /= norm;
    return out;
}

// Solution of one binary L2-regularized L1-loss SVC dual problem:
//   min_a 1/2 a^T Q a - e^T a,  0 <= a_i <= C,  Q_ij = y_i y_j x_i.x_j
struct BinarySvmSolution {
    std::vector<double> weights;  // includes the bias as the last component
    std::vector<double> alpha;
    std::size_t passes = 0;
    bool converged = false;
};

inline double svm_dual_objective(const BinarySvmSolution& sol) {
    double wtw = 0.0;
    for (double w : sol.weights) wtw += w * w;
    double asum = 0.0;
    for (double a : sol.alpha) asum += a;
    return 0.5 * wtw - asum;
}

// Dual coordinate descent, no shrinking. Coordinates are visited in one
// seed-derived permutation reused on every pass, so the run is deterministic
// for a given seed. Rows of `x` must already carry the constant bias column.
inline BinarySvmSolution solve_binary_svm(const Matrix& x, std::span<const std::int8_t> y, double c,
                                          double tolerance, std::size_t max_passes,
                                          std::uint64_t seed) {
    const std::size_t n = x.rows;
    if (n == 0) throw std::invalid_argument("solve_binary_svm: empty problem");
    if (y.size() != n) throw std::invalid_argument("solve_binary_svm: label count mismatch");
    if (!(c > 0.0)) throw std::invalid_argument("solve_binary_svm: C must be positive");

    BinarySvmSolution sol;
    sol.alpha.assign(n, 0.0);
    sol.weights.assign(x.cols, 0.0);

    std::vector<double> qd(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (double v : x.row(i)) s += v * v;
        qd[i] = s;
    }

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(derive_seed(seed, 0x51));
    rng.shuffle(perm);

    for (std::size_t pass = 0; pass < max_passes; ++pass) {
        double pg_max = -std::numeric_limits<double>::infinity();
        double pg_min = std::numeric_limits<double>::infinity();
        for (std::size_t i : perm) {
            if (qd[i] == 0.0) continue;  // zero row contributes nothing
            const auto xi = x.row(i);
            const double yi = static_cast<double>(y[i]);
            double g = 0.0;
            for (std::size_t j = 0; j < xi.size(); ++j) g += sol.weights[j] * xi[j];
            g = g * yi - 1.0;

            double pg = g;
            if (sol.alpha[i] == 0.0) {
                if (g > 0.0) pg = 0.0;
            } else if (sol.alpha[i] == c) {
                if (g < 0.0) pg = 0.0;
            }
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);

            if (std::abs(pg) > 1e-12) {
                const double old = sol.alpha[i];
                sol.alpha[i] = std::min(std::max(old - g / qd[i], 0.0), c);
                const double d = (sol.alpha[i] - old) * yi;
                for (std::size_t j = 0; j < xi.size(); ++j) sol.weights[j] += d * xi[j];
            }
        }
        ++sol.passes;
        if (pg_max - pg_min <= tolerance) {
            sol.converged = true;
            break;
        }
    }
    return sol;
}

struct LinearSvmModel {
    std::vector<std::string> classes;  // sorted; row i of weights scores classes[i]
    Matrix weights;                    // n_classes x dim
    std::vector<double> biases;
    double cost = 10.0;
};

// One-vs-rest linear C-SVM. The bias is learned through a constant-1 feature
// appended to every row.
inline LinearSvmModel train_linear_svm(const Matrix& x, const std::vector<std::string>& labels,
                                       const SvmTrainConfig& cfg = {}) {
    if (x.rows == 0) throw std::invalid_argument("train_linear_svm: empty training set");
    if (labels.size() != x.rows)
        throw std::invalid_argument("train_linear_svm: label count does not match rows");
    if (!all_finite(x)) throw std::invalid_argument("train_linear_svm: non-finite features");

    std::set<std::string> unique(labels.begin(), labels.end());
    if (unique.size() < 2) throw std::invalid_argument("train_linear_svm: needs at least two classes");

    Matrix aug(x.rows, x.cols + 1);
    for (std::size_t r = 0; r < x.rows; ++r) {
        std::copy(x.row(r).begin(), x.row(r).end(), aug.row(r).begin());
        aug(r, x.cols) = 1.0;
    }

    LinearSvmModel model;
    model.classes.assign(unique.begin(), unique.end());
    model.weights = Matrix(model.classes.size(), x.cols);
    model.biases.assign(model.classes.size(), 0.0);
    model.cost = cfg.cost;

    std::vector<std::int8_t> y(x.rows);
    for (std::size_t c = 0; c < model.classes.size(); ++c) {
        for (std::size_t i = 0; i < labels.size(); ++i)
            y[i] = labels[i] == model.classes[c] ? 1 : -1;
        BinarySvmSolution sol = solve_binary_svm(aug, y, cfg.cost, cfg.tolerance, cfg.max_passes,
                                                 derive_seed(cfg.seed, 0x60 + c));
        std::copy(sol.weights.begin(), sol.weights.end() - 1, model.weights.row(c).begin());
        model.biases[c] = sol.weights.back();
    }
    return model;
}

inline std::vector<double> svm_scores(const LinearSvmModel& model, std::span<const double> features) {
    if (features.size() != model.weights.cols)
        throw std::invalid_argument("svm_scores: feature dimension mismatch");
    std::vector<double> scores(model.classes.size());
    for (std::size_t c = 0; c < model.classes.size(); ++c) {
        double s = model.biases[c];
        const auto w = model.weights.row(c);
        for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * features[j];
        scores[c] = s;
    }
    return scores;
}

// Ties resolve to the lowest class index (classes are sorted).
inline std::string predict_class(const LinearSvmModel& model, std::span<const double> features) {
    const std::vector<double> scores = svm_scores(model, features);
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c)
        if (scores[c] > scores[best]) best = c;
    return model.classes[best];
}

}  // namespace aga

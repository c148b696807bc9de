#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace aga {

inline double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

inline double mean(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean: empty input");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

inline double median_absolute_error(std::span<const double> predictions,
                                    std::span<const double> truths) {
    if (predictions.size() != truths.size())
        throw std::invalid_argument("median_absolute_error: length mismatch");
    if (predictions.empty()) throw std::invalid_argument("median_absolute_error: empty input");
    std::vector<double> abs_err(predictions.size());
    for (std::size_t i = 0; i < predictions.size(); ++i)
        abs_err[i] = std::abs(predictions[i] - truths[i]);
    return median(std::move(abs_err));
}

inline double pearson_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson_rho: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("pearson_rho: needs at least two points");
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("pearson_rho: constant input has no defined correlation");
    return sxy / std::sqrt(sxx * syy);
}

// Coefficient of determination of predictions against truths:
// 1 - SS_res/SS_tot. Unbounded below; callers that report it may clamp.
inline double r_squared(std::span<const double> predictions, std::span<const double> truths) {
    if (predictions.size() != truths.size()) throw std::invalid_argument("r_squared: length mismatch");
    if (predictions.empty()) throw std::invalid_argument("r_squared: empty input");
    const double mt = mean(truths);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const double r = truths[i] - predictions[i];
        const double d = truths[i] - mt;
        ss_res += r * r;
        ss_tot += d * d;
    }
    if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    return 1.0 - ss_res / ss_tot;
}

namespace detail {

struct RankedPool {
    std::vector<double> ranks_a;      // midranks of sample a
    double rank_sum_a = 0.0;
    bool has_ties = false;
    double tie_correction = 0.0;      // sum over tie groups of (t^3 - t)
};

inline RankedPool midranks(std::span<const double> a, std::span<const double> b) {
    struct Entry {
        double value;
        bool from_a;
    };
    std::vector<Entry> pool;
    pool.reserve(a.size() + b.size());
    for (double v : a) pool.push_back({v, true});
    for (double v : b) pool.push_back({v, false});
    std::sort(pool.begin(), pool.end(), [](const Entry& l, const Entry& r) { return l.value < r.value; });

    RankedPool out;
    std::size_t i = 0;
    while (i < pool.size()) {
        std::size_t j = i;
        while (j < pool.size() && pool[j].value == pool[i].value) ++j;
        const double t = static_cast<double>(j - i);
        // ranks are 1-based; tied values share the average of their ranks
        const double rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        if (t > 1.0) {
            out.has_ties = true;
            out.tie_correction += t * t * t - t;
        }
        for (std::size_t k = i; k < j; ++k)
            if (pool[k].from_a) {
                out.ranks_a.push_back(rank);
                out.rank_sum_a += rank;
            }
        i = j;
    }
    return out;
}

}  // namespace detail

// Exact two-sided Mann-Whitney / Wilcoxon rank-sum tail for small untied
// samples; normal approximation with tie and continuity corrections
// otherwise. Identical samples give p = 1.
inline double wilcoxon_rank_sum_p(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("wilcoxon_rank_sum_p: empty sample");
    for (double v : a)
        if (!std::isfinite(v)) throw std::invalid_argument("wilcoxon_rank_sum_p: non-finite value");
    for (double v : b)
        if (!std::isfinite(v)) throw std::invalid_argument("wilcoxon_rank_sum_p: non-finite value");

    const detail::RankedPool ranked = detail::midranks(a, b);
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    const double u1 = ranked.rank_sum_a - n1 * (n1 + 1.0) / 2.0;

    const std::size_t nmin = std::min(a.size(), b.size());
    if (nmin <= 8 && !ranked.has_ties) {
        // count subsets of size n over ranks {1..N} by their U statistic:
        // f[k][u] after processing rank r = number of k-subsets of {1..r}
        // with U = u, using U = rank_sum - k(k+1)/2
        const std::size_t n = a.size();
        const std::size_t m = b.size();
        const std::size_t N = n + m;
        const std::size_t umax = n * m;
        std::vector<std::vector<std::uint64_t>> f(n + 1, std::vector<std::uint64_t>(umax + 1, 0));
        f[0][0] = 1;
        for (std::size_t r = 1; r <= N; ++r) {
            for (std::size_t k = std::min(r, n); k >= 1; --k) {
                // picking rank r as the k-th (largest so far) element adds
                // (r - k) to U: r-1 pooled values below it, k-1 of them ours
                const std::size_t add = r - k;
                for (std::size_t u = umax + 1; u-- > add;) {
                    const std::uint64_t ways = f[k - 1][u - add];
                    if (ways) f[k][u] += ways;
                }
            }
        }
        const auto& dist = f[n];
        std::uint64_t total = 0;
        for (std::uint64_t c : dist) total += c;
        const auto u_obs = static_cast<std::size_t>(std::llround(u1));
        const std::size_t u_lo = std::min(u_obs, umax - u_obs);
        const std::size_t u_hi = umax - u_lo;
        if (u_lo == u_hi) return 1.0;
        std::uint64_t tail = 0;
        for (std::size_t u = 0; u <= u_lo; ++u) tail += dist[u];
        for (std::size_t u = u_hi; u <= umax; ++u) tail += dist[u];
        const double p = static_cast<double>(tail) / static_cast<double>(total);
        return std::min(1.0, p);
    }

    const double nn = n1 + n2;
    const double mu = n1 * n2 / 2.0;
    const double variance =
        (n1 * n2 / 12.0) * ((nn + 1.0) - ranked.tie_correction / (nn * (nn - 1.0)));
    if (variance <= 0.0) return 1.0;  // everything tied
    double z = (std::abs(u1 - mu) - 0.5) / std::sqrt(variance);  // continuity correction
    if (z < 0.0) z = 0.0;
    return std::erfc(z / std::sqrt(2.0));
}

}  // namespace aga

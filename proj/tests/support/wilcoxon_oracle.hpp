#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace testsupport {

// Literal-enumeration Mann-Whitney oracle for small untied samples: walks
// every subset of pooled ranks that the first sample could occupy and counts
// the two-sided tail directly. Mirrors the library's centering convention so
// results are comparable bit for bit.
inline double wilcoxon_exact_by_enumeration(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    if (n == 0 || m == 0) throw std::invalid_argument("enumeration oracle: empty sample");

    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    for (std::size_t i = 1; i < pooled.size(); ++i)
        if (pooled[i] == pooled[i - 1]) throw std::invalid_argument("enumeration oracle: ties");

    // observed U for the smaller sample
    const std::size_t nmin = std::min(n, m);
    std::span<const double> small = n <= m ? a : b;
    std::size_t rank_sum = 0;
    for (double v : small) {
        const auto it = std::lower_bound(pooled.begin(), pooled.end(), v);
        rank_sum += static_cast<std::size_t>(it - pooled.begin()) + 1;
    }
    const std::size_t u_obs = rank_sum - nmin * (nmin + 1) / 2;
    const std::size_t umax = n * m;
    const std::size_t u_lo = std::min(u_obs, umax - u_obs);
    const std::size_t u_hi = umax - u_lo;
    if (u_lo == u_hi) return 1.0;

    const std::size_t N = n + m;
    std::vector<std::size_t> pick(nmin);
    for (std::size_t i = 0; i < nmin; ++i) pick[i] = i;
    std::uint64_t total = 0, tail = 0;
    for (;;) {
        std::size_t rs = 0;
        for (std::size_t r : pick) rs += r + 1;
        const std::size_t u = rs - nmin * (nmin + 1) / 2;
        ++total;
        if (u <= u_lo || u >= u_hi) ++tail;

        // next combination of {0..N-1} choose nmin
        std::size_t i = nmin;
        while (i-- > 0) {
            if (pick[i] != i + N - nmin) {
                ++pick[i];
                for (std::size_t j = i + 1; j < nmin; ++j) pick[j] = pick[j - 1] + 1;
                break;
            }
            if (i == 0) return std::min(1.0, static_cast<double>(tail) / static_cast<double>(total));
        }
    }
}

}  // namespace testsupport

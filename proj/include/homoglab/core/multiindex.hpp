#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <functional>
#include <vector>

namespace homoglab {

// Ordered tuples in {0..d-1}^k, k <= 4, enumerated row-major so that
// tuple_rank inverts enumerate_tuples' ordering.
using IndexTuple = std::vector<int>;

inline std::vector<IndexTuple> enumerate_tuples(int d, int k) {
    std::vector<IndexTuple> out;
    std::size_t count = 1;
    for (int i = 0; i < k; ++i) count *= static_cast<std::size_t>(d);
    out.reserve(count);
    IndexTuple t(static_cast<std::size_t>(k), 0);
    for (std::size_t r = 0; r < count; ++r) {
        out.push_back(t);
        for (int i = k - 1; i >= 0; --i) {
            if (++t[static_cast<std::size_t>(i)] < d) break;
            t[static_cast<std::size_t>(i)] = 0;
        }
    }
    return out;
}

inline std::size_t tuple_rank(int d, const IndexTuple& t) {
    std::size_t r = 0;
    for (int i : t) r = r * static_cast<std::size_t>(d) + static_cast<std::size_t>(i);
    return r;
}

inline std::size_t pow_int(int base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
    return r;
}

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Average of f over all permutations of the tuple positions.
inline double symmetrize_over(const IndexTuple& idx,
                              const std::function<double(const IndexTuple&)>& f) {
    IndexTuple p = idx;
    std::sort(p.begin(), p.end());
    double sum = 0.0;
    std::size_t count = 0;
    do {
        sum += f(p);
        ++count;
    } while (std::next_permutation(p.begin(), p.end()));
    // next_permutation over the sorted tuple visits each distinct arrangement
    // once; repeated entries weight those arrangements as the multiset mean,
    // which coincides with the mean over all k! permutations.
    return sum / static_cast<double>(count);
}

} // namespace homoglab

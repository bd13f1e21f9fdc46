// SPDX-License-Identifier: Apache-2.0
// Reference implementations used only by tests. Each one is written
// independently of the library code it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "efpc/model.hpp"

namespace efpc::testing {

// Central finite differences over every parameter, in tensors() order.
inline std::vector<double> numeric_gradient(const ModelParams& params,
                                            const std::function<double(const ModelParams&)>& loss, double eps) {
    ModelParams probe = params;
    std::vector<double> out;
    for (auto& t : tensors(probe)) {
        for (double& x : t.values()) {
            const double saved = x;
            x = saved + eps;
            const double up = loss(probe);
            x = saved - eps;
            const double down = loss(probe);
            x = saved;
            out.push_back((up - down) / (2.0 * eps));
        }
    }
    return out;
}

inline std::vector<double> flatten(const ModelParams& params) {
    std::vector<double> out;
    for (const auto& t : tensors(params)) out.insert(out.end(), t.values().begin(), t.values().end());
    return out;
}

struct GradientComparison {
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t compared = 0;
};

// |a - n| / max(|a|, |n|, floor). The floor keeps parameters whose true
// gradient is ~0 from reporting finite-difference noise as relative error.
inline GradientComparison compare_gradients(const std::vector<double>& analytic,
                                            const std::vector<double>& numeric, double floor) {
    GradientComparison c;
    c.compared = std::min(analytic.size(), numeric.size());
    for (std::size_t i = 0; i < c.compared; ++i) {
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
        const double rel = std::abs(analytic[i] - numeric[i]) / denom;
        if (rel > c.max_relative_error) {
            c.max_relative_error = rel;
            c.worst_index = i;
        }
    }
    if (analytic.size() != numeric.size()) c.max_relative_error = INFINITY;
    return c;
}

// Keep count for tau = percent / 100 computed in integers:
// floor((percent * n + 50) / 100), clamped to [1, n].
inline std::size_t keep_count_percent(std::size_t n, std::size_t percent) {
    const std::size_t k = (percent * n + 50) / 100;
    return std::clamp<std::size_t>(k, 1, n);
}

// Leftmost embedding of `sub` into `seq` by backtracking search over
// positions; returns the chosen indicator vector, or nullopt if `sub` is
// not a subsequence. Exponential in the worst case, fine for short inputs.
inline std::optional<std::vector<int>> leftmost_embedding(const std::vector<std::string>& seq,
                                                          const std::vector<std::string>& sub) {
    std::vector<int> mark(seq.size(), 0);
    std::function<bool(std::size_t, std::size_t)> place = [&](std::size_t si, std::size_t from) {
        if (si == sub.size()) return true;
        for (std::size_t j = from; j < seq.size(); ++j) {
            if (seq[j] != sub[si]) continue;
            mark[j] = 1;
            if (place(si + 1, j + 1)) return true;
            mark[j] = 0;
        }
        return false;
    };
    if (!place(0, 0)) return std::nullopt;
    return mark;
}

// Longest common subsequence length by exhaustive recursion with memo.
inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::vector<long>> memo(a.size() + 1, std::vector<long>(b.size() + 1, -1));
    std::function<long(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> long {
        if (i == a.size() || j == b.size()) return 0;
        if (memo[i][j] >= 0) return memo[i][j];
        long best = a[i] == b[j] ? 1 + go(i + 1, j + 1) : std::max(go(i + 1, j), go(i, j + 1));
        return memo[i][j] = best;
    };
    return static_cast<std::size_t>(go(0, 0));
}

}  // namespace efpc::testing

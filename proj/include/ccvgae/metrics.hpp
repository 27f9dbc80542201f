#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "ccvgae/errors.hpp"

namespace ccvgae {

// Mann-Whitney AUC: the probability that a uniformly chosen positive outranks
// a uniformly chosen negative, ties counted half. Computed from tied-average
// ranks; all intermediates are half-integers, so the result is exact.
inline double auc(const std::vector<int>& labels, const std::vector<double>& scores) {
    if (labels.size() != scores.size()) throw DimensionError("auc: labels/scores length");
    std::size_t pos = 0, neg = 0;
    for (int l : labels) (l == 1 ? pos : neg) += 1;
    if (pos == 0 || neg == 0)
        throw ConfigError("auc: need at least one positive and one negative label");

    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // ranks are 1-based
        for (std::size_t t = i; t < j; ++t)
            if (labels[order[t]] == 1) rank_sum_pos += avg_rank;
        i = j;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(pos) * static_cast<double>(pos + 1);
    return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

// Mean over positives of precision at each positive's rank, scores descending.
// Ties are broken by stable input order.
inline double average_precision(const std::vector<int>& labels,
                                const std::vector<double>& scores) {
    if (labels.size() != scores.size())
        throw DimensionError("average_precision: labels/scores length");
    std::size_t pos = 0;
    for (int l : labels) pos += (l == 1);
    if (pos == 0) throw ConfigError("average_precision: need at least one positive label");

    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double sum = 0.0;
    std::size_t pos_seen = 0;
    for (std::size_t rank = 1; rank <= order.size(); ++rank) {
        if (labels[order[rank - 1]] != 1) continue;
        ++pos_seen;
        sum += static_cast<double>(pos_seen) / static_cast<double>(rank);
    }
    return sum / static_cast<double>(pos);
}

} // namespace ccvgae

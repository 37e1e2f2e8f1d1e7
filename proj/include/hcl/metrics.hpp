#pragma once

// Evaluation metrics: adjusted Rand index, directed-edge FDR/TPR, optimal
// cluster matching, Wilcoxon rank-sum, and the graph summaries (flow ratio,
// downstream influence) used for real-data reports.

#include "hcl/dag.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "hcl/stats.hpp"

namespace hcl {

// Pair-counting adjusted Rand index.  When the adjustment denominator is
// zero (e.g. both labelings are a single cluster) the partitions are either
// identical (1) or not (0).
inline double ari(const std::vector<int>& labels_a, const std::vector<int>& labels_b) {
    if (labels_a.size() != labels_b.size()) {
        throw std::invalid_argument("ari: label vectors must have equal length");
    }
    if (labels_a.size() < 2) {
        throw std::invalid_argument("ari: need at least two samples");
    }

    std::map<int, int> ids_a, ids_b;
    for (int v : labels_a) ids_a.emplace(v, static_cast<int>(ids_a.size()));
    for (int v : labels_b) ids_b.emplace(v, static_cast<int>(ids_b.size()));
    const std::size_t ka = ids_a.size();
    const std::size_t kb = ids_b.size();

    std::vector<std::vector<std::int64_t>> table(ka, std::vector<std::int64_t>(kb, 0));
    std::vector<std::int64_t> row_sum(ka, 0), col_sum(kb, 0);
    for (std::size_t n = 0; n < labels_a.size(); ++n) {
        const int i = ids_a[labels_a[n]];
        const int j = ids_b[labels_b[n]];
        ++table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        ++row_sum[static_cast<std::size_t>(i)];
        ++col_sum[static_cast<std::size_t>(j)];
    }

    auto choose2 = [](std::int64_t m) { return 0.5 * static_cast<double>(m) * (m - 1); };
    double sum_cells = 0.0;
    for (const auto& row : table)
        for (std::int64_t cell : row) sum_cells += choose2(cell);
    double sum_rows = 0.0;
    for (std::int64_t m : row_sum) sum_rows += choose2(m);
    double sum_cols = 0.0;
    for (std::int64_t m : col_sum) sum_cols += choose2(m);

    const double pairs = choose2(static_cast<std::int64_t>(labels_a.size()));
    const double expected = sum_rows * sum_cols / pairs;
    const double maximum = 0.5 * (sum_rows + sum_cols);
    if (std::abs(maximum - expected) < 1e-12) {
        return (sum_cells == sum_rows && sum_rows == sum_cols) ? 1.0 : 0.0;
    }
    return (sum_cells - expected) / (maximum - expected);
}

struct EdgeConfusion {
    int true_positives = 0;
    int false_positives = 0;
    int false_negatives = 0;
};

inline EdgeConfusion edge_confusion(const WeightedDag& predicted, const WeightedDag& truth) {
    if (predicted.num_vars() != truth.num_vars()) {
        throw std::invalid_argument("edge metrics: graphs must share the variable count");
    }
    EdgeConfusion out;
    for (int i = 0; i < truth.num_vars(); ++i) {
        for (int j = 0; j < truth.num_vars(); ++j) {
            const bool pred = predicted.has_edge(i, j);
            const bool real = truth.has_edge(i, j);
            if (pred && real) ++out.true_positives;
            if (pred && !real) ++out.false_positives;
            if (!pred && real) ++out.false_negatives;
        }
    }
    return out;
}

struct EdgeMetrics {
    double fdr = 0.0;
    double tpr = 0.0;
};

// Directed comparison; no discoveries means no false discoveries.
inline EdgeMetrics edge_metrics(const WeightedDag& predicted, const WeightedDag& truth) {
    const EdgeConfusion c = edge_confusion(predicted, truth);
    EdgeMetrics out;
    out.fdr = static_cast<double>(c.false_positives) /
              std::max(c.false_positives + c.true_positives, 1);
    out.tpr = static_cast<double>(c.true_positives) /
              std::max(c.true_positives + c.false_negatives, 1);
    return out;
}

// Maximum-overlap assignment between predicted and true cluster ids on the
// contingency table; exact via bitmask DP over the smaller side.  Unmatched
// predicted clusters fall back to the majority true label of their members.
inline std::map<int, int> match_clusters(const std::vector<int>& pred_labels,
                                         const std::vector<int>& true_labels) {
    if (pred_labels.size() != true_labels.size()) {
        throw std::invalid_argument("match_clusters: label vectors must have equal length");
    }
    std::map<int, int> pred_ids, true_ids;
    std::vector<int> pred_names, true_names;
    for (int v : pred_labels) {
        if (pred_ids.emplace(v, static_cast<int>(pred_ids.size())).second)
            pred_names.push_back(v);
    }
    for (int v : true_labels) {
        if (true_ids.emplace(v, static_cast<int>(true_ids.size())).second)
            true_names.push_back(v);
    }
    const int kp = static_cast<int>(pred_ids.size());
    const int kt = static_cast<int>(true_ids.size());

    std::vector<std::vector<std::int64_t>> table(
        static_cast<std::size_t>(kp), std::vector<std::int64_t>(static_cast<std::size_t>(kt), 0));
    for (std::size_t n = 0; n < pred_labels.size(); ++n) {
        ++table[static_cast<std::size_t>(pred_ids[pred_labels[n]])]
               [static_cast<std::size_t>(true_ids[true_labels[n]])];
    }

    // DP over subsets of true clusters, assigning predicted clusters in order.
    const int small = kt;
    if (small > 24) throw std::invalid_argument("match_clusters: too many clusters");
    const std::size_t masks = static_cast<std::size_t>(1) << small;
    const double neg_inf = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best(static_cast<std::size_t>(kp) + 1,
                                          std::vector<double>(masks, neg_inf));
    std::vector<std::vector<int>> choice(static_cast<std::size_t>(kp) + 1,
                                         std::vector<int>(masks, -2));
    best[0][0] = 0.0;
    for (int p = 0; p < kp; ++p) {
        for (std::size_t mask = 0; mask < masks; ++mask) {
            if (best[static_cast<std::size_t>(p)][mask] == neg_inf) continue;
            const double base = best[static_cast<std::size_t>(p)][mask];
            // leave predicted cluster p unmatched
            if (base > best[static_cast<std::size_t>(p) + 1][mask]) {
                best[static_cast<std::size_t>(p) + 1][mask] = base;
                choice[static_cast<std::size_t>(p) + 1][mask] = -1;
            }
            for (int t = 0; t < kt; ++t) {
                if (mask & (static_cast<std::size_t>(1) << t)) continue;
                const std::size_t next = mask | (static_cast<std::size_t>(1) << t);
                const double cand =
                    base + static_cast<double>(table[static_cast<std::size_t>(p)]
                                                    [static_cast<std::size_t>(t)]);
                if (cand > best[static_cast<std::size_t>(p) + 1][next]) {
                    best[static_cast<std::size_t>(p) + 1][next] = cand;
                    choice[static_cast<std::size_t>(p) + 1][next] = t;
                }
            }
        }
    }

    std::size_t arg_mask = 0;
    double top = neg_inf;
    for (std::size_t mask = 0; mask < masks; ++mask) {
        if (best[static_cast<std::size_t>(kp)][mask] > top) {
            top = best[static_cast<std::size_t>(kp)][mask];
            arg_mask = mask;
        }
    }

    std::vector<int> assigned(static_cast<std::size_t>(kp), -1);
    std::size_t mask = arg_mask;
    for (int p = kp; p > 0; --p) {
        int t = choice[static_cast<std::size_t>(p)][mask];
        if (t == -2) {  // unreachable state; walk to the best predecessor
            t = -1;
        }
        assigned[static_cast<std::size_t>(p - 1)] = t;
        if (t >= 0) mask &= ~(static_cast<std::size_t>(1) << t);
    }

    std::map<int, int> mapping;
    for (int p = 0; p < kp; ++p) {
        int t = assigned[static_cast<std::size_t>(p)];
        if (t < 0) {  // majority true label among this cluster's members
            std::int64_t top_count = -1;
            for (int cand = 0; cand < kt; ++cand) {
                if (table[static_cast<std::size_t>(p)][static_cast<std::size_t>(cand)] >
                    top_count) {
                    top_count = table[static_cast<std::size_t>(p)][static_cast<std::size_t>(cand)];
                    t = cand;
                }
            }
        }
        mapping[pred_names[static_cast<std::size_t>(p)]] =
            true_names[static_cast<std::size_t>(t)];
    }
    return mapping;
}

struct RankSumResult {
    double u_statistic = 0.0;
    double p_value = 1.0;
    bool exact = false;
};

namespace detail {

inline std::vector<double> midranks(const std::vector<double>& pooled_sorted) {
    const std::size_t n = pooled_sorted.size();
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled_sorted[j + 1] == pooled_sorted[i]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[k] = rank;
        i = j + 1;
    }
    return ranks;
}

// Exact permutation distribution of the rank sum, conditional on the
// observed (possibly tied) ranks.  Two-sided by distance from the mean.
inline double exact_rank_sum_p(const std::vector<double>& ranks, std::size_t na,
                               double observed_u) {
    const std::size_t n = ranks.size();
    const double mean_u = 0.5 * static_cast<double>(na) * static_cast<double>(n - na);
    const double dist = std::abs(observed_u - mean_u) - 1e-9;

    std::vector<std::size_t> comb(na);
    std::iota(comb.begin(), comb.end(), 0);
    std::uint64_t total = 0;
    std::uint64_t extreme = 0;
    const double offset = 0.5 * static_cast<double>(na) * static_cast<double>(na + 1);
    for (;;) {
        double rank_sum = 0.0;
        for (std::size_t idx : comb) rank_sum += ranks[idx];
        const double u = rank_sum - offset;
        ++total;
        if (std::abs(u - mean_u) >= dist) ++extreme;

        // next combination
        std::size_t k = na;
        while (k > 0 && comb[k - 1] == n - na + k - 1) --k;
        if (k == 0) break;
        ++comb[k - 1];
        for (std::size_t j = k; j < na; ++j) comb[j] = comb[j - 1] + 1;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

}  // namespace detail

// Wilcoxon-Mann-Whitney rank-sum test with midrank ties.  Exact enumeration
// up to 20 pooled observations; otherwise the tie-corrected normal
// approximation with continuity correction.
inline RankSumResult wilcoxon_rank_sum(const std::vector<double>& sample_a,
                                       const std::vector<double>& sample_b) {
    if (sample_a.empty() || sample_b.empty()) {
        throw std::invalid_argument("wilcoxon_rank_sum: both samples must be nonempty");
    }
    const std::size_t na = sample_a.size();
    const std::size_t nb = sample_b.size();
    const std::size_t n = na + nb;

    std::vector<std::pair<double, int>> pooled;
    pooled.reserve(n);
    for (double v : sample_a) pooled.emplace_back(v, 0);
    for (double v : sample_b) pooled.emplace_back(v, 1);
    std::sort(pooled.begin(), pooled.end());

    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = pooled[i].first;
    const std::vector<double> ranks = detail::midranks(values);

    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (pooled[i].second == 0) rank_sum_a += ranks[i];
    }
    const double u = rank_sum_a - 0.5 * static_cast<double>(na) * static_cast<double>(na + 1);

    RankSumResult out;
    out.u_statistic = u;
    if (n <= 20) {
        out.exact = true;
        out.p_value = detail::exact_rank_sum_p(ranks, na, u);
        return out;
    }

    const double mean_u = 0.5 * static_cast<double>(na) * static_cast<double>(nb);
    // tie correction on the variance
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[j + 1] == values[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * (t * t - 1.0);
        i = j + 1;
    }
    const double nn = static_cast<double>(n);
    const double var_u = static_cast<double>(na) * static_cast<double>(nb) / 12.0 *
                         (nn + 1.0 - tie_term / (nn * (nn - 1.0)));
    if (var_u <= 0.0) {
        out.p_value = 1.0;
        return out;
    }
    const double num = std::max(std::abs(u - mean_u) - 0.5, 0.0);  // continuity correction
    const double zscore = num / std::sqrt(var_u);
    out.p_value = 2.0 * norm_cdf(-zscore);
    return out;
}

// Smoothed out/in degree ratio: (out+1)/(in+1) keeps sources finite.  The
// raw ratio (infinite for pure sources) is available behind the flag.
inline Eigen::VectorXd flow_ratio(const WeightedDag& graph, bool smoothed = true) {
    const int d = graph.num_vars();
    Eigen::VectorXd out(d);
    for (int v = 0; v < d; ++v) {
        const double out_deg = static_cast<double>(graph.out_degree(v));
        const double in_deg = static_cast<double>(graph.in_degree(v));
        if (smoothed) {
            out(v) = (out_deg + 1.0) / (in_deg + 1.0);
        } else {
            out(v) = in_deg == 0.0 ? std::numeric_limits<double>::infinity()
                                   : out_deg / in_deg;
        }
    }
    return out;
}

// Sum of absolute total causal effects on all downstream nodes.  Total
// effects are the path-sum expansion (I - B)^-1 - I, finite for DAGs.
inline Eigen::VectorXd downstream_influence(const WeightedDag& graph) {
    validate_dag(graph);
    const int d = graph.num_vars();
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd total = (identity - graph.weights).inverse() - identity;
    return total.cwiseAbs().rowwise().sum();
}

}  // namespace hcl

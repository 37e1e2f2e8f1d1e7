#pragma once

// The bi-directional iterative loop: per-cluster latent extraction, mixture
// subclustering, backbone-regularized structure fits per subcluster,
// NSHD-based merging with a consensus refit, and hierarchy bookkeeping until
// no novel cluster-specific structure emerges.

#include "hcl/dag.hpp"
#include "hcl/dataset.hpp"
#include "hcl/latent.hpp"
#include "hcl/stats.hpp"
#include "hcl/structure_learning.hpp"
#include "hcl/vbgmm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hcl {

struct EngineConfig {
    double delta = 1.0;            // NSHD at or below which subclusters merge
    double delta_conv = -1.0;      // novelty threshold; negative means delta/2
    double lambda1 = 0.1;          // penalty on backbone edges
    double lambda2 = 0.3;          // penalty off the backbone
    bool allow_lambda_override = false;
    int max_iterations = 100;      // T
    double eta = 20.0;             // consensus sigmoid sharpness
    double tau = 0.5;              // consensus sigmoid midpoint
    int min_cluster_size = 0;      // 0 means 3 * D
    LearnerConfig learner;
    double vb_alpha0 = 1e-2;
    int vb_max_components = 8;
    double vb_tol = 1e-4;
    int vb_max_iter = 200;
    int vb_restarts = 4;
    double mass_floor = 0.01;      // effective-component weight floor
    std::uint64_t seed = 0;

    double novelty_threshold() const { return delta_conv < 0.0 ? 0.5 * delta : delta_conv; }
};

enum class ClusterStatus { kActive, kMerged, kFinalized, kDissolved };

struct ClusterNode {
    int id = -1;
    std::vector<int> members;
    LearnedGraph graph;
    int parent = -1;
    ClusterStatus status = ClusterStatus::kActive;

    int size() const { return static_cast<int>(members.size()); }
};

struct ClusterSummary {
    int id = -1;
    int parent = -1;
    int size = 0;
    int edge_count = 0;
    std::string status;
};

struct IterationRecord {
    int iteration = 0;
    bool novel_structure = false;
    int merges = 0;
    int splits = 0;
    std::vector<ClusterSummary> clusters;
};

struct HclResult {
    int num_clusters = 1;
    std::vector<int> labels;          // 1..K, decreasing cluster size
    std::vector<WeightedDag> graphs;  // graphs[k] belongs to label k+1
    std::vector<IterationRecord> trace;
    bool converged = false;
};

// Structural Hamming distance over unordered variable pairs; a reversed edge
// counts as one discrepancy.
inline int shd(const WeightedDag& a, const WeightedDag& b) {
    if (a.num_vars() != b.num_vars()) {
        throw std::invalid_argument("shd: graphs must share the variable count");
    }
    auto status = [](const WeightedDag& g, int i, int j) {
        if (g.has_edge(i, j)) return 1;
        if (g.has_edge(j, i)) return 2;
        return 0;
    };
    int count = 0;
    for (int i = 0; i < a.num_vars(); ++i) {
        for (int j = i + 1; j < a.num_vars(); ++j) {
            if (status(a, i, j) != status(b, i, j)) ++count;
        }
    }
    return count;
}

// SHD normalized by the average edge count; two empty graphs are at
// distance zero.
inline double nshd(const WeightedDag& a, const WeightedDag& b) {
    const double avg_edges = 0.5 * static_cast<double>(a.edge_count() + b.edge_count());
    if (avg_edges == 0.0) return 0.0;
    return static_cast<double>(shd(a, b)) / avg_edges;
}

// Sample-size weighted edge-presence average across the graphs to merge.
inline Eigen::MatrixXd consensus_weights(const std::vector<WeightedDag>& graphs,
                                         const std::vector<int>& sizes) {
    if (graphs.empty() || graphs.size() != sizes.size()) {
        throw std::invalid_argument("consensus_weights: need one size per graph");
    }
    double total = 0.0;
    for (int s : sizes) {
        if (s <= 0) throw std::invalid_argument("consensus_weights: sizes must be positive");
        total += static_cast<double>(s);
    }
    const int d = graphs[0].num_vars();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t m = 0; m < graphs.size(); ++m) {
        if (graphs[m].num_vars() != d) {
            throw std::invalid_argument("consensus_weights: graph size mismatch");
        }
        const double share = static_cast<double>(sizes[m]) / total;
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                if (graphs[m].has_edge(i, j)) w(i, j) += share;
            }
        }
    }
    return w;
}

// Refit of a merged cluster with per-edge sigmoid penalties: consensus edges
// are nearly free, unsupported edges pay close to the full unit penalty.
inline LearnedGraph merge_refit(const MixedDataset& member_data, const Eigen::MatrixXd& consensus,
                                const EngineConfig& config) {
    const PenaltySpec penalty =
        PenaltySpec::per_edge_matrix(sigmoid_penalty_matrix(consensus, config.eta, config.tau));
    return fit_structure(member_data, penalty, config.learner);
}

// True when every graph produced this iteration sits within the novelty
// threshold of some existing cluster graph.
inline bool convergence_check(const std::vector<WeightedDag>& produced,
                              const std::vector<WeightedDag>& existing, double delta_conv) {
    for (const WeightedDag& g : produced) {
        double closest = std::numeric_limits<double>::infinity();
        for (const WeightedDag& e : existing) closest = std::min(closest, nshd(g, e));
        if (!(closest <= delta_conv)) return false;
    }
    return true;
}

namespace detail {

// Repeatedly merges the pair at smallest NSHD while it stays at or below
// delta, refitting the merged graph after each merge.  Ties break toward the
// lowest node ids.
inline int agglomerative_merge(std::vector<ClusterNode>& nodes, const MixedDataset& data,
                               const EngineConfig& config, int& next_id) {
    int merges = 0;
    while (nodes.size() > 1) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_a = 0, best_b = 0;
        for (std::size_t a = 0; a < nodes.size(); ++a) {
            for (std::size_t b = a + 1; b < nodes.size(); ++b) {
                const double dist = nshd(nodes[a].graph.dag, nodes[b].graph.dag);
                if (dist < best ||
                    (dist == best &&
                     std::min(nodes[a].id, nodes[b].id) <
                         std::min(nodes[best_a].id, nodes[best_b].id))) {
                    best = dist;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        if (!(best <= config.delta)) break;

        ClusterNode merged;
        merged.id = next_id++;
        merged.parent = nodes[best_a].parent == nodes[best_b].parent ? nodes[best_a].parent : -1;
        merged.members = nodes[best_a].members;
        merged.members.insert(merged.members.end(), nodes[best_b].members.begin(),
                              nodes[best_b].members.end());
        std::sort(merged.members.begin(), merged.members.end());

        const Eigen::MatrixXd w = consensus_weights(
            {nodes[best_a].graph.dag, nodes[best_b].graph.dag},
            {nodes[best_a].size(), nodes[best_b].size()});
        merged.graph = merge_refit(data.rows(merged.members), w, config);

        nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(best_b));
        nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(best_a));
        nodes.push_back(std::move(merged));
        ++merges;
    }
    return merges;
}

struct SplitOutcome {
    bool split = false;
    std::vector<std::vector<int>> groups;  // member indices into the full dataset
};

// Latent extraction + mixture subclustering for one node.  Groups below the
// minimum size are folded into the retained component with the highest
// responsibility; fewer than two viable groups means no split.
inline SplitOutcome split_node(const ClusterNode& node, const MixedDataset& data,
                               const EngineConfig& config, int min_size,
                               std::uint64_t seed) {
    SplitOutcome out;
    const MixedDataset subset = data.rows(node.members);
    const Eigen::MatrixXd z = latent_matrix(subset, node.graph.dag);
    const VbgmmPrior prior = default_vbgmm_prior(z, config.vb_alpha0);
    const VbgmmPosterior posterior =
        fit_vbgmm(z, prior, config.vb_max_components, config.vb_tol, config.vb_max_iter, seed,
                  config.vb_restarts);
    const std::vector<int> effective = effective_components(posterior, config.mass_floor);
    if (effective.size() < 2) return out;

    // Hard assignment restricted to effective components.
    const Eigen::MatrixXd& r = posterior.responsibilities;
    std::vector<int> assign(node.members.size(), effective[0]);
    for (std::size_t n = 0; n < node.members.size(); ++n) {
        double best = -1.0;
        for (int comp : effective) {
            if (r(static_cast<Eigen::Index>(n), comp) > best) {
                best = r(static_cast<Eigen::Index>(n), comp);
                assign[n] = comp;
            }
        }
    }

    std::map<int, std::vector<int>> by_comp;
    for (std::size_t n = 0; n < node.members.size(); ++n) {
        by_comp[assign[n]].push_back(static_cast<int>(n));
    }
    std::vector<int> kept;
    for (const auto& [comp, rows] : by_comp) {
        if (static_cast<int>(rows.size()) >= min_size) kept.push_back(comp);
    }
    if (kept.size() < 2) return out;

    // Reroute members of undersized groups to the kept component they favor.
    std::map<int, std::vector<int>> groups;
    for (int comp : kept) groups[comp] = {};
    for (std::size_t n = 0; n < node.members.size(); ++n) {
        int target = assign[n];
        if (groups.find(target) == groups.end()) {
            double best = -1.0;
            for (int comp : kept) {
                if (r(static_cast<Eigen::Index>(n), comp) > best) {
                    best = r(static_cast<Eigen::Index>(n), comp);
                    target = comp;
                }
            }
        }
        groups[target].push_back(node.members[n]);
    }

    out.split = true;
    for (auto& [comp, rows] : groups) {
        std::sort(rows.begin(), rows.end());
        out.groups.push_back(std::move(rows));
    }
    return out;
}

inline ClusterSummary summarize(const ClusterNode& node) {
    ClusterSummary s;
    s.id = node.id;
    s.parent = node.parent;
    s.size = node.size();
    s.edge_count = node.graph.dag.edge_count();
    switch (node.status) {
        case ClusterStatus::kActive: s.status = "active"; break;
        case ClusterStatus::kMerged: s.status = "merged"; break;
        case ClusterStatus::kFinalized: s.status = "finalized"; break;
        case ClusterStatus::kDissolved: s.status = "dissolved"; break;
    }
    return s;
}

}  // namespace detail

// Runs the full loop.  Deterministic given config.seed: node ids, split
// seeds, and merge order are all derived, never wall-clock or address based.
inline HclResult run_hcl(const MixedDataset& data, const EngineConfig& config) {
    validate_dataset(data);
    const int d = data.num_vars();
    const int n = data.num_samples();
    const int min_size = config.min_cluster_size > 0 ? config.min_cluster_size : 3 * d;
    if (config.delta <= 0.0) throw std::invalid_argument("engine: delta must be positive");
    if (config.max_iterations < 1) throw std::invalid_argument("engine: T must be >= 1");
    const double delta_conv = config.novelty_threshold();

    HclResult result;
    int next_id = 0;

    // Initial backbone: uniform lasso on the full dataset.
    ClusterNode root;
    root.id = next_id++;
    root.members.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) root.members[static_cast<std::size_t>(i)] = i;
    root.graph = fit_structure(data, PenaltySpec::uniform(config.lambda2), config.learner);

    std::vector<ClusterNode> active{std::move(root)};
    std::vector<ClusterNode> finalized;

    for (int t = 1; t <= config.max_iterations; ++t) {
        IterationRecord record;
        record.iteration = t;

        std::vector<WeightedDag> existing;
        for (const ClusterNode& node : active) existing.push_back(node.graph.dag);
        for (const ClusterNode& node : finalized) existing.push_back(node.graph.dag);

        // Member sets and graphs of parents dissolved this iteration; used to
        // stop split/merge ping-pong when a merge reconstitutes its parent.
        std::vector<std::pair<std::vector<int>, WeightedDag>> dissolved_parents;

        std::vector<ClusterNode> candidates;
        std::vector<ClusterNode> settled;
        std::vector<WeightedDag> produced;

        std::sort(active.begin(), active.end(),
                  [](const ClusterNode& a, const ClusterNode& b) { return a.id < b.id; });

        for (ClusterNode& node : active) {
            if (node.size() < 2 * min_size) {
                node.status = ClusterStatus::kFinalized;
                settled.push_back(std::move(node));
                continue;
            }
            const std::uint64_t split_seed =
                derive_seed(config.seed, static_cast<std::uint64_t>(t) * 100003ULL +
                                             static_cast<std::uint64_t>(node.id));
            const detail::SplitOutcome outcome =
                detail::split_node(node, data, config, min_size, split_seed);
            if (!outcome.split) {
                node.status = ClusterStatus::kFinalized;
                settled.push_back(std::move(node));
                continue;
            }

            record.splits += 1;
            const PenaltySpec backbone_penalty = PenaltySpec::with_backbone(
                config.lambda1, config.lambda2, node.graph.dag, config.allow_lambda_override);
            std::vector<ClusterNode> children;
            for (const std::vector<int>& group : outcome.groups) {
                ClusterNode child;
                child.id = next_id++;
                child.parent = node.id;
                child.members = group;
                child.graph = fit_structure(data.rows(group), backbone_penalty, config.learner);
                children.push_back(std::move(child));
            }

            record.merges += detail::agglomerative_merge(children, data, config, next_id);

            if (children.size() == 1) {
                // Subclusters collapsed back into one; the parent has no
                // internal heterogeneity beyond the novelty threshold.
                ClusterNode& rejoined = children.front();
                if (nshd(rejoined.graph.dag, node.graph.dag) <= delta_conv) {
                    node.graph = rejoined.graph;  // keep the refined estimate
                    node.status = ClusterStatus::kFinalized;
                    settled.push_back(std::move(node));
                } else {
                    rejoined.members = node.members;
                    rejoined.parent = node.parent;
                    produced.push_back(rejoined.graph.dag);
                    candidates.push_back(std::move(rejoined));
                }
                continue;
            }

            node.status = ClusterStatus::kDissolved;
            dissolved_parents.emplace_back(node.members, node.graph.dag);
            for (ClusterNode& child : children) {
                produced.push_back(child.graph.dag);
                candidates.push_back(std::move(child));
            }
        }

        // Bottom-up pass: new subclusters may merge with each other or pull in
        // previously settled clusters, which then re-enter the active set.
        std::vector<ClusterNode> pool = std::move(candidates);
        std::set<int> settled_ids;
        for (ClusterNode& node : finalized) {
            settled_ids.insert(node.id);
            pool.push_back(std::move(node));
        }
        for (ClusterNode& node : settled) {
            settled_ids.insert(node.id);
            pool.push_back(std::move(node));
        }
        record.merges += detail::agglomerative_merge(pool, data, config, next_id);

        std::vector<ClusterNode> next_active;
        std::vector<ClusterNode> next_finalized;
        for (ClusterNode& node : pool) {
            if (settled_ids.count(node.id)) {  // untouched by the merge pass
                node.status = ClusterStatus::kFinalized;
                next_finalized.push_back(std::move(node));
                continue;
            }
            // A merge that reconstitutes a dissolved parent with an unchanged
            // structure is not progress; settle it.
            bool reconstituted = false;
            for (const auto& [members, graph] : dissolved_parents) {
                if (members == node.members && nshd(node.graph.dag, graph) <= delta_conv) {
                    reconstituted = true;
                    break;
                }
            }
            if (reconstituted) {
                node.status = ClusterStatus::kFinalized;
                next_finalized.push_back(std::move(node));
            } else {
                node.status = ClusterStatus::kActive;
                next_active.push_back(std::move(node));
            }
        }

        record.novel_structure = !convergence_check(produced, existing, delta_conv);
        for (const ClusterNode& node : next_active) record.clusters.push_back(detail::summarize(node));
        for (const ClusterNode& node : next_finalized)
            record.clusters.push_back(detail::summarize(node));
        result.trace.push_back(std::move(record));

        active = std::move(next_active);
        finalized = std::move(next_finalized);

        if (active.empty() || (t >= 2 && !result.trace.back().novel_structure)) {
            result.converged = true;
            break;
        }
    }

    std::vector<ClusterNode> final_nodes;
    for (ClusterNode& node : active) {
        node.status = ClusterStatus::kFinalized;
        final_nodes.push_back(std::move(node));
    }
    for (ClusterNode& node : finalized) final_nodes.push_back(std::move(node));

    std::sort(final_nodes.begin(), final_nodes.end(), [](const ClusterNode& a, const ClusterNode& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a.members.front() < b.members.front();
    });

    result.num_clusters = static_cast<int>(final_nodes.size());
    result.labels.assign(static_cast<std::size_t>(n), 0);
    for (std::size_t k = 0; k < final_nodes.size(); ++k) {
        for (int member : final_nodes[k].members) {
            result.labels[static_cast<std::size_t>(member)] = static_cast<int>(k) + 1;
        }
        result.graphs.push_back(final_nodes[k].graph.dag);
    }
    return result;
}

}  // namespace hcl

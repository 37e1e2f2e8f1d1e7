#pragma once

// Weighted directed acyclic graph over D variables.  weights(i, j) holds the
// direct effect of variable i on variable j; a zero entry means no edge.

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hcl {

struct Edge {
    int from = 0;
    int to = 0;
    double weight = 0.0;
};

class CycleError : public std::runtime_error {
public:
    explicit CycleError(std::vector<int> cycle)
        : std::runtime_error(format(cycle)), cycle_(std::move(cycle)) {}

    const std::vector<int>& cycle() const { return cycle_; }

private:
    static std::string format(const std::vector<int>& cycle) {
        std::ostringstream os;
        os << "graph contains a cycle:";
        for (int v : cycle) os << " " << v;
        return os.str();
    }

    std::vector<int> cycle_;
};

struct WeightedDag {
    Eigen::MatrixXd weights;

    WeightedDag() : weights(Eigen::MatrixXd::Zero(0, 0)) {}
    explicit WeightedDag(int num_vars)
        : weights(Eigen::MatrixXd::Zero(num_vars, num_vars)) {}
    explicit WeightedDag(Eigen::MatrixXd w) : weights(std::move(w)) {
        if (weights.rows() != weights.cols()) {
            throw std::invalid_argument("WeightedDag: weight matrix must be square");
        }
    }

    int num_vars() const { return static_cast<int>(weights.rows()); }

    bool has_edge(int from, int to) const { return weights(from, to) != 0.0; }

    int edge_count() const {
        int count = 0;
        for (int i = 0; i < num_vars(); ++i)
            for (int j = 0; j < num_vars(); ++j)
                if (weights(i, j) != 0.0) ++count;
        return count;
    }

    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        out.reserve(static_cast<std::size_t>(edge_count()));
        for (int i = 0; i < num_vars(); ++i)
            for (int j = 0; j < num_vars(); ++j)
                if (weights(i, j) != 0.0) out.push_back({i, j, weights(i, j)});
        return out;
    }

    std::vector<int> parents_of(int j) const {
        std::vector<int> out;
        for (int i = 0; i < num_vars(); ++i)
            if (weights(i, j) != 0.0) out.push_back(i);
        return out;
    }

    int in_degree(int v) const {
        int d = 0;
        for (int i = 0; i < num_vars(); ++i)
            if (weights(i, v) != 0.0) ++d;
        return d;
    }

    int out_degree(int v) const {
        int d = 0;
        for (int j = 0; j < num_vars(); ++j)
            if (weights(v, j) != 0.0) ++d;
        return d;
    }
};

namespace detail {

// Iterative DFS that returns one cycle in edge order, or empty when the
// graph is acyclic.
inline std::vector<int> find_cycle(const Eigen::MatrixXd& w) {
    const int d = static_cast<int>(w.rows());
    enum : char { kWhite, kGray, kBlack };
    std::vector<char> color(static_cast<std::size_t>(d), kWhite);
    std::vector<int> path;

    for (int root = 0; root < d; ++root) {
        if (color[static_cast<std::size_t>(root)] != kWhite) continue;
        std::vector<std::pair<int, int>> stack{{root, 0}};  // vertex, next child
        color[static_cast<std::size_t>(root)] = kGray;
        path.push_back(root);
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            int child = -1;
            while (next < d) {
                if (w(v, next) != 0.0) {
                    child = next;
                    ++next;
                    break;
                }
                ++next;
            }
            if (child < 0) {
                color[static_cast<std::size_t>(v)] = kBlack;
                path.pop_back();
                stack.pop_back();
                continue;
            }
            if (color[static_cast<std::size_t>(child)] == kGray) {
                const auto it = std::find(path.begin(), path.end(), child);
                return std::vector<int>(it, path.end());
            }
            if (color[static_cast<std::size_t>(child)] == kWhite) {
                color[static_cast<std::size_t>(child)] = kGray;
                path.push_back(child);
                stack.emplace_back(child, 0);
            }
        }
    }
    return {};
}

}  // namespace detail

// Kahn's algorithm.  Throws CycleError naming one cycle when the support of
// the weight matrix is not acyclic.
inline std::vector<int> topological_order(const Eigen::MatrixXd& weights) {
    const int d = static_cast<int>(weights.rows());
    std::vector<int> in_deg(static_cast<std::size_t>(d), 0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (weights(i, j) != 0.0) ++in_deg[static_cast<std::size_t>(j)];

    std::vector<int> queue;
    for (int v = 0; v < d; ++v)
        if (in_deg[static_cast<std::size_t>(v)] == 0) queue.push_back(v);

    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(d));
    std::size_t head = 0;
    while (head < queue.size()) {
        const int v = queue[head++];
        order.push_back(v);
        for (int j = 0; j < d; ++j) {
            if (weights(v, j) != 0.0 && --in_deg[static_cast<std::size_t>(j)] == 0) {
                queue.push_back(j);
            }
        }
    }
    if (static_cast<int>(order.size()) != d) {
        auto cycle = detail::find_cycle(weights);
        if (cycle.empty()) throw std::logic_error("topological_order: inconsistent cycle state");
        throw CycleError(std::move(cycle));
    }
    return order;
}

inline std::vector<int> topological_order(const WeightedDag& dag) {
    return topological_order(dag.weights);
}

inline bool is_acyclic(const Eigen::MatrixXd& weights) {
    try {
        topological_order(weights);
        return true;
    } catch (const CycleError&) {
        return false;
    }
}

inline bool is_acyclic(const WeightedDag& dag) { return is_acyclic(dag.weights); }

// Removes the smallest-|weight| edge on a detected cycle until the graph is
// acyclic.  Deterministic: the cycle found first by the topological scan is
// repaired first.
inline Eigen::MatrixXd break_cycles(Eigen::MatrixXd weights) {
    for (;;) {
        std::vector<int> cycle;
        try {
            topological_order(weights);
            return weights;
        } catch (const CycleError& err) {
            cycle = err.cycle();
        }
        if (cycle.empty()) throw std::logic_error("break_cycles: cycle without vertices");
        int best_i = cycle.back();
        int best_j = cycle.front();
        double best_w = std::abs(weights(best_i, best_j));
        for (std::size_t k = 0; k + 1 < cycle.size(); ++k) {
            const int i = cycle[k];
            const int j = cycle[k + 1];
            if (std::abs(weights(i, j)) < best_w) {
                best_w = std::abs(weights(i, j));
                best_i = i;
                best_j = j;
            }
        }
        weights(best_i, best_j) = 0.0;
    }
}

inline void validate_dag(const WeightedDag& dag) {
    for (int v = 0; v < dag.num_vars(); ++v) {
        if (dag.weights(v, v) != 0.0) {
            throw std::invalid_argument("WeightedDag: self-loop at variable " + std::to_string(v));
        }
    }
    topological_order(dag);  // throws CycleError when cyclic
}

}  // namespace hcl

#include "hcl/dag.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

using namespace hcl;

namespace {

WeightedDag chain3() {
    WeightedDag dag(3);
    dag.weights(0, 1) = 1.0;
    dag.weights(1, 2) = 1.0;
    return dag;
}

// Oracle: checks an order by verifying every edge points forward.
bool order_respects_edges(const WeightedDag& dag, const std::vector<int>& order) {
    std::vector<int> position(static_cast<std::size_t>(dag.num_vars()), 0);
    for (std::size_t p = 0; p < order.size(); ++p) {
        position[static_cast<std::size_t>(order[p])] = static_cast<int>(p);
    }
    for (const Edge& e : dag.edges()) {
        if (position[static_cast<std::size_t>(e.from)] >=
            position[static_cast<std::size_t>(e.to)]) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("topological order of the empty graph is the identity") {
    WeightedDag dag(4);
    const std::vector<int> order = topological_order(dag);
    REQUIRE(order == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("chain forces the only valid order") {
    const std::vector<int> order = topological_order(chain3());
    REQUIRE(order == std::vector<int>{0, 1, 2});
}

TEST_CASE("cycle detection names a cycle") {
    WeightedDag dag(3);
    dag.weights(0, 1) = 1.0;
    dag.weights(1, 0) = 1.0;
    REQUIRE_FALSE(is_acyclic(dag));
    try {
        topological_order(dag);
        FAIL("expected CycleError");
    } catch (const CycleError& err) {
        REQUIRE(err.cycle().size() == 2);
        const auto& cycle = err.cycle();
        REQUIRE(std::count(cycle.begin(), cycle.end(), 0) == 1);
        REQUIRE(std::count(cycle.begin(), cycle.end(), 1) == 1);
    }
}

TEST_CASE("self loop rejected by validation") {
    WeightedDag dag(2);
    dag.weights(1, 1) = 0.5;
    REQUIRE_THROWS_AS(validate_dag(dag), std::invalid_argument);
}

TEST_CASE("break_cycles removes the weakest edge on a cycle") {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
    w(0, 1) = 2.0;
    w(1, 2) = 1.5;
    w(2, 0) = 0.1;  // weakest on the 0->1->2->0 cycle
    const Eigen::MatrixXd repaired = break_cycles(w);
    REQUIRE(repaired(2, 0) == 0.0);
    REQUIRE(repaired(0, 1) == 2.0);
    REQUIRE(repaired(1, 2) == 1.5);
    REQUIRE(is_acyclic(repaired));
}

TEST_CASE("edge queries") {
    WeightedDag dag(3);
    dag.weights(0, 1) = 1.0;
    dag.weights(0, 2) = -0.7;
    REQUIRE(dag.edge_count() == 2);
    REQUIRE(dag.out_degree(0) == 2);
    REQUIRE(dag.in_degree(2) == 1);
    REQUIRE(dag.parents_of(1) == std::vector<int>{0});
}

TEST_CASE("random DAGs always topologically sortable", "[property]") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 2 + static_cast<int>(rng() % 9);
        WeightedDag dag(d);
        // random strictly-upper-triangular support under a random permutation
        std::vector<int> perm(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) perm[static_cast<std::size_t>(i)] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int a = 0; a < d; ++a) {
            for (int b = a + 1; b < d; ++b) {
                if (rng() % 3 == 0) {
                    dag.weights(perm[static_cast<std::size_t>(a)],
                                perm[static_cast<std::size_t>(b)]) = 1.0;
                }
            }
        }
        const std::vector<int> order = topological_order(dag);
        REQUIRE(order_respects_edges(dag, order));
    }
}

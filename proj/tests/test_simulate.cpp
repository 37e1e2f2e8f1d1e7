#include "hcl/simulate.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "hcl/stats.hpp"

using namespace hcl;

namespace {

// OLS of one column on a set of parent columns, intercept included; the
// regression oracle used to verify coefficient recovery.
Eigen::VectorXd ols(const Eigen::MatrixXd& values, int child, const std::vector<int>& parents) {
    const Eigen::Index n = values.rows();
    Eigen::MatrixXd design(n, static_cast<Eigen::Index>(parents.size()) + 1);
    design.col(0).setOnes();
    for (std::size_t k = 0; k < parents.size(); ++k) {
        design.col(static_cast<Eigen::Index>(k) + 1) = values.col(parents[k]);
    }
    return (design.transpose() * design).ldlt().solve(design.transpose() * values.col(child));
}

}  // namespace

TEST_CASE("ER DAG has the requested edge count and is acyclic") {
    const WeightedDag dag = generate_er_dag(10, 10, 42);
    REQUIRE(dag.num_vars() == 10);
    REQUIRE(dag.edge_count() == 10);
    REQUIRE_NOTHROW(topological_order(dag));
}

TEST_CASE("ER DAG with zero edges is empty") {
    const WeightedDag dag = generate_er_dag(5, 0, 1);
    REQUIRE(dag.edge_count() == 0);
}

TEST_CASE("complete 3-node DAG is acyclic for any seed") {
    // With D=3, m=3 every forward pair of the hidden ordering carries an
    // edge; enumerating all 3! orderings shows each is a valid DAG shape.
    for (std::uint64_t seed = 0; seed < 24; ++seed) {
        const WeightedDag dag = generate_er_dag(3, 3, seed);
        REQUIRE(dag.edge_count() == 3);
        REQUIRE_NOTHROW(topological_order(dag));
        // one root, one middle, one sink
        std::multiset<std::pair<int, int>> degrees;
        for (int v = 0; v < 3; ++v) degrees.insert({dag.in_degree(v), dag.out_degree(v)});
        REQUIRE(degrees == std::multiset<std::pair<int, int>>{{0, 2}, {1, 1}, {2, 0}});
    }
}

TEST_CASE("edge count beyond the maximum is rejected") {
    REQUIRE_THROWS_AS(generate_er_dag(4, 7, 3), std::out_of_range);
    REQUIRE_NOTHROW(generate_er_dag(4, 6, 3));
}

TEST_CASE("sampled weights lie in the two intervals") {
    const WeightedDag dag = sample_edge_weights(generate_er_dag(12, 30, 5), 6);
    for (const Edge& e : dag.edges()) {
        REQUIRE(std::abs(e.weight) >= 0.5);
        REQUIRE(std::abs(e.weight) <= 2.0);
    }
    REQUIRE(dag.edge_count() == 30);
}

TEST_CASE("weight sampling leaves the empty graph untouched") {
    const WeightedDag dag = sample_edge_weights(generate_er_dag(5, 0, 1), 2);
    REQUIRE(dag.weights.isZero(0.0));
}

TEST_CASE("mean absolute weight matches Uniform[0.5,2]") {
    // E|w| = 1.25 for the magnitude distribution; checked at 10000 draws.
    double sum = 0.0;
    int count = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const WeightedDag dag =
            sample_edge_weights(generate_er_dag(15, 100, seed), derive_seed(77, seed));
        for (const Edge& e : dag.edges()) {
            sum += std::abs(e.weight);
            ++count;
        }
    }
    REQUIRE(count == 10000);
    REQUIRE_THAT(sum / count, Catch::Matchers::WithinAbs(1.25, 0.05));
}

TEST_CASE("empty graph simulation reproduces the noise moments") {
    ScmSpec spec{WeightedDag(4), VariableSchema::all_continuous(4), Eigen::VectorXd::Ones(4)};
    const MixedDataset data = simulate(spec, 10000, 11);
    for (int j = 0; j < 4; ++j) {
        const double mean = data.values.col(j).mean();
        const double var = (data.values.col(j).array() - mean).square().mean();
        REQUIRE_THAT(mean, Catch::Matchers::WithinAbs(0.0, 0.05));
        REQUIRE_THAT(var, Catch::Matchers::WithinAbs(1.0, 0.1));
    }
}

TEST_CASE("chain variance follows the linear model") {
    // X2 = X1 + U2 with unit noise gives Var(X2) = 2.
    WeightedDag dag(2);
    dag.weights(0, 1) = 1.0;
    ScmSpec spec{dag, VariableSchema::all_continuous(2), Eigen::VectorXd::Ones(2)};
    const MixedDataset data = simulate(spec, 10000, 12);
    const double mean = data.values.col(1).mean();
    const double var = (data.values.col(1).array() - mean).square().mean();
    REQUIRE_THAT(var, Catch::Matchers::WithinAbs(2.0, 0.15));
}

TEST_CASE("root binary node is a fair coin") {
    WeightedDag dag(1);
    VariableSchema schema{{VariableKind::kBinary}};
    ScmSpec spec{dag, schema, Eigen::VectorXd::Ones(1)};
    const MixedDataset data = simulate(spec, 10000, 13);
    REQUIRE_THAT(data.values.col(0).mean(), Catch::Matchers::WithinAbs(0.5, 0.03));
}

TEST_CASE("cyclic spec rejected") {
    WeightedDag dag(2);
    dag.weights(0, 1) = 1.0;
    dag.weights(1, 0) = 1.0;
    ScmSpec spec{dag, VariableSchema::all_continuous(2), Eigen::VectorXd::Ones(2)};
    REQUIRE_THROWS_AS(simulate(spec, 10, 1), CycleError);
}

TEST_CASE("OLS on true parents recovers the coefficients") {
    const WeightedDag dag = sample_edge_weights(generate_er_dag(8, 12, 31), 32);
    ScmSpec spec{dag, VariableSchema::all_continuous(8), Eigen::VectorXd::Ones(8)};
    const MixedDataset data = simulate(spec, 10000, 33);
    for (int j = 0; j < 8; ++j) {
        const std::vector<int> parents = dag.parents_of(j);
        if (parents.empty()) continue;
        const Eigen::VectorXd beta = ols(data.values, j, parents);
        for (std::size_t k = 0; k < parents.size(); ++k) {
            REQUIRE_THAT(beta(static_cast<Eigen::Index>(k) + 1),
                         Catch::Matchers::WithinAbs(dag.weights(parents[k], j), 0.05));
        }
    }
}

TEST_CASE("binary mechanism matches the probit probability") {
    // X0 continuous root, X1 = 1{b * X0 + U > 0}; holding X0 = x the oracle
    // P(X1 = 1 | x) = Phi(b x / sigma).  Empirical check on a fine slice.
    WeightedDag dag(2);
    dag.weights(0, 1) = 1.2;
    VariableSchema schema{{VariableKind::kContinuous, VariableKind::kBinary}};
    ScmSpec spec{dag, schema, Eigen::VectorXd::Ones(2)};
    const MixedDataset data = simulate(spec, 50000, 14);

    const double x_low = 0.4;
    const double x_high = 0.6;
    double ones = 0.0;
    double total = 0.0;
    double x_sum = 0.0;
    for (int n = 0; n < data.num_samples(); ++n) {
        const double x = data.values(n, 0);
        if (x < x_low || x > x_high) continue;
        ones += data.values(n, 1);
        x_sum += x;
        total += 1.0;
    }
    REQUIRE(total > 1000.0);
    const double predicted = norm_cdf(1.2 * (x_sum / total));
    REQUIRE_THAT(ones / total, Catch::Matchers::WithinAbs(predicted, 0.02));
}

TEST_CASE("identical seeds give bit-identical datasets") {
    const BenchmarkData a = generate_benchmark(dataset1_spec(200, 99));
    const BenchmarkData b = generate_benchmark(dataset1_spec(200, 99));
    REQUIRE(a.data.values == b.data.values);
    REQUIRE(a.data.labels == b.data.labels);
    for (std::size_t k = 0; k < a.truth.size(); ++k) {
        REQUIRE(a.truth[k].weights == b.truth[k].weights);
    }
}

TEST_CASE("dataset 1 layout") {
    const BenchmarkData bench = generate_benchmark(dataset1_spec(500, 3));
    REQUIRE(bench.data.num_samples() == 1000);
    REQUIRE(bench.data.num_vars() == 10);
    REQUIRE(bench.truth.size() == 2);
    REQUIRE(bench.paper_grid);
    for (const WeightedDag& g : bench.truth) {
        REQUIRE(g.edge_count() == 10);
        REQUIRE_NOTHROW(topological_order(g));
    }
}

TEST_CASE("dataset 2 label histogram matches the proportions") {
    const BenchmarkData bench = generate_benchmark(dataset2_spec(50, 500, 4));
    std::map<int, int> histogram;
    for (int label : *bench.data.labels) ++histogram[label];
    REQUIRE(histogram == std::map<int, int>{{0, 50}, {1, 500}});
    REQUIRE(bench.paper_grid);
}

TEST_CASE("dataset 5 with one class is homogeneous") {
    const BenchmarkData bench = generate_benchmark(dataset5_spec(1, 5));
    REQUIRE(bench.truth.size() == 1);
    REQUIRE(bench.data.num_samples() == 500);
    const std::vector<int>& labels = *bench.data.labels;
    REQUIRE(std::set<int>(labels.begin(), labels.end()).size() == 1);
}

TEST_CASE("off-grid parameters flagged but generated") {
    const BenchmarkData bench = generate_benchmark(dataset1_spec(123, 8));
    REQUIRE_FALSE(bench.paper_grid);
    REQUIRE(bench.data.num_samples() == 246);
}

TEST_CASE("property: generated benchmark DAGs are acyclic across seeds", "[property]") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const BenchmarkData bench = generate_benchmark(dataset5_spec(3, seed));
        for (const WeightedDag& g : bench.truth) REQUIRE_NOTHROW(topological_order(g));
    }
}

#include "hcl/structure_learning.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "hcl/simulate.hpp"

using namespace hcl;

namespace {

Eigen::MatrixXd random_zero_diag(int d, std::mt19937_64& rng, double scale = 0.8) {
    std::uniform_real_distribution<double> unif(-scale, scale);
    Eigen::MatrixXd b(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) b(i, j) = i == j ? 0.0 : unif(rng);
    return b;
}

Eigen::MatrixXd gaussian_matrix(int n, int d, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = gauss(rng);
    return x;
}

// Central finite differences of a scalar function of B.
template <typename F>
Eigen::MatrixXd finite_difference(const F& f, Eigen::MatrixXd b, double step) {
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(b.rows(), b.cols());
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            const double saved = b(i, j);
            b(i, j) = saved + step;
            const double up = f(b);
            b(i, j) = saved - step;
            const double down = f(b);
            b(i, j) = saved;
            grad(i, j) = (up - down) / (2.0 * step);
        }
    }
    return grad;
}

MixedDataset standardized_gaussian_dataset(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    MixedDataset data;
    data.schema = VariableSchema::all_continuous(d);
    data.values = gaussian_matrix(n, d, rng);
    for (int j = 0; j < d; ++j) {
        const double mean = data.values.col(j).mean();
        data.values.col(j).array() -= mean;
        const double sd = std::sqrt(data.values.col(j).squaredNorm() / n);
        data.values.col(j) /= sd;
    }
    return data;
}

}  // namespace

TEST_CASE("loss at B = 0 on standardized data is D/2") {
    const MixedDataset data = standardized_gaussian_dataset(400, 6, 21);
    const auto [loss, grad] = loss_and_gradient(Eigen::MatrixXd::Zero(6, 6), data.values);
    REQUIRE_THAT(loss, Catch::Matchers::WithinAbs(3.0, 1e-9));
    REQUIRE(grad.diagonal().isZero(0.0));
}

TEST_CASE("loss vanishes at the true weights on noise-free data") {
    WeightedDag dag(3);
    dag.weights(0, 1) = 1.5;
    dag.weights(1, 2) = -0.8;
    ScmSpec spec{dag, VariableSchema::all_continuous(3),
                 Eigen::VectorXd::Constant(3, 1e-8)};
    const MixedDataset data = simulate(spec, 500, 22);
    const auto [loss, grad] = loss_and_gradient(dag.weights, data.values);
    (void)grad;
    REQUIRE(loss < 1e-12);
}

TEST_CASE("loss gradient matches central finite differences") {
    std::mt19937_64 rng(23);
    const Eigen::MatrixXd x = gaussian_matrix(200, 5, rng);
    const Eigen::MatrixXd b = random_zero_diag(5, rng);
    const auto [loss, grad] = loss_and_gradient(b, x);
    (void)loss;
    const Eigen::MatrixXd fd = finite_difference(
        [&](const Eigen::MatrixXd& m) { return loss_and_gradient(m, x).first; }, b, 1e-5);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
            if (i == j) continue;  // diagonal is projected out, not differentiated
            REQUIRE_THAT(grad(i, j), Catch::Matchers::WithinAbs(fd(i, j), 1e-5));
        }
    }
}

TEST_CASE("acyclicity of the zero matrix is zero") {
    const auto [h, grad] = acyclicity_value(Eigen::MatrixXd::Zero(4, 4));
    REQUIRE_THAT(h, Catch::Matchers::WithinAbs(0.0, 1e-12));
    REQUIRE(grad.isZero(0.0));
}

TEST_CASE("two-cycle acyclicity value has the closed form") {
    // exp(B o B) for the symmetric unit pair is [[cosh 1, sinh 1], [sinh 1, cosh 1]].
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2, 2);
    b(0, 1) = 1.0;
    b(1, 0) = 1.0;
    const auto [h, grad] = acyclicity_value(b);
    REQUIRE_THAT(h, Catch::Matchers::WithinAbs(2.0 * std::cosh(1.0) - 2.0, 1e-10));
    REQUIRE_THAT(h, Catch::Matchers::WithinAbs(1.0862, 1e-4));
    REQUIRE_THAT(grad(0, 1), Catch::Matchers::WithinAbs(2.0 * std::sinh(1.0), 1e-10));
}

TEST_CASE("strictly upper triangular support has zero acyclicity") {
    std::mt19937_64 rng(24);
    Eigen::MatrixXd b = random_zero_diag(6, rng, 1.5);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j <= i; ++j) b(i, j) = 0.0;
    const auto [h, grad] = acyclicity_value(b);
    (void)grad;
    REQUIRE(std::abs(h) < 1e-10);
}

TEST_CASE("gradients match finite differences on random matrices", "[property]") {
    std::mt19937_64 rng(25);
    const Eigen::MatrixXd x = gaussian_matrix(100, 4, rng);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::MatrixXd b = random_zero_diag(4, rng);

        const auto [loss, loss_grad] = loss_and_gradient(b, x);
        (void)loss;
        const Eigen::MatrixXd loss_fd = finite_difference(
            [&](const Eigen::MatrixXd& m) { return loss_and_gradient(m, x).first; }, b, 1e-5);

        const auto [h, h_grad] = acyclicity_value(b);
        (void)h;
        const Eigen::MatrixXd h_fd = finite_difference(
            [&](const Eigen::MatrixXd& m) { return acyclicity_value(m).first; }, b, 1e-5);

        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                if (i != j) {
                    const double denom = std::max(1.0, std::abs(loss_fd(i, j)));
                    REQUIRE(std::abs(loss_grad(i, j) - loss_fd(i, j)) / denom < 1e-4);
                }
                const double denom_h = std::max(1.0, std::abs(h_fd(i, j)));
                REQUIRE(std::abs(h_grad(i, j) - h_fd(i, j)) / denom_h < 1e-4);
            }
        }
    }
}

TEST_CASE("penalty matrix modes") {
    WeightedDag backbone(3);
    backbone.weights(0, 1) = 1.0;

    SECTION("uniform") {
        const Eigen::MatrixXd m = penalty_matrix(PenaltySpec::uniform(0.2), 3);
        REQUIRE(m(0, 1) == 0.2);
        REQUIRE(m(2, 1) == 0.2);
        REQUIRE(m(1, 1) == kForbiddenPenalty);
    }
    SECTION("backbone picks lambda1 on and lambda2 off the edge set") {
        const Eigen::MatrixXd m =
            penalty_matrix(PenaltySpec::with_backbone(0.1, 0.3, backbone), 3);
        REQUIRE(m(0, 1) == 0.1);
        REQUIRE(m(1, 0) == 0.3);
        REQUIRE(m(2, 0) == 0.3);
        REQUIRE(m(0, 0) == kForbiddenPenalty);
    }
    SECTION("lambda ordering enforced unless overridden") {
        REQUIRE_THROWS_AS(penalty_matrix(PenaltySpec::with_backbone(0.3, 0.1, backbone), 3),
                          std::invalid_argument);
        REQUIRE_NOTHROW(
            penalty_matrix(PenaltySpec::with_backbone(0.3, 0.1, backbone, true), 3));
    }
}

TEST_CASE("sigmoid penalties hit the anchor values") {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 2);
    w(0, 1) = 0.5;  // consensus exactly at tau
    w(1, 0) = 1.0;  // full consensus
    const Eigen::MatrixXd m = sigmoid_penalty_matrix(w, 20.0, 0.5);
    REQUIRE_THAT(m(0, 1), Catch::Matchers::WithinAbs(0.5, 1e-12));
    REQUIRE_THAT(m(1, 0), Catch::Matchers::WithinAbs(1.0 / (1.0 + std::exp(10.0)), 1e-12));
    REQUIRE_THAT(m(1, 0), Catch::Matchers::WithinAbs(4.5398e-5, 1e-8));
}

TEST_CASE("threshold keeps only entries at or above epsilon") {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2, 2);
    b(0, 1) = 0.29;
    b(1, 0) = 0.31;
    const WeightedDag dag = threshold_graph(b, 0.3);
    REQUIRE_FALSE(dag.has_edge(0, 1));
    REQUIRE(dag.has_edge(1, 0));

    const WeightedDag empty = threshold_graph(b, 0.5);
    REQUIRE(empty.edge_count() == 0);
}

TEST_CASE("thresholded graphs are always acyclic", "[property]") {
    std::mt19937_64 rng(26);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::MatrixXd b = random_zero_diag(6, rng, 1.2);
        const WeightedDag dag = threshold_graph(b, 0.4);
        REQUIRE_NOTHROW(topological_order(dag));
    }
}

TEST_CASE("two-node chain recovered with the right weight") {
    WeightedDag dag(2);
    dag.weights(0, 1) = 1.5;
    ScmSpec spec{dag, VariableSchema::all_continuous(2), Eigen::VectorXd::Ones(2)};
    const MixedDataset data = simulate(spec, 2000, 27);

    const LearnedGraph fit = fit_structure(data, PenaltySpec::uniform(0.1));
    REQUIRE(fit.converged);
    REQUIRE(fit.dag.edge_count() == 1);
    REQUIRE(fit.dag.has_edge(0, 1));
    REQUIRE_THAT(fit.dag.weights(0, 1), Catch::Matchers::WithinAbs(1.5, 0.15));
}

TEST_CASE("pure noise yields at most one spurious edge in most seeds") {
    int clean_runs = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ScmSpec spec{WeightedDag(6), VariableSchema::all_continuous(6),
                     Eigen::VectorXd::Ones(6)};
        const MixedDataset data = simulate(spec, 2000, derive_seed(28, seed));
        const LearnedGraph fit = fit_structure(data, PenaltySpec::uniform(0.1));
        if (fit.dag.edge_count() <= 1) ++clean_runs;
    }
    REQUIRE(clean_runs >= 9);
}

TEST_CASE("huge off-backbone penalty confines edges to the backbone") {
    const WeightedDag truth = sample_edge_weights(generate_er_dag(8, 10, 29), 30);
    ScmSpec spec{truth, VariableSchema::all_continuous(8), Eigen::VectorXd::Ones(8)};
    const MixedDataset data = simulate(spec, 1000, 31);

    const LearnedGraph fit =
        fit_structure(data, PenaltySpec::with_backbone(0.0, 1e6, truth));
    for (const Edge& e : fit.dag.edges()) {
        REQUIRE(truth.has_edge(e.from, e.to));
    }
}

TEST_CASE("increasing uniform lambda never adds edges", "[property]") {
    const std::vector<double> grid{0.05, 0.1, 0.2, 0.3, 0.5};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const WeightedDag truth = sample_edge_weights(
            generate_er_dag(8, 10, derive_seed(40, seed)), derive_seed(41, seed));
        ScmSpec spec{truth, VariableSchema::all_continuous(8), Eigen::VectorXd::Ones(8)};
        const MixedDataset data = simulate(spec, 500, derive_seed(42, seed));
        int previous = std::numeric_limits<int>::max();
        for (double lambda : grid) {
            const LearnedGraph fit = fit_structure(data, PenaltySpec::uniform(lambda));
            REQUIRE(fit.dag.edge_count() <= previous);
            previous = fit.dag.edge_count();
        }
    }
}

TEST_CASE("backbone penalty suppresses false edges versus uniform", "[slow]") {
    // Small-sample regime where spurious edges actually occur; the true edge
    // set serves as the backbone, and the uniform penalty sits strictly
    // between lambda1 and lambda2.
    const double lambda1 = 0.1;
    const double lambda2 = 0.3;
    const double lambda_mid = 0.2;
    double false_backbone = 0.0;
    double false_uniform = 0.0;
    const int runs = 100;
    for (std::uint64_t seed = 0; seed < runs; ++seed) {
        const WeightedDag truth = sample_edge_weights(
            generate_er_dag(10, 10, derive_seed(50, seed)), derive_seed(51, seed));
        ScmSpec spec{truth, VariableSchema::all_continuous(10), Eigen::VectorXd::Ones(10)};
        const MixedDataset data = simulate(spec, 120, derive_seed(52, seed));

        const LearnedGraph with_backbone =
            fit_structure(data, PenaltySpec::with_backbone(lambda1, lambda2, truth));
        const LearnedGraph with_uniform =
            fit_structure(data, PenaltySpec::uniform(lambda_mid));

        for (const Edge& e : with_backbone.dag.edges()) {
            if (!truth.has_edge(e.from, e.to)) false_backbone += 1.0;
        }
        for (const Edge& e : with_uniform.dag.edges()) {
            if (!truth.has_edge(e.from, e.to)) false_uniform += 1.0;
        }
    }
    INFO("mean false edges: backbone " << false_backbone / runs << " vs uniform "
                                       << false_uniform / runs);
    REQUIRE(false_backbone < false_uniform);
}

TEST_CASE("degenerate column excluded from parent candidacy") {
    MixedDataset data = standardized_gaussian_dataset(300, 4, 60);
    data.values.col(2).setConstant(3.14);
    const LearnedGraph fit = fit_structure(data, PenaltySpec::uniform(0.1));
    REQUIRE_FALSE(fit.warnings.empty());
    for (const Edge& e : fit.dag.edges()) REQUIRE(e.from != 2);
}

TEST_CASE("few samples produce a warning but still fit") {
    const MixedDataset data = standardized_gaussian_dataset(4, 5, 61);
    const LearnedGraph fit = fit_structure(data, PenaltySpec::uniform(0.3));
    bool warned = false;
    for (const std::string& w : fit.warnings) {
        if (w.find("fewer samples") != std::string::npos) warned = true;
    }
    REQUIRE(warned);
}

TEST_CASE("fit output is always acyclic", "[property]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const WeightedDag truth = sample_edge_weights(
            generate_er_dag(7, 12, derive_seed(70, seed)), derive_seed(71, seed));
        ScmSpec spec{truth, VariableSchema::all_continuous(7), Eigen::VectorXd::Ones(7)};
        const MixedDataset data = simulate(spec, 400, derive_seed(72, seed));
        const LearnedGraph fit = fit_structure(data, PenaltySpec::uniform(0.1));
        REQUIRE_NOTHROW(topological_order(fit.dag));
    }
}

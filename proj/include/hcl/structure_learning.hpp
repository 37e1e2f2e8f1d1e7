#pragma once

// Continuous-optimization structure learning.  Fits a weighted adjacency
// matrix to a data subset by minimizing least-squares reconstruction loss
// plus a weighted L1 penalty, with acyclicity enforced through an augmented
// Lagrangian on h(B) = tr(exp(B o B)) - D.  The inner subproblem is solved
// with proximal gradient steps (FISTA with backtracking); the weighted L1
// term is handled exactly by entrywise soft thresholding.

#include "hcl/dag.hpp"
#include "hcl/dataset.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hcl {

// Effectively-infinite per-edge penalty; keeps self-loops and excluded
// parents out of the support.
inline constexpr double kForbiddenPenalty = 1e12;

struct PenaltySpec {
    enum class Mode { kUniform, kBackbone, kPerEdge };

    Mode mode = Mode::kUniform;
    double lambda = 0.1;             // uniform mode
    double lambda1 = 0.1;            // backbone edges
    double lambda2 = 0.3;            // off-backbone edges
    Eigen::MatrixXd backbone;        // nonzero entry = backbone edge
    Eigen::MatrixXd per_edge;        // explicit per-edge lambdas
    bool allow_lambda_override = false;

    static PenaltySpec uniform(double lambda) {
        PenaltySpec spec;
        spec.mode = Mode::kUniform;
        spec.lambda = lambda;
        return spec;
    }

    static PenaltySpec with_backbone(double lambda1, double lambda2,
                                     const WeightedDag& backbone_graph,
                                     bool allow_override = false) {
        PenaltySpec spec;
        spec.mode = Mode::kBackbone;
        spec.lambda1 = lambda1;
        spec.lambda2 = lambda2;
        spec.backbone = backbone_graph.weights;
        spec.allow_lambda_override = allow_override;
        return spec;
    }

    static PenaltySpec per_edge_matrix(Eigen::MatrixXd lambdas) {
        PenaltySpec spec;
        spec.mode = Mode::kPerEdge;
        spec.per_edge = std::move(lambdas);
        return spec;
    }
};

inline void validate_penalty(const PenaltySpec& spec, int num_vars) {
    switch (spec.mode) {
        case PenaltySpec::Mode::kUniform:
            if (spec.lambda < 0.0) throw std::invalid_argument("penalty: lambda must be >= 0");
            break;
        case PenaltySpec::Mode::kBackbone:
            if (spec.lambda1 < 0.0 || spec.lambda2 < 0.0) {
                throw std::invalid_argument("penalty: lambdas must be >= 0");
            }
            if (!(spec.lambda1 < spec.lambda2) && !spec.allow_lambda_override) {
                throw std::invalid_argument(
                    "penalty: backbone mode requires lambda1 < lambda2 "
                    "(set allow_lambda_override to force)");
            }
            if (spec.backbone.rows() != num_vars || spec.backbone.cols() != num_vars) {
                throw std::invalid_argument("penalty: backbone shape mismatch");
            }
            break;
        case PenaltySpec::Mode::kPerEdge:
            if (spec.per_edge.rows() != num_vars || spec.per_edge.cols() != num_vars) {
                throw std::invalid_argument("penalty: per-edge matrix shape mismatch");
            }
            for (int v = 0; v < num_vars; ++v) {
                if (spec.per_edge(v, v) != 0.0) {
                    throw std::invalid_argument("penalty: per-edge matrix must have zero diagonal");
                }
            }
            if ((spec.per_edge.array() < 0.0).any()) {
                throw std::invalid_argument("penalty: per-edge lambdas must be >= 0");
            }
            break;
    }
}

// Expands a penalty spec into the D x D matrix of per-edge lambdas used by
// the optimizer.  The diagonal is always set to kForbiddenPenalty.
inline Eigen::MatrixXd penalty_matrix(const PenaltySpec& spec, int num_vars) {
    validate_penalty(spec, num_vars);
    Eigen::MatrixXd out(num_vars, num_vars);
    switch (spec.mode) {
        case PenaltySpec::Mode::kUniform:
            out.setConstant(spec.lambda);
            break;
        case PenaltySpec::Mode::kBackbone:
            for (int i = 0; i < num_vars; ++i)
                for (int j = 0; j < num_vars; ++j)
                    out(i, j) = spec.backbone(i, j) != 0.0 ? spec.lambda1 : spec.lambda2;
            break;
        case PenaltySpec::Mode::kPerEdge:
            out = spec.per_edge;
            break;
    }
    for (int v = 0; v < num_vars; ++v) out(v, v) = kForbiddenPenalty;
    return out;
}

// Per-edge penalties from consensus weights: lambda_ij = sigmoid(-eta(w-tau)),
// near zero for strongly supported edges and near one for unsupported ones.
inline Eigen::MatrixXd sigmoid_penalty_matrix(const Eigen::MatrixXd& consensus,
                                              double eta, double tau) {
    Eigen::MatrixXd out(consensus.rows(), consensus.cols());
    for (Eigen::Index i = 0; i < consensus.rows(); ++i) {
        for (Eigen::Index j = 0; j < consensus.cols(); ++j) {
            out(i, j) = 1.0 / (1.0 + std::exp(eta * (consensus(i, j) - tau)));
        }
    }
    out.diagonal().setZero();
    return out;
}

struct LearnerConfig {
    double edge_threshold = 0.3;   // prune below this absolute weight
    double rho_init = 1.0;         // initial augmented-Lagrangian penalty
    double rho_growth = 10.0;      // multiplier when h stalls
    double rho_max = 1e16;
    int max_outer_iter = 100;
    double h_tol = 1e-8;           // acyclicity target
    double inner_tol = 1e-7;       // relative objective change
    int max_inner_iter = 600;
};

struct LearnedGraph {
    WeightedDag dag;               // thresholded, cycle-free, data-scale weights
    double loss_value = 0.0;       // least-squares loss at the final support
    bool converged = false;
    std::vector<std::string> warnings;
};

// loss = (1/2N) ||X - XB||_F^2, gradient = -(1/N) X'(X - XB) with zero
// diagonal.  X is used as given; fit_structure standardizes beforehand.
inline std::pair<double, Eigen::MatrixXd> loss_and_gradient(const Eigen::MatrixXd& b,
                                                            const Eigen::MatrixXd& x) {
    const double n = static_cast<double>(x.rows());
    const Eigen::MatrixXd residual = x - x * b;
    const double loss = 0.5 / n * residual.squaredNorm();
    Eigen::MatrixXd grad = -(x.transpose() * residual) / n;
    grad.diagonal().setZero();
    return {loss, grad};
}

// Smooth acyclicity measure h(B) = tr(exp(B o B)) - D and its gradient
// exp(B o B)' o 2B.  h is zero exactly when the support of B is acyclic.
inline std::pair<double, Eigen::MatrixXd> acyclicity_value(const Eigen::MatrixXd& b) {
    if (b.rows() != b.cols()) {
        throw std::invalid_argument("acyclicity_value: matrix must be square");
    }
    const Eigen::MatrixXd hadamard = b.cwiseProduct(b);
    const Eigen::MatrixXd expm = hadamard.exp();
    const double h = expm.trace() - static_cast<double>(b.rows());
    const Eigen::MatrixXd grad = expm.transpose().cwiseProduct(2.0 * b);
    return {h, grad};
}

// Prunes entries below the threshold and repairs any cycle left behind by
// removing the weakest edge on it.
inline WeightedDag threshold_graph(const Eigen::MatrixXd& b, double epsilon) {
    Eigen::MatrixXd pruned = b;
    for (Eigen::Index i = 0; i < pruned.rows(); ++i) {
        for (Eigen::Index j = 0; j < pruned.cols(); ++j) {
            if (std::abs(pruned(i, j)) < epsilon) pruned(i, j) = 0.0;
        }
    }
    pruned.diagonal().setZero();
    return WeightedDag(break_cycles(std::move(pruned)));
}

namespace detail {

// Loss and gradient in Gram form; equivalent to loss_and_gradient but O(D^3)
// per evaluation once G = X'X/N is cached.
struct GramLoss {
    Eigen::MatrixXd gram;
    double trace = 0.0;

    explicit GramLoss(const Eigen::MatrixXd& x)
        : gram(x.transpose() * x / static_cast<double>(x.rows())), trace(gram.trace()) {}

    double value(const Eigen::MatrixXd& b) const {
        const Eigen::MatrixXd gb = gram * b;
        return 0.5 * (trace - 2.0 * (gram.cwiseProduct(b)).sum() + (b.cwiseProduct(gb)).sum());
    }

    Eigen::MatrixXd gradient(const Eigen::MatrixXd& b) const {
        Eigen::MatrixXd grad = gram * b - gram;
        grad.diagonal().setZero();
        return grad;
    }
};

inline double weighted_l1(const Eigen::MatrixXd& b, const Eigen::MatrixXd& lambdas) {
    double out = 0.0;
    for (Eigen::Index i = 0; i < b.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j)
            if (i != j) out += lambdas(i, j) * std::abs(b(i, j));
    return out;
}

inline Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& b, const Eigen::MatrixXd& lambdas,
                                      double step) {
    Eigen::MatrixXd out(b.rows(), b.cols());
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            const double t = lambdas(i, j) * step;
            const double v = b(i, j);
            out(i, j) = v > t ? v - t : (v < -t ? v + t : 0.0);
        }
    }
    out.diagonal().setZero();
    return out;
}

// FISTA with backtracking and function-value restart for
//   min_B  gram_loss(B) + 0.5 rho h(B)^2 + alpha h(B) + sum lambda_ij |B_ij|.
inline Eigen::MatrixXd fista_minimize(const GramLoss& loss, const Eigen::MatrixXd& lambdas,
                                      double rho, double alpha, Eigen::MatrixXd b,
                                      const LearnerConfig& config) {
    auto smooth = [&](const Eigen::MatrixXd& m) -> std::pair<double, Eigen::MatrixXd> {
        const auto [h, h_grad] = acyclicity_value(m);
        const double value = loss.value(m) + 0.5 * rho * h * h + alpha * h;
        Eigen::MatrixXd grad = loss.gradient(m) + (rho * h + alpha) * h_grad;
        grad.diagonal().setZero();
        return {value, grad};
    };

    auto objective = [&](const Eigen::MatrixXd& m) {
        const auto [h, h_grad] = acyclicity_value(m);
        (void)h_grad;
        return loss.value(m) + 0.5 * rho * h * h + alpha * h + weighted_l1(m, lambdas);
    };

    Eigen::MatrixXd y = b;
    Eigen::MatrixXd b_prev = b;
    double momentum = 1.0;
    double step = 1.0;
    double f_prev = objective(b);

    for (int iter = 0; iter < config.max_inner_iter; ++iter) {
        const auto [fy, grad_y] = smooth(y);

        Eigen::MatrixXd b_next;
        for (;;) {
            b_next = soft_threshold(y - step * grad_y, lambdas, step);
            const Eigen::MatrixXd diff = b_next - y;
            const double quad = fy + grad_y.cwiseProduct(diff).sum() +
                                0.5 / step * diff.squaredNorm();
            const auto [h_next, g_unused] = acyclicity_value(b_next);
            (void)g_unused;
            const double f_next =
                loss.value(b_next) + 0.5 * rho * h_next * h_next + alpha * h_next;
            if (f_next <= quad + 1e-12 || step < 1e-12) break;
            step *= 0.5;
        }

        const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        y = b_next + (momentum - 1.0) / momentum_next * (b_next - b_prev);
        y.diagonal().setZero();

        const double f_curr = objective(b_next);
        if (f_curr > f_prev) {  // restart momentum when the bound overshoots
            y = b_next;
            momentum = 1.0;
        } else {
            momentum = momentum_next;
        }

        const double denom = std::max(1.0, std::abs(f_prev));
        const bool settled = std::abs(f_prev - f_curr) / denom < config.inner_tol;
        b_prev = b_next;
        f_prev = std::min(f_prev, f_curr);
        b = b_next;
        if (settled && iter > 2) break;
    }
    return b;
}

struct Standardized {
    Eigen::MatrixXd x;            // centered, continuous columns scaled
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;        // 1 for binary columns
    std::vector<int> degenerate;  // zero-variance columns
};

inline Standardized standardize(const MixedDataset& data) {
    const int n = data.num_samples();
    const int d = data.num_vars();
    Standardized out;
    out.x = data.values;
    out.mean = data.values.colwise().mean();
    out.scale = Eigen::VectorXd::Ones(d);
    for (int j = 0; j < d; ++j) {
        out.x.col(j).array() -= out.mean(j);
        const double var = out.x.col(j).squaredNorm() / static_cast<double>(n);
        if (var < 1e-24) {
            out.degenerate.push_back(j);
            continue;
        }
        if (!data.schema.is_binary(j)) {
            out.scale(j) = std::sqrt(var);
            out.x.col(j) /= out.scale(j);
        }
    }
    return out;
}

// Unpenalized least-squares refit of each column on its selected parents.
inline Eigen::MatrixXd refit_on_support(const Eigen::MatrixXd& x,
                                        const Eigen::MatrixXd& support) {
    const int d = static_cast<int>(x.cols());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        std::vector<int> parents;
        for (int i = 0; i < d; ++i)
            if (i != j && support(i, j) != 0.0) parents.push_back(i);
        if (parents.empty()) continue;
        Eigen::MatrixXd xp(x.rows(), static_cast<Eigen::Index>(parents.size()));
        for (std::size_t k = 0; k < parents.size(); ++k) xp.col(static_cast<Eigen::Index>(k)) = x.col(parents[k]);
        const Eigen::VectorXd beta =
            (xp.transpose() * xp + 1e-10 * Eigen::MatrixXd::Identity(xp.cols(), xp.cols()))
                .ldlt()
                .solve(xp.transpose() * x.col(j));
        for (std::size_t k = 0; k < parents.size(); ++k) out(parents[k], j) = beta(static_cast<Eigen::Index>(k));
    }
    return out;
}

}  // namespace detail

// Fits a weighted DAG to the data subset under the given penalty.  The fit
// runs on centered data with continuous columns scaled to unit variance;
// the support is selected there (threshold applies on that scale), then the
// surviving edges are refit by unpenalized least squares and reported in the
// scale of the input data.
inline LearnedGraph fit_structure(const MixedDataset& data, const PenaltySpec& penalty,
                                  const LearnerConfig& config = LearnerConfig{}) {
    validate_dataset(data);
    const int d = data.num_vars();
    const int n = data.num_samples();
    validate_penalty(penalty, d);

    LearnedGraph result;
    if (n < d + 1) {
        result.warnings.push_back("fewer samples (" + std::to_string(n) +
                                  ") than variables + 1; estimates may be unstable");
    }

    detail::Standardized std_data = detail::standardize(data);
    Eigen::MatrixXd lambdas = penalty_matrix(penalty, d);
    for (int j : std_data.degenerate) {
        lambdas.row(j).setConstant(kForbiddenPenalty);  // no zero-variance parents
        result.warnings.push_back("column " + std::to_string(j) +
                                  " has zero variance; excluded from parent candidacy");
    }

    const detail::GramLoss loss(std_data.x);

    // Continuation: solve a short path of scaled-up penalties down to the
    // target, warm-starting each stage.  Keeps the nonconvex solve on one
    // stable branch so supports shrink along the path instead of jumping
    // between local optima.
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d, d);
    bool constraint_met = false;
    for (double scale : {8.0, 4.0, 2.0, 1.0}) {
        const Eigen::MatrixXd scaled =
            (lambdas * scale).cwiseMin(kForbiddenPenalty);
        double rho = config.rho_init;
        double lagrange = 0.0;
        double h_prev = std::numeric_limits<double>::infinity();
        constraint_met = false;
        for (int outer = 0; outer < config.max_outer_iter; ++outer) {
            b = detail::fista_minimize(loss, scaled, rho, lagrange, std::move(b), config);
            const auto [h, h_grad] = acyclicity_value(b);
            (void)h_grad;
            if (h < config.h_tol) {
                constraint_met = true;
                break;
            }
            if (h > 0.25 * h_prev) rho = std::min(rho * config.rho_growth, config.rho_max);
            lagrange += rho * h;
            h_prev = h;
        }
    }
    result.converged = constraint_met;
    if (!constraint_met) {
        result.warnings.push_back("augmented Lagrangian did not reach the acyclicity tolerance");
    }

    const WeightedDag pruned = threshold_graph(b, config.edge_threshold);

    // Final pass on the surviving support, reported in input-data scale.
    Eigen::MatrixXd final_support = (pruned.weights.array() != 0.0).cast<double>();
    Eigen::MatrixXd final_std = detail::refit_on_support(std_data.x, final_support);
    result.loss_value = loss.value(final_std);

    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (final_std(i, j) != 0.0) {
                raw(i, j) = final_std(i, j) * std_data.scale(j) / std_data.scale(i);
            }
        }
    }
    result.dag = WeightedDag(std::move(raw));
    return result;
}

}  // namespace hcl

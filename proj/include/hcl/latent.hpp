#pragma once

// Equivalent latent representation.  Each sample is mapped to the expected
// value of its exogenous-noise proxy given the observation and a shared
// causal backbone: residuals for continuous variables, truncated-Gaussian
// conditional means for binary ones.

#include "hcl/dag.hpp"
#include "hcl/dataset.hpp"
#include "hcl/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hcl {

struct NoiseParams {
    Eigen::VectorXd mu_hat;     // per-variable mean of the noise proxy
    Eigen::VectorXd sigma_hat;  // per-variable scale, strictly positive
};

inline constexpr double kSigmaFloor = 1e-3;

// Linear predictor under the backbone: xhat_j = sum_i b_ij x_i.  For binary
// variables this is the latent index before thresholding.
inline Eigen::MatrixXd predict_values(const MixedDataset& data, const WeightedDag& backbone) {
    if (backbone.num_vars() != data.num_vars()) {
        throw std::invalid_argument("predict_values: backbone size does not match data");
    }
    validate_dag(backbone);
    return data.values * backbone.weights;
}

// Residual moments for continuous variables; the fixed standard-normal
// convention for binary ones (their generative noise scale).
inline NoiseParams estimate_noise_params(const MixedDataset& data, const WeightedDag& backbone) {
    if (data.num_samples() < 2) {
        throw std::invalid_argument("estimate_noise_params: need at least two samples");
    }
    const Eigen::MatrixXd predicted = predict_values(data, backbone);
    const int d = data.num_vars();
    const double n = static_cast<double>(data.num_samples());

    NoiseParams params;
    params.mu_hat = Eigen::VectorXd::Zero(d);
    params.sigma_hat = Eigen::VectorXd::Ones(d);
    for (int j = 0; j < d; ++j) {
        if (data.schema.is_binary(j)) continue;
        const Eigen::VectorXd residual = data.values.col(j) - predicted.col(j);
        const double mean = residual.mean();
        const double var = (residual.array() - mean).square().sum() / n;
        params.mu_hat(j) = mean;
        params.sigma_hat(j) = std::max(std::sqrt(var), kSigmaFloor);
    }
    return params;
}

inline double phi_continuous(double x, double xhat) { return x - xhat; }

// Conditional mean of the exogenous variable given the thresholded outcome.
// With alpha = (-xhat - mu) / sigma the noise exceeds -xhat exactly when the
// observation is 1, so
//   E[U | X=1] = mu + sigma * pdf(alpha) / cdf(-alpha)
//   E[U | X=0] = mu - sigma * pdf(alpha) / cdf(alpha)
// Both branches evaluate through the Mills-ratio guard so extreme predictors
// never produce 0/0.
inline double phi_binary(double x, double xhat, double mu, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("phi_binary: sigma must be positive");
    if (x != 0.0 && x != 1.0) throw std::invalid_argument("phi_binary: x must be 0 or 1");
    const double alpha = (-xhat - mu) / sigma;
    if (x == 1.0) {
        return mu + sigma * inverse_mills(alpha);
    }
    return mu - sigma * inverse_mills(-alpha);
}

// Applies the per-column map.  Continuous columns are centered by the
// estimated residual mean so every latent coordinate is mean-zero under the
// fitted backbone; binary columns use the (0, 1) noise convention.
inline Eigen::MatrixXd latent_matrix(const MixedDataset& data, const WeightedDag& backbone) {
    const Eigen::MatrixXd predicted = predict_values(data, backbone);
    const NoiseParams params = estimate_noise_params(data, backbone);

    const int n = data.num_samples();
    const int d = data.num_vars();
    Eigen::MatrixXd z(n, d);
    for (int j = 0; j < d; ++j) {
        if (data.schema.is_binary(j)) {
            for (int row = 0; row < n; ++row) {
                z(row, j) = phi_binary(data.values(row, j), predicted(row, j),
                                       params.mu_hat(j), params.sigma_hat(j));
            }
        } else {
            for (int row = 0; row < n; ++row) {
                z(row, j) = phi_continuous(data.values(row, j), predicted(row, j)) -
                            params.mu_hat(j);
            }
        }
    }
    return z;
}

}  // namespace hcl

#pragma once

// Variational Bayesian Gaussian mixture with a Dirichlet prior over mixing
// weights and Gaussian-Wishart priors per component.  W parameterizes the
// precision (the printed Mahalanobis update only coheres that way), so
// E[Lambda_i] = nu_i W_i.  Coordinate ascent on responsibilities and
// posterior parameters maximizes the usual conjugate ELBO; small Dirichlet
// concentrations prune redundant components.

#include "hcl/stats.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace hcl {

struct VbgmmPrior {
    double alpha0 = 1e-2;   // Dirichlet concentration
    double beta0 = 1.0;     // mean-precision scale
    double nu0 = 1.0;       // Wishart degrees of freedom, >= D
    Eigen::VectorXd m0;     // prior mean
    Eigen::MatrixXd w0;     // Wishart scale, symmetric positive definite
};

inline void validate_prior(const VbgmmPrior& prior, int dim) {
    if (!(prior.alpha0 > 0.0)) throw std::invalid_argument("vbgmm: alpha0 must be > 0");
    if (!(prior.beta0 > 0.0)) throw std::invalid_argument("vbgmm: beta0 must be > 0");
    if (prior.nu0 < static_cast<double>(dim)) {
        throw std::invalid_argument("vbgmm: nu0 must be >= dimension");
    }
    if (prior.m0.size() != dim || prior.w0.rows() != dim || prior.w0.cols() != dim) {
        throw std::invalid_argument("vbgmm: prior shape mismatch");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(prior.w0);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("vbgmm: W0 must be positive definite");
    }
}

// Data-scaled prior: m0 at the sample mean and E[Lambda] = nu0 W0 matching
// the inverse sample covariance.
inline VbgmmPrior default_vbgmm_prior(const Eigen::MatrixXd& z, double alpha0 = 1e-2) {
    const int d = static_cast<int>(z.cols());
    const double n = static_cast<double>(z.rows());
    VbgmmPrior prior;
    prior.alpha0 = alpha0;
    prior.beta0 = 1.0;
    prior.nu0 = static_cast<double>(d);
    prior.m0 = z.colwise().mean();
    Eigen::MatrixXd centered = z.rowwise() - prior.m0.transpose();
    Eigen::MatrixXd cov = centered.transpose() * centered / std::max(n, 1.0);
    const double jitter = std::max(1e-8, 1e-6 * cov.diagonal().mean());
    cov += jitter * Eigen::MatrixXd::Identity(d, d);
    prior.w0 = cov.inverse() / prior.nu0;
    return prior;
}

struct VbgmmPosterior {
    Eigen::VectorXd alpha;             // Dirichlet parameters, one per component
    Eigen::VectorXd beta;
    Eigen::VectorXd nu;
    Eigen::MatrixXd means;             // I x D, row i = m_i
    std::vector<Eigen::MatrixXd> w;    // precision-Wishart scale matrices
    Eigen::MatrixXd responsibilities;  // N x I, rows sum to one
    bool jittered = false;             // a scatter matrix needed regularizing

    int num_components() const { return static_cast<int>(alpha.size()); }
    int dim() const { return static_cast<int>(means.cols()); }

    Eigen::VectorXd mixing_weights() const { return alpha / alpha.sum(); }
};

namespace detail {

// E[log |Lambda_i|] under the Wishart posterior.
inline double expected_log_det(const Eigen::MatrixXd& w, double nu) {
    const int d = static_cast<int>(w.rows());
    Eigen::LLT<Eigen::MatrixXd> llt(w);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("vbgmm: W matrix lost positive definiteness");
    }
    double log_det = 0.0;
    for (int i = 0; i < d; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
    double out = d * std::log(2.0) + log_det;
    for (int i = 0; i < d; ++i) out += digamma(0.5 * (nu - i));
    return out;
}

inline double log_wishart_b(const Eigen::MatrixXd& w, double nu) {
    const int d = static_cast<int>(w.rows());
    Eigen::LLT<Eigen::MatrixXd> llt(w);
    double log_det = 0.0;
    for (int i = 0; i < d; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
    return -0.5 * nu * log_det - 0.5 * nu * d * std::log(2.0) - log_multigamma(0.5 * nu, d);
}

inline double log_dirichlet_c(const Eigen::VectorXd& alpha) {
    double out = std::lgamma(alpha.sum());
    for (Eigen::Index i = 0; i < alpha.size(); ++i) out -= std::lgamma(alpha(i));
    return out;
}

}  // namespace detail

// Responsibility update: log r_ni collects the expected log mixing weight and
// the expected Gaussian log density, then rows normalize in log space.
inline Eigen::MatrixXd e_step(const Eigen::MatrixXd& z, const VbgmmPosterior& post) {
    const int n = static_cast<int>(z.rows());
    const int d = static_cast<int>(z.cols());
    const int k = post.num_components();

    const double psi_alpha_sum = digamma(post.alpha.sum());
    Eigen::MatrixXd log_r(n, k);
    for (int i = 0; i < k; ++i) {
        const double log_pi = digamma(post.alpha(i)) - psi_alpha_sum;
        const double log_det = detail::expected_log_det(post.w[static_cast<std::size_t>(i)],
                                                        post.nu(i));
        const Eigen::MatrixXd centered = z.rowwise() - post.means.row(i);
        const Eigen::MatrixXd wc = centered * post.w[static_cast<std::size_t>(i)];
        const Eigen::VectorXd mahal = (centered.array() * wc.array()).rowwise().sum();
        const double base = log_pi + 0.5 * log_det - 0.5 * d * kLog2Pi -
                            0.5 * d / post.beta(i);
        log_r.col(i) = (-0.5 * post.nu(i) * mahal.array() + base).matrix();
    }

    for (int row = 0; row < n; ++row) {
        const double peak = log_r.row(row).maxCoeff();
        const double norm =
            peak + std::log((log_r.row(row).array() - peak).exp().sum());
        log_r.row(row) = (log_r.row(row).array() - norm).exp();
    }
    return log_r;
}

// Posterior parameter update from normalized responsibilities.
inline VbgmmPosterior m_step(const Eigen::MatrixXd& z, const Eigen::MatrixXd& r,
                             const VbgmmPrior& prior) {
    const int d = static_cast<int>(z.cols());
    const int k = static_cast<int>(r.cols());
    validate_prior(prior, d);

    VbgmmPosterior post;
    post.alpha.resize(k);
    post.beta.resize(k);
    post.nu.resize(k);
    post.means.resize(k, d);
    post.w.resize(static_cast<std::size_t>(k));
    post.responsibilities = r;

    const Eigen::MatrixXd w0_inv = prior.w0.inverse();
    for (int i = 0; i < k; ++i) {
        const Eigen::VectorXd weights = r.col(i);
        const double count = weights.sum();
        post.alpha(i) = prior.alpha0 + count;
        post.beta(i) = prior.beta0 + count;
        post.nu(i) = prior.nu0 + count;

        Eigen::VectorXd mean_i = prior.m0;
        Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
        if (count > 1e-12) {
            mean_i = (z.transpose() * weights) / count;
            const Eigen::MatrixXd centered = z.rowwise() - mean_i.transpose();
            scatter = centered.transpose() * weights.asDiagonal() * centered;
        }
        post.means.row(i) = (prior.beta0 * prior.m0 + count * mean_i) / post.beta(i);

        const Eigen::VectorXd dev = mean_i - prior.m0;
        Eigen::MatrixXd w_inv = w0_inv + scatter +
                                prior.beta0 * count / (prior.beta0 + count) *
                                    (dev * dev.transpose());
        Eigen::LLT<Eigen::MatrixXd> llt(w_inv);
        if (llt.info() != Eigen::Success) {
            w_inv += 1e-6 * Eigen::MatrixXd::Identity(d, d);
            post.jittered = true;
            llt.compute(w_inv);
        }
        post.w[static_cast<std::size_t>(i)] =
            llt.solve(Eigen::MatrixXd::Identity(d, d));
    }
    return post;
}

// Variational lower bound for the conjugate model.
inline double elbo(const Eigen::MatrixXd& z, const Eigen::MatrixXd& r,
                   const VbgmmPosterior& post, const VbgmmPrior& prior) {
    const int d = static_cast<int>(z.cols());
    const int k = post.num_components();
    validate_prior(prior, d);

    const double psi_alpha_sum = digamma(post.alpha.sum());

    double bound = 0.0;
    double sum_log_pi = 0.0;
    for (int i = 0; i < k; ++i) {
        const auto& w_i = post.w[static_cast<std::size_t>(i)];
        const double nu_i = post.nu(i);
        const double beta_i = post.beta(i);
        const Eigen::VectorXd m_i = post.means.row(i).transpose();

        const Eigen::VectorXd weights = r.col(i);
        const double count = weights.sum();
        Eigen::VectorXd zbar = prior.m0;
        Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
        if (count > 1e-12) {
            zbar = (z.transpose() * weights) / count;
            const Eigen::MatrixXd centered = z.rowwise() - zbar.transpose();
            scatter = centered.transpose() * weights.asDiagonal() * centered;
        }

        const double log_det = detail::expected_log_det(w_i, nu_i);
        const double log_pi = digamma(post.alpha(i)) - psi_alpha_sum;
        sum_log_pi += log_pi;

        // E[log p(Z | C, mu, Lambda)]
        const Eigen::VectorXd diff = zbar - m_i;
        bound += 0.5 * (count * (log_det - d / beta_i - d * kLog2Pi) -
                        nu_i * (scatter.cwiseProduct(w_i)).sum() -
                        count * nu_i * diff.dot(w_i * diff));

        // E[log p(C | pi)]
        bound += count * log_pi;

        // E[log p(mu, Lambda)]
        const Eigen::VectorXd dev = m_i - prior.m0;
        bound += 0.5 * (d * std::log(prior.beta0 / (2.0 * M_PI)) + log_det -
                        d * prior.beta0 / beta_i -
                        prior.beta0 * nu_i * dev.dot(w_i * dev));
        bound += detail::log_wishart_b(prior.w0, prior.nu0) +
                 0.5 * (prior.nu0 - d - 1.0) * log_det -
                 0.5 * nu_i * (prior.w0.inverse().cwiseProduct(w_i)).sum();

        // -E[log q(mu, Lambda)]
        const double wishart_entropy = -detail::log_wishart_b(w_i, nu_i) -
                                       0.5 * (nu_i - d - 1.0) * log_det +
                                       0.5 * nu_i * d;
        bound -= 0.5 * log_det + 0.5 * d * std::log(beta_i / (2.0 * M_PI)) -
                 0.5 * d - wishart_entropy;
    }

    // E[log p(pi)] - E[log q(pi)]
    Eigen::VectorXd alpha0_vec = Eigen::VectorXd::Constant(k, prior.alpha0);
    bound += detail::log_dirichlet_c(alpha0_vec) + (prior.alpha0 - 1.0) * sum_log_pi;
    double q_pi = detail::log_dirichlet_c(post.alpha);
    for (int i = 0; i < k; ++i) {
        q_pi += (post.alpha(i) - 1.0) * (digamma(post.alpha(i)) - psi_alpha_sum);
    }
    bound -= q_pi;

    // -E[log q(C)]
    for (Eigen::Index nrow = 0; nrow < r.rows(); ++nrow) {
        for (Eigen::Index i = 0; i < r.cols(); ++i) {
            const double v = r(nrow, i);
            if (v > 1e-300) bound -= v * std::log(v);
        }
    }
    return bound;
}

// Per-row argmax with ties broken toward the lowest index.
inline std::vector<int> hard_assign(const Eigen::MatrixXd& r) {
    std::vector<int> labels(static_cast<std::size_t>(r.rows()), 0);
    for (Eigen::Index n = 0; n < r.rows(); ++n) {
        int best = 0;
        for (Eigen::Index i = 1; i < r.cols(); ++i) {
            if (r(n, i) > r(n, best)) best = static_cast<int>(i);
        }
        labels[static_cast<std::size_t>(n)] = best;
    }
    return labels;
}

// Components whose expected mixing weight reaches the floor.
inline std::vector<int> effective_components(const VbgmmPosterior& post, double mass_floor) {
    const Eigen::VectorXd weights = post.mixing_weights();
    std::vector<int> kept;
    for (int i = 0; i < post.num_components(); ++i) {
        if (weights(i) >= mass_floor) kept.push_back(i);
    }
    return kept;
}

namespace detail {

// Farthest-point seeding: a random first row, then greedily the row farthest
// from the chosen set.
inline std::vector<int> seed_rows(const Eigen::MatrixXd& z, int count, std::uint64_t seed) {
    const int n = static_cast<int>(z.rows());
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, n - 1);

    std::vector<int> chosen{pick(rng)};
    Eigen::VectorXd dist =
        (z.rowwise() - z.row(chosen[0])).rowwise().squaredNorm();
    while (static_cast<int>(chosen.size()) < count) {
        int best = 0;
        dist.maxCoeff(&best);
        chosen.push_back(best);
        dist = dist.cwiseMin((z.rowwise() - z.row(best)).rowwise().squaredNorm());
    }
    return chosen;
}

inline Eigen::MatrixXd initial_responsibilities(const Eigen::MatrixXd& z, int k,
                                                std::uint64_t seed) {
    const int n = static_cast<int>(z.rows());
    const std::vector<int> centers = seed_rows(z, k, seed);
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(n, k, 1e-6);
    for (int row = 0; row < n; ++row) {
        int best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (int i = 0; i < k; ++i) {
            const double dist = (z.row(row) - z.row(centers[static_cast<std::size_t>(i)]))
                                    .squaredNorm();
            if (dist < best_dist) {
                best_dist = dist;
                best = i;
            }
        }
        r(row, best) = 1.0;
    }
    for (int row = 0; row < n; ++row) r.row(row) /= r.row(row).sum();
    return r;
}

}  // namespace detail

// Coordinate ascent until the ELBO change drops below tol.  Multiple seeded
// restarts keep the best bound; everything is deterministic given the seed.
inline VbgmmPosterior fit_vbgmm(const Eigen::MatrixXd& z, const VbgmmPrior& prior,
                                int max_components, double tol, int max_iter,
                                std::uint64_t seed, int restarts = 3) {
    if (max_components < 1) throw std::invalid_argument("vbgmm: max_components must be >= 1");
    if (z.rows() < 1) throw std::invalid_argument("vbgmm: empty data");
    const int d = static_cast<int>(z.cols());
    validate_prior(prior, d);
    const int k = std::min<int>(max_components, static_cast<int>(z.rows()));

    // Degenerate data: identical rows carry no mixture information, so place
    // all mass on one component.
    const Eigen::RowVectorXd col_mean = z.colwise().mean();
    const double total_var = (z.rowwise() - col_mean).squaredNorm();
    if (total_var < 1e-20) {
        Eigen::MatrixXd r = Eigen::MatrixXd::Zero(z.rows(), k);
        r.col(0).setOnes();
        return m_step(z, r, prior);
    }

    VbgmmPosterior best;
    double best_bound = -std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < std::max(1, restarts); ++attempt) {
        Eigen::MatrixXd r = detail::initial_responsibilities(
            z, k, derive_seed(seed, static_cast<std::uint64_t>(attempt)));
        VbgmmPosterior post = m_step(z, r, prior);
        double bound = -std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < max_iter; ++iter) {
            r = e_step(z, post);
            post = m_step(z, r, prior);
            const double next = elbo(z, r, post, prior);
            if (std::isfinite(bound) && std::abs(next - bound) < tol) {
                bound = next;
                break;
            }
            bound = next;
        }
        if (bound > best_bound) {
            best_bound = bound;
            best = std::move(post);
        }
    }
    return best;
}

}  // namespace hcl

#pragma once

#include "rtdlab/error.hpp"
#include "rtdlab/mdp.hpp"
#include "rtdlab/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace rtdlab {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class FeatureKind { Primal, Dual };

/// Row norms above 1 + this are rejected; rows in (1, 1 + this] are rescaled.
inline constexpr double kRowNormSlack = 1e-12;

/**
@brief Feature matrix with one row per (s,a) pair, ||row||_2 <= 1.

Rows are indexed like Mdp rewards (s * n_actions + a).
*/
class FeatureMap {
public:
    FeatureMap(RowMatrix matrix, FeatureKind kind) : matrix_(std::move(matrix)), kind_(kind) {
        if (matrix_.rows() == 0 || matrix_.cols() == 0)
            throw Error(ErrorCode::InvalidFeatures, "feature matrix is empty");
        for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
            const double norm = matrix_.row(i).norm();
            if (!std::isfinite(norm) || norm > 1.0 + kRowNormSlack)
                throw Error(ErrorCode::InvalidFeatures,
                            "feature row " + std::to_string(i) + " has norm " + std::to_string(norm));
            // within the slack: round-off, rescale quietly
            if (norm > 1.0)
                matrix_.row(i) /= norm;
        }
    }

    const RowMatrix& matrix() const { return matrix_; }
    FeatureKind kind() const { return kind_; }
    Eigen::Index rows() const { return matrix_.rows(); }
    Eigen::Index dim() const { return matrix_.cols(); }

    auto row(std::size_t pair) const { return matrix_.row(static_cast<Eigen::Index>(pair)); }

private:
    RowMatrix matrix_;
    FeatureKind kind_;
};

inline FeatureMap tabular_features(std::size_t n_states, std::size_t n_actions,
                                   FeatureKind kind = FeatureKind::Primal) {
    const auto n = static_cast<Eigen::Index>(n_states * n_actions);
    return FeatureMap(RowMatrix::Identity(n, n), kind);
}

inline double clip(double x, double lo, double hi) {
    if (!(lo <= hi))
        throw Error(ErrorCode::BadBounds, "clip bounds are inverted");
    return std::min(std::max(x, lo), hi);
}

namespace detail {
inline void require_shape(const Mdp& mdp, const FeatureMap& phi, const Eigen::VectorXd& theta) {
    if (static_cast<std::size_t>(phi.rows()) != mdp.n_pairs() || phi.dim() != theta.size())
        throw Error(ErrorCode::DimensionMismatch, "features, weights and MDP disagree in shape");
}
} // namespace detail

/// Clip(Phi theta, +-1/(1-gamma)) per pair.
inline Eigen::VectorXd clipped_q(const Mdp& mdp, const FeatureMap& phi, const Eigen::VectorXd& theta) {
    detail::require_shape(mdp, phi, theta);
    const double bound = mdp.value_bound();
    Eigen::VectorXd q = phi.matrix() * theta;
    for (Eigen::Index i = 0; i < q.size(); ++i)
        q(i) = clip(q(i), -bound, bound);
    return q;
}

/// V(s) = sum_a pi(a|s) Clip(phi(s,a)^T theta, +-1/(1-gamma)).
inline std::vector<double> v_from_theta(const Mdp& mdp, const Policy& pi, const FeatureMap& phi,
                                        const Eigen::VectorXd& theta) {
    if (pi.n_states != mdp.n_states || pi.n_actions != mdp.n_actions)
        throw Error(ErrorCode::DimensionMismatch, "policy shape does not match the MDP");
    const Eigen::VectorXd q = clipped_q(mdp, phi, theta);
    std::vector<double> v(mdp.n_states, 0.0);
    for (std::size_t s = 0; s < mdp.n_states; ++s)
        for (std::size_t a = 0; a < mdp.n_actions; ++a)
            v[s] += pi.prob(s, a) * q(static_cast<Eigen::Index>(mdp.pair(s, a)));
    return v;
}

/// V*(s) = max_a Clip(phi(s,a)^T theta, +-1/(1-gamma)).
inline std::vector<double> v_star_from_theta(const Mdp& mdp, const FeatureMap& phi,
                                             const Eigen::VectorXd& theta) {
    const Eigen::VectorXd q = clipped_q(mdp, phi, theta);
    std::vector<double> v(mdp.n_states);
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
        double best = q(static_cast<Eigen::Index>(mdp.pair(s, 0)));
        for (std::size_t a = 1; a < mdp.n_actions; ++a)
            best = std::max(best, q(static_cast<Eigen::Index>(mdp.pair(s, a))));
        v[s] = best;
    }
    return v;
}

inline Eigen::VectorXd as_vector(std::span<const double> x) {
    return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

/// Phi^T D Phi for the diagonal weighting D = diag(d_pi).
inline Eigen::MatrixXd weighted_covariance(const FeatureMap& phi, std::span<const double> d_pi) {
    if (static_cast<std::size_t>(phi.rows()) != d_pi.size())
        throw Error(ErrorCode::DimensionMismatch, "weighting has the wrong length");
    const Eigen::VectorXd w = as_vector(d_pi);
    Eigen::MatrixXd cov = phi.matrix().transpose() * w.asDiagonal() * phi.matrix();
    // exact symmetry
    return 0.5 * (cov + cov.transpose());
}

/**
@brief Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

Sweeps over all off-diagonal entries in fixed order until the off-diagonal
Frobenius norm drops below rel_tol times the matrix norm. Returned ascending.
*/
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a, double rel_tol = 1e-15,
                                              int max_sweeps = 100) {
    const Eigen::Index n = a.rows();
    const double scale = std::max(a.norm(), 1e-300);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q)
                off += 2.0 * a(p, q) * a(p, q);
        if (std::sqrt(off) <= rel_tol * scale)
            break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0)
                    continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
            }
        }
    }
    std::vector<double> eig(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        eig[static_cast<std::size_t>(i)] = a(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

/// Covariance is treated as singular at or below this eigenvalue.
inline constexpr double kSingularEigenvalue = 1e-12;

struct WeightedGeometry {
    Eigen::MatrixXd covariance;
    double mu = 0.0;

    bool singular() const { return mu <= kSingularEigenvalue; }
};

inline double min_eigenvalue(const FeatureMap& phi, std::span<const double> d_pi) {
    const double mu = jacobi_eigenvalues(weighted_covariance(phi, d_pi)).front();
    // round-off below zero on rank-deficient inputs
    return std::abs(mu) <= kSingularEigenvalue ? 0.0 : mu;
}

inline WeightedGeometry weighted_geometry(const FeatureMap& phi, std::span<const double> d_pi) {
    WeightedGeometry g{weighted_covariance(phi, d_pi), 0.0};
    const double mu = jacobi_eigenvalues(g.covariance).front();
    g.mu = std::abs(mu) <= kSingularEigenvalue ? 0.0 : mu;
    return g;
}

/**
@brief Weighted least-squares coefficients argmin_theta ||Phi theta - f||_D.

Solves (Phi^T D Phi) theta = Phi^T D f; throws SingularCovariance when the
weighted covariance has no positive floor.
*/
inline Eigen::VectorXd weighted_least_squares(const FeatureMap& phi, std::span<const double> d_pi,
                                              const Eigen::VectorXd& f) {
    if (f.size() != phi.rows())
        throw Error(ErrorCode::DimensionMismatch, "target has the wrong length");
    const WeightedGeometry g = weighted_geometry(phi, d_pi);
    if (g.singular())
        throw Error(ErrorCode::SingularCovariance, "Phi^T D Phi is singular");
    const Eigen::VectorXd rhs = phi.matrix().transpose() * (as_vector(d_pi).asDiagonal() * f);
    return g.covariance.ldlt().solve(rhs);
}

/// D-orthogonal projection onto the column span of Phi.
inline Eigen::VectorXd project_weighted(const Eigen::VectorXd& f, const FeatureMap& phi,
                                        std::span<const double> d_pi) {
    return phi.matrix() * weighted_least_squares(phi, d_pi, f);
}

/// Radial projection onto the ball ||nu||_2 <= b_nu.
inline Eigen::VectorXd project_ball(const Eigen::VectorXd& nu, double b_nu) {
    const double norm = nu.norm();
    if (norm <= b_nu)
        return nu;
    return nu * (b_nu / norm);
}

/**
@brief Gaussian features with unit-norm rows.

A draw is kept only if its weighted covariance floor exceeds 1e-6 under d_pi;
otherwise the next seed is tried.
*/
inline FeatureMap random_features(std::size_t n_pairs, std::size_t dim, std::uint64_t seed,
                                  std::span<const double> d_pi,
                                  FeatureKind kind = FeatureKind::Primal, int max_attempts = 1000) {
    if (dim == 0 || dim > n_pairs)
        throw Error(ErrorCode::InvalidFeatures, "random features need 1 <= d <= |S||A|");
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Rng rng(seed + static_cast<std::uint64_t>(attempt), Stream::Features);
        RowMatrix m(static_cast<Eigen::Index>(n_pairs), static_cast<Eigen::Index>(dim));
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j)
                m(i, j) = rng.normal();
            m.row(i) /= m.row(i).norm();
        }
        FeatureMap phi(std::move(m), kind);
        if (min_eigenvalue(phi, d_pi) > 1e-6)
            return phi;
    }
    throw Error(ErrorCode::InvalidFeatures, "could not draw well-conditioned random features");
}

} // namespace rtdlab

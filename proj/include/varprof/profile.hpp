#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

#include "varprof/common.hpp"

namespace varprof {

/// Piecewise-constant variance profile: n x n symmetric nonnegative sigma,
/// positive block weights alpha summing to 1, gamma the cumulative weights.
/// Immutable after construction; safe for concurrent reads.
struct BlockProfile {
    int n = 0;
    Eigen::MatrixXd sigma;   // sigma(k,l), standard-deviation scale
    Eigen::VectorXd alpha;   // block weights, sum 1
    Eigen::VectorXd gamma;   // gamma(0)=alpha(0), ..., gamma(n-1)=1

    static BlockProfile make(Eigen::MatrixXd sigma, Eigen::VectorXd alpha);

    double max_sigma() const { return sigma.size() ? sigma.maxCoeff() : 0.0; }
    /// Matrix of squared entries S(k,l) = sigma(k,l)^2.
    Eigen::MatrixXd sigma_sq() const { return sigma.array().square().matrix(); }
};

/// Continuous profile sampled at the g x g cell midpoints ((k+1/2)/g, (l+1/2)/g).
struct GridProfile {
    int resolution = 0;
    Eigen::MatrixXd values;

    static GridProfile make(Eigen::MatrixXd values);

    /// Nearest-cell-midpoint lookup of sigma at (x, y) in [0,1]^2.
    double at(double x, double y) const;
    double max_sigma() const { return values.size() ? values.maxCoeff() : 0.0; }
};

using Profile = std::variant<BlockProfile, GridProfile>;

double profile_max_sigma(const Profile& p);

/// Block sizes |I_k^{(N)}| by largest-remainder rounding of alpha_k * N
/// (ties to the lowest block index); sizes sum to N.
std::vector<int> block_sizes(const Eigen::VectorXd& alpha, int N);

/// Entry-scaling matrix Sigma_N. Block case: Sigma_N(i,j) = sigma(k,l) on
/// I_k x I_l. Grid case: nearest-cell sampling at ((i+1)/N, (j+1)/N).
Eigen::MatrixXd materialize(const BlockProfile& p, int N);
Eigen::MatrixXd materialize(const GridProfile& p, int N);
Eigen::MatrixXd materialize(const Profile& p, int N);

/// Uniform-weight block approximation of a continuous profile on squared
/// scale: sigma_n(i,j) = sqrt(cell-average of sigma^2 + 1/(n+1)). The cell
/// average integrates the stored piecewise-constant grid exactly.
BlockProfile discretize(const GridProfile& p, int n);

struct ConcavityReport {
    bool concave = false;
    double max_eigenvalue = 0.0;     // largest eigenvalue of P0 S P0
    Eigen::VectorXd witness;         // zero-sum psi with <psi, S psi> > 0 when not concave
    double witness_quadform = 0.0;
};

/// Tests whether psi -> <psi, sigma^2 psi> is concave on the zero-sum
/// hyperplane (all eigenvalues of P0 S P0 <= tol, P0 the centering projector).
ConcavityReport check_concavity(const BlockProfile& p, double tol = 1e-10);

}  // namespace varprof

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "varprof/profile.hpp"

namespace varprof {

/// Solution of the canonical (quadratic vector) equation -1/m_i = z + (S m)_i
/// with (S m)_i = sum_j alpha_j sigma(i,j)^2 m_j. Im m_i > 0 on the upper
/// half-plane; on the real axis outside the support all m_i are real and
/// negative (m = -G componentwise, G the Stieltjes transform).
struct QveSolution {
    std::complex<double> z;
    Eigen::VectorXcd m;
    double residual = 0.0;  // sup_i | -1/m_i - z - (S m)_i |
    bool converged = false;
    int iterations = 0;
};

struct EdgeResult {
    double l = 0.0;
    double r = 0.0;
    double bracket = 0.0;  // final bisection half-width around r
};

struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 2001;
    bool automatic = true;  // derive [-r-0.5, r+0.5] from the computed edges
};

/// Grid representation of the limiting spectral measure mu_sigma.
struct SpectralDensity {
    std::vector<double> grid;
    std::vector<double> density;
    std::vector<double> cumulative;  // trapezoid CDF on the grid
    double l = 0.0, r = 0.0;
    double mass_defect = 0.0;
    std::vector<std::size_t> flagged;  // non-converged points, filled by interpolation

    double cdf(double x) const;
};

/// Damped fixed-point / Newton solver for K_sigma with eta-homotopy toward
/// the real axis. Pure per evaluation point; safe for concurrent use.
class QveSolver {
public:
    explicit QveSolver(BlockProfile p);

    const BlockProfile& profile() const { return p_; }

    /// Solve at Im z > 0, continued from Im = 2 down to the target height.
    QveSolution solve(std::complex<double> z) const;

    /// Real z strictly outside the support: all-real solution via homotopy plus
    /// a final real Newton polish. Throws NumericalError inside the support or
    /// too close to an edge.
    QveSolution solve_real(double x) const;

    /// Stieltjes transform G(x) = -sum_i alpha_i m_i(x) for real x > r_sigma.
    double stieltjes_real(double x) const;

    /// Derivative dG/dx from the linearized equation at the real solution.
    double stieltjes_real_derivative(double x) const;

    /// Boundary density (1/pi) sum_i alpha_i Im m_i(E + i0) by linear
    /// eta-extrapolation from eta1 = 10*eta2. Negative extrapolation artifacts
    /// clamp to zero.
    double density_at(double E, double eta2 = 1e-4) const;

    double defect(const Eigen::VectorXcd& m, std::complex<double> z) const;

    /// Real solution of the augmented system {QVE(g, x) = 0, sum alpha_i g_i = w}
    /// in G-convention (g = -m), used for branch continuation past the edge.
    /// Warm start (g, x) required; returns false if Newton fails.
    bool solve_augmented(double w, Eigen::VectorXd& g, double& x) const;

    /// Real Newton at fixed x in G-convention from a warm start (either branch).
    bool solve_real_branch(double x, Eigen::VectorXd& g) const;

private:
    BlockProfile p_;
    Eigen::MatrixXd A_;  // A(i,j) = sigma(i,j)^2 * alpha_j
    int n_;

    Eigen::VectorXcd refine(Eigen::VectorXcd m, std::complex<double> z, int* iters) const;
    Eigen::VectorXcd ladder(std::complex<double> z, int* iters) const;
};

/// Spectral density on a grid (eta-extrapolated), with edges and mass check.
SpectralDensity density(const BlockProfile& p, const GridSpec& spec = {});

/// Support edges (l, r) = (-r, r) by bisection of the inside/outside predicate
/// on [0, 2 max sigma + 1]. The measure is symmetric for centered entry laws.
EdgeResult edges(const BlockProfile& p);

/// Closed Wigner words of length 2k+1 up to letter relabeling; each word is
/// its list of distinct edges (pairs of 0-based letters, each traversed twice).
struct WignerWord {
    std::vector<int> letters;                 // canonical word, 0-based
    std::vector<std::pair<int, int>> edges;   // k distinct tree edges
};
const std::vector<WignerWord>& wigner_words(int k);  // k <= 6
std::size_t wigner_word_count(int k);

/// Limit moment c_{2k} = sum_{words} sum_{assignments} prod alpha prod sigma^2.
double moments_oracle(const BlockProfile& p, int k);

}  // namespace varprof

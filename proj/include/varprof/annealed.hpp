#pragma once

#include <optional>
#include <vector>

#include "varprof/freeprob.hpp"
#include "varprof/profile.hpp"

namespace varprof {

struct AnnealedResult {
    double theta = 0.0;
    double value = 0.0;              // F(sigma, theta)
    Eigen::VectorXd psi;             // maximizing simplex weights
    double multistart_spread = 0.0;  // max - min over converged local maxima
    double critical_defect = 0.0;    // norm of the projected gradient of Psi
};

struct MaximizerPath {
    std::vector<double> thetas;
    std::vector<Eigen::VectorXd> psis;
    std::vector<double> jump_locations;
    bool continuous = true;
    int beta = 1;
};

enum class TwoBlockCase { concave, xmin_ge_half, xmin_le_alpha, symmetric_critical, pathological };
const char* to_string(TwoBlockCase c);

struct TwoBlockClassification {
    double a = 0, b = 0, c = 0, alpha = 0;  // canonical order (alpha <= 1/2)
    bool swapped = false;
    double x_min = 0.0;  // (c^2 - b^2) / (2c^2 - a^2 - b^2), NaN if undefined
    TwoBlockCase case_tag = TwoBlockCase::concave;
    std::optional<double> theta_crit;  // printed formula beta*sqrt(2/(a^2+b^2-2c^2))
    /// Bifurcation of the symmetric maximizer observed from the critical-point
    /// equation itself, beta/sqrt(a^2+b^2-2c^2). Differs from the printed
    /// theta_crit by sqrt(2); both are reported.
    std::optional<double> theta_split_numeric;
};

/// Maximizes Psi(theta, sigma, psi) = (theta^2/beta) <psi, sigma^2 psi>
///   - (beta/2) sum alpha_i log(alpha_i/psi_i)
/// over the open simplex. The inner problem is solved in the beta-free
/// variable tau = 2 theta^2 / beta^2 (projected gradient ascent plus a
/// KKT Newton polish, deterministic multistart battery).
class AnnealedSolver {
public:
    explicit AnnealedSolver(BlockProfile p);

    const BlockProfile& profile() const { return p_; }

    struct Inner {
        Eigen::VectorXd psi;
        double value = 0.0;   // tau * psi'S psi + sum alpha log(psi/alpha)
        double defect = 0.0;  // projected-gradient norm of the inner objective
        double spread = 0.0;  // max - min over converged local maxima
        bool converged = false;
    };
    Inner optimize_tau(double tau, const Eigen::VectorXd* warm = nullptr) const;

    AnnealedResult annealed_f(double theta, int beta, const Eigen::VectorXd* warm = nullptr) const;

    /// Warm-started maximizer path over an increasing theta grid starting at 0.
    /// Sup-norm gaps above 1e-3 trigger iterated local 10x refinement before a
    /// jump is declared (square-root drift at a pitchfork resolves; true jumps
    /// persist at any width).
    MaximizerPath maximizer_path(const std::vector<double>& thetas, int beta) const;

    /// psi^theta evaluated off the path grid (warm start from the nearest node).
    Eigen::VectorXd psi_at(const MaximizerPath& path, double theta, int beta) const;

    double p_form(const Eigen::VectorXd& psi) const;  // <psi, sigma^2 psi>

private:
    BlockProfile p_;
    Eigen::MatrixXd S_;
    std::vector<Eigen::VectorXd> starts_;

    Inner local_max(double tau, Eigen::VectorXd psi0) const;
    double objective(double tau, const Eigen::VectorXd& psi) const;
};

AnnealedResult annealed_f(const BlockProfile& p, double theta, int beta);

/// Continuous profiles: F via discretize(p, n) minus the exact squared-scale
/// correction theta^2/((n+1) beta); the doubling defect monitors convergence.
struct GridAnnealedResult {
    AnnealedResult coarse;       // at n, correction already subtracted
    double value = 0.0;          // corrected F at n
    double doubling_defect = 0;  // |F_n - F_2n| after corrections
};
GridAnnealedResult annealed_f(const GridProfile& p, double theta, int beta, int n = 64);

TwoBlockClassification classify_2x2(double a, double b, double c, double alpha, int beta);

/// max over the grid of |F(sigma,theta) - (beta/2) int_0^{2theta/beta} R|.
double small_theta_check(const BlockProfile& p, const TransformTable& t, int beta,
                         const std::vector<double>& thetas);

}  // namespace varprof

#pragma once

#include <vector>

#include "varprof/annealed.hpp"
#include "varprof/freeprob.hpp"

namespace varprof {

enum class RateMethod { sup_direct, closed_form, both_agree };
const char* to_string(RateMethod m);

struct RateCurve {
    int beta = 1;
    std::vector<double> xs;
    std::vector<double> values;
    std::vector<double> theta_stars;
    std::vector<RateMethod> methods;
    /// Set when the maximizer path has jumps: the sup form then only certifies
    /// an upper bound and the true rate may differ (pathological profiles).
    bool upper_bound_only = false;
};

struct TiltSolution {
    double x = 0.0;
    double theta_x = 0.0;
    double rho_value = 0.0;        // largest eigenvalue of sqrt(D) S sqrt(D) at theta_x
    Eigen::VectorXd psi_at_theta;
};

/// I(x) = max_theta (J(mu, theta, x) - F(sigma, theta)) per point: 256-point
/// coarse grid on [0, theta_cap] plus golden-section refinement, theta_cap =
/// beta (x / P(sigma, alpha) + 1) so the maximum is interior.
RateCurve rate_function(const TransformTable& t, int beta, const std::vector<double>& xs);
RateCurve rate_function(const BlockProfile& p, int beta, const std::vector<double>& xs);

/// I(x) = (beta/2) int_r^x (Gbar - G); requires the R-monotonicity check.
RateCurve rate_closed_form(const TransformTable& t, int beta, const std::vector<double>& xs);

/// Smallest theta > 0 with (2 theta / beta) rho(theta, x) = 1, rho the largest
/// eigenvalue of sqrt(D) S sqrt(D), D = diag(G_i(x) psi_i^theta). Requires a
/// continuous maximizer path.
TiltSolution tilt_solve(const BlockProfile& p, int beta, double x, const MaximizerPath& path);

/// Block-diagonal (c = 0) rate J^beta(x) = min{alpha I_b(x/sqrt(a alpha)),
/// (1-alpha) I_b(x/sqrt(b(1-alpha)))} using the printed sqrt(a alpha) scaling.
struct PathologicalRate {
    std::vector<double> xs;
    std::vector<double> values;          // +inf below the bulk edge
    std::vector<int> active_branch;      // 0 none, 1 first block, 2 second
    std::vector<double> switch_locations;
    double bulk_edge = 0.0;
};
PathologicalRate pathological_rate(double a, double b, double alpha, int beta,
                                   const std::vector<double>& xs);

}  // namespace varprof

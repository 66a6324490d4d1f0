#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "varprof/numerics.hpp"
#include "varprof/qve.hpp"

namespace varprof {

struct TransformOptions {
    /// Largest x the conjugate-branch extension (hence g_bar and the
    /// closed-form rate) must reach; defaults to r_sigma + 12.
    double x_max = std::numeric_limits<double>::quiet_NaN();
    int cheb_nodes = 256;
    double g_edge_infinite = 1e6;  // treat G(r+) above this as infinite
};

/// Evaluable transform layer on top of the limiting measure: G on (r, inf),
/// K and R on (0, g_edge), the conjugate inverse Gbar on (r, x_max], and the
/// spherical-integral limit J. Immutable after construction; evaluators are
/// pure and safe for concurrent reads.
///
/// G near the edge is interpolated as a Chebyshev series in u = sqrt(x - r)
/// (analytic through u = 0 for square-root edges); K inverts it by bisection.
/// R past g_edge is continued through the edge fold of the algebraic branch
/// (w, K_ext(w)) by Newton continuation in w of the augmented system
/// {g_i (x - (S g)_i) = 1, sum alpha_i g_i = w}.
class TransformTable {
public:
    explicit TransformTable(BlockProfile p, TransformOptions opts = {});

    const BlockProfile& profile() const { return p_; }
    const QveSolver& solver() const { return solver_; }
    double left_edge() const { return l_; }
    double right_edge() const { return r_; }
    /// G(r_sigma^+) by sqrt-Richardson at r + 1e-6 (spec sentinel: infinite
    /// when above the configured threshold).
    double g_edge() const { return g_edge_; }
    bool g_edge_finite() const { return g_edge_finite_; }
    double moment2() const { return m2_; }

    /// Stieltjes transform G(x), real x > r_sigma.
    double stieltjes(double x) const;
    /// Functional inverse of G on (0, g_edge).
    double k_transform(double w) const;
    /// R(w) = K(w) - 1/w on (0, g_edge).
    double r_transform(double w) const;
    /// Cumulative integral of R from 0 to wp (wp < g_edge).
    double cum_r(double wp) const;

    /// True when theta -> R(theta) + 1/theta is increasing past g_edge along
    /// the numerical continuation (hypothesis of the closed-form rate).
    bool r_extension_monotone() const { return ext_monotone_; }
    double extension_xmax() const { return ext_x_.empty() ? r_ : ext_x_.back(); }
    /// R continued past g_edge: K_ext(w) - 1/w.
    double r_extended(double w) const;

    /// Conjugate inverse: the root theta >= g_edge of R(theta) + 1/theta = x.
    double g_bar(double x) const;

    /// J(mu, theta, lambda) of the spherical-integral limit.
    double spherical_j(double theta, double lambda, int beta) const;

    /// Boundary density with edge-aware eta extrapolation.
    double density_at(double E) const;
    /// integral f(y) rho(y) dy over the support (cached quadrature nodes).
    double integrate_density(const std::function<double(double)>& f) const;
    double quadrature_mass() const { return quad_mass_; }

private:
    BlockProfile p_;
    QveSolver solver_;
    double l_ = 0.0, r_ = 0.0;
    double m2_ = 0.0, k4_ = 0.0, k6_ = 0.0;
    double x_far_ = 0.0, u0_ = 1e-3, U_ = 0.0;
    double w_min_ = 0.0, w_top_ = 0.0, g_edge_ = 0.0;
    bool g_edge_finite_ = false;
    double x_max_ = 0.0;
    Chebyshev gfit_;  // u -> G(r + u^2) on [u0, U]
    std::vector<double> us_asc_;
    std::vector<Eigen::VectorXd> gs_asc_;  // branch vectors at the fit nodes, u ascending

    std::vector<double> quad_y_, quad_wrho_;
    double quad_mass_ = 0.0;

    bool ext_monotone_ = false;
    std::size_t fold_idx_ = 0;
    std::vector<double> ext_w_, ext_x_;
    std::vector<Eigen::VectorXd> ext_g_;

    double stieltjes_unchecked(double x) const;
    double r_series(double w) const;
    void build_quad_cache();
    void build_extension();
    Eigen::VectorXd branch_at(double x) const;  // physical branch, warm from the fit
};

}  // namespace varprof

#include "varprof/freeprob.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace varprof {

namespace {

// Extrapolation height for a point at distance `dist` from the nearest edge:
// small enough that Im m(E + i eta) is in its linear regime there.
double eta_for_distance(double dist) {
    return std::clamp(3e-5 * std::pow(std::max(dist, 0.0), 0.75), 1e-9, 1e-4);
}

}  // namespace

TransformTable::TransformTable(BlockProfile p, TransformOptions opts)
    : p_(std::move(p)), solver_(p_) {
    const EdgeResult e = edges(p_);
    l_ = e.l;
    r_ = e.r;

    m2_ = moments_oracle(p_, 1);
    const double m4 = moments_oracle(p_, 2);
    const double m6 = moments_oracle(p_, 3);
    k4_ = m4 - 2.0 * m2_ * m2_;
    k6_ = m6 - 6.0 * m4 * m2_ + 7.0 * m2_ * m2_ * m2_;

    x_max_ = std::isnan(opts.x_max) ? r_ + 12.0 : opts.x_max;
    x_far_ = std::max(2.0 * r_ + 2.0, 50.0);
    U_ = std::sqrt(x_far_ - r_);

    // G(r + u^2) at Chebyshev-Lobatto nodes, continued inward from x_far.
    const auto nodes = Chebyshev::lobatto_nodes(u0_, U_, opts.cheb_nodes);
    std::vector<double> values(nodes.size());
    std::vector<Eigen::VectorXd> gs(nodes.size());
    Eigen::VectorXd g;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double x = r_ + nodes[j] * nodes[j];
        if (j == 0) {
            g = -solver_.solve_real(x).m.real();
        } else if (!solver_.solve_real_branch(x, g)) {
            g = -solver_.solve_real(x).m.real();
        }
        gs[j] = g;
        values[j] = p_.alpha.dot(g);
    }
    gfit_ = Chebyshev::from_values(values, u0_, U_);
    w_min_ = values.front();  // node j = 0 sits at u = U
    w_top_ = gfit_(0.0);      // polynomial continuation to the edge

    us_asc_.assign(nodes.rbegin(), nodes.rend());
    gs_asc_.assign(gs.rbegin(), gs.rend());

    // Spec estimator for G(r+): sqrt-Richardson from delta and 4*delta.
    {
        const double g1 = values.back();  // node at u0 -> x = r + 1e-6
        Eigen::VectorXd g4 = gs.back();
        double gval4 = w_top_;
        if (solver_.solve_real_branch(r_ + 4e-6, g4))
            gval4 = p_.alpha.dot(g4);
        g_edge_ = 2.0 * g1 - gval4;
    }
    g_edge_finite_ = g_edge_ < opts.g_edge_infinite;

    build_quad_cache();
    if (g_edge_finite_) build_extension();
}

Eigen::VectorXd TransformTable::branch_at(double x) const {
    const double u = std::sqrt(std::max(x - r_, 0.0));
    const auto it = std::lower_bound(us_asc_.begin(), us_asc_.end(), u);
    std::size_t j = static_cast<std::size_t>(it - us_asc_.begin());
    if (j >= us_asc_.size()) j = us_asc_.size() - 1;
    Eigen::VectorXd g = gs_asc_[j];
    if (!solver_.solve_real_branch(x, g))
        throw NumericalError("freeprob::stieltjes: branch solve failed at x = " +
                             std::to_string(x));
    return g;
}

double TransformTable::stieltjes_unchecked(double x) const {
    if (x > x_far_) {
        // Moment tail: G = 1/x + m2/x^3 + m4/x^5 + m6/x^7 with m4, m6 via cumulants.
        const double m4 = k4_ + 2.0 * m2_ * m2_;
        const double m6 = k6_ + 6.0 * m4 * m2_ - 7.0 * m2_ * m2_ * m2_;
        const double ix = 1.0 / x, ix2 = ix * ix;
        return ix * (1.0 + ix2 * (m2_ + ix2 * (m4 + ix2 * m6)));
    }
    if (x <= r_ + u0_ * u0_) return gfit_(std::sqrt(std::max(x - r_, 0.0)));
    return p_.alpha.dot(branch_at(x));
}

double TransformTable::stieltjes(double x) const {
    if (!(x > r_))
        throw ValidationError("freeprob::stieltjes: x = " + std::to_string(x) +
                              " is not above the right edge " + std::to_string(r_));
    return stieltjes_unchecked(x);
}

double TransformTable::r_series(double w) const {
    const double w2 = w * w;
    return w * (m2_ + w2 * (k4_ + w2 * k6_));
}

double TransformTable::k_transform(double w) const {
    if (!(w > 0.0) || w >= std::max(w_top_, g_edge_))
        throw ValidationError("freeprob::r_transform: w = " + std::to_string(w) +
                              " outside (0, g_edge)");
    if (w >= w_top_) return r_;  // sliver between the fit edge value and g_edge
    if (w <= w_min_) return 1.0 / w + r_series(w);
    double lo = 0.0, hi = U_;  // gfit is decreasing in u
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (gfit_(mid) > w)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-16 * (1.0 + hi)) break;
    }
    const double u = 0.5 * (lo + hi);
    return r_ + u * u;
}

double TransformTable::r_transform(double w) const {
    if (!(w > 0.0) || w >= std::max(w_top_, g_edge_))
        throw ValidationError("freeprob::r_transform: w = " + std::to_string(w) +
                              " outside (0, g_edge)");
    if (w <= w_min_) return r_series(w);
    return k_transform(w) - 1.0 / w;
}

double TransformTable::cum_r(double wp) const {
    if (wp < 0.0)
        throw ValidationError("freeprob::cum_r: negative upper limit");
    if (wp == 0.0) return 0.0;
    if (wp >= std::max(w_top_, g_edge_))
        throw ValidationError("freeprob::cum_r: upper limit " + std::to_string(wp) +
                              " reaches g_edge");
    const double s = std::min(wp, w_min_);
    const double s2 = s * s;
    double acc = s2 * (0.5 * m2_ + s2 * (0.25 * k4_ + s2 * k6_ / 6.0));
    if (wp > s)
        acc += adaptive_simpson([this](double w) { return r_transform(w); }, s, wp, 1e-12, 30);
    return acc;
}

void TransformTable::build_quad_cache() {
    quad_y_.clear();
    quad_wrho_.clear();
    const double span = r_ - l_;
    if (!(span > 0.0)) return;
    const double we = std::min(0.5, span / 6.0);

    auto push = [&](double y, double weight) {
        const double dist = std::min(y - l_, r_ - y);
        const double rho = solver_.density_at(y, eta_for_distance(dist));
        quad_y_.push_back(y);
        quad_wrho_.push_back(weight * rho);
    };

    // Edge panels with y = edge -/+ u^2 (integrand analytic in u at sqrt edges).
    const GaussLegendre& gle = gauss_legendre(32);
    const double ue = std::sqrt(we);
    for (int i = 0; i < 32; ++i) {
        const double u = 0.5 * ue * (gle.nodes[i] + 1.0);
        const double wgt = 0.5 * ue * gle.weights[i] * 2.0 * u;
        push(l_ + u * u, wgt);
        push(r_ - u * u, wgt);
    }
    // Interior composite panels.
    const GaussLegendre& gli = gauss_legendre(24);
    const double a = l_ + we, b = r_ - we;
    const int panels = 6;
    for (int q = 0; q < panels; ++q) {
        const double pa = a + (b - a) * q / panels;
        const double pb = a + (b - a) * (q + 1) / panels;
        const double mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
        for (int i = 0; i < 24; ++i) push(mid + half * gli.nodes[i], half * gli.weights[i]);
    }
    quad_mass_ = 0.0;
    for (double w : quad_wrho_) quad_mass_ += w;
}

double TransformTable::density_at(double E) const {
    if (E <= l_ || E >= r_) return 0.0;
    const double dist = std::min(E - l_, r_ - E);
    return solver_.density_at(E, eta_for_distance(dist));
}

double TransformTable::integrate_density(const std::function<double(double)>& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < quad_y_.size(); ++i) acc += quad_wrho_[i] * f(quad_y_[i]);
    return acc;
}

void TransformTable::build_extension() {
    ext_w_.clear();
    ext_x_.clear();
    ext_g_.clear();
    const double dseed = std::max(1e-4, 1e-4 * r_);
    double x = r_ + dseed;
    Eigen::VectorXd g;
    try {
        g = branch_at(x);
    } catch (const NumericalError&) {
        ext_monotone_ = false;
        return;
    }
    double w = p_.alpha.dot(g);
    ext_w_.push_back(w);
    ext_x_.push_back(x);
    ext_g_.push_back(g);

    double dw = std::max(1e-7, (w_top_ - w) / 64.0);
    const double dw_max = 0.02 * std::max(w_top_, 1.0);
    bool stalled = false;
    for (int step = 0; step < 40000; ++step) {
        if (x >= x_max_ && w > w_top_) break;
        Eigen::VectorXd g2 = g;
        double x2 = x;
        if (solver_.solve_augmented(w + dw, g2, x2)) {
            w += dw;
            g = std::move(g2);
            x = x2;
            ext_w_.push_back(w);
            ext_x_.push_back(x);
            ext_g_.push_back(g);
            dw = std::min(dw * 1.3, dw_max);
        } else {
            dw *= 0.5;
            if (dw < 1e-11) {
                stalled = true;
                break;
            }
        }
    }

    fold_idx_ = 0;
    for (std::size_t j = 1; j < ext_x_.size(); ++j)
        if (ext_x_[j] < ext_x_[fold_idx_]) fold_idx_ = j;
    bool increasing = !stalled && ext_x_.size() > fold_idx_ + 1 && ext_x_.back() >= x_max_ - 1e-9;
    for (std::size_t j = fold_idx_ + 1; increasing && j < ext_x_.size(); ++j)
        if (!(ext_x_[j] > ext_x_[j - 1] - 1e-12)) increasing = false;
    ext_monotone_ = increasing;
}

double TransformTable::r_extended(double w) const {
    if (w <= 0.0)
        throw ValidationError("freeprob::r_extended: w must be positive");
    if (w < std::max(w_top_, g_edge_)) return r_transform(std::min(w, w_top_ * (1.0 - 1e-14)));
    if (!g_edge_finite_ || ext_w_.empty() || w > ext_w_.back())
        throw NumericalError("freeprob::r_extended: w = " + std::to_string(w) +
                             " beyond the continuation range");
    const auto it = std::lower_bound(ext_w_.begin(), ext_w_.end(), w);
    std::size_t j = std::min<std::size_t>(it - ext_w_.begin(), ext_w_.size() - 1);
    Eigen::VectorXd g = ext_g_[j];
    double x = ext_x_[j];
    if (!solver_.solve_augmented(w, g, x))
        throw NumericalError("freeprob::r_extended: refinement failed at w = " +
                             std::to_string(w));
    return x - 1.0 / w;
}

double TransformTable::g_bar(double x) const {
    if (!(x > r_))
        throw ValidationError("freeprob::g_bar: x = " + std::to_string(x) +
                              " is not above the right edge " + std::to_string(r_));
    if (!g_edge_finite_)
        throw NumericalError("freeprob::g_bar: G(r+) not finite, R not extendable");
    if (!ext_monotone_)
        throw NumericalError(
            "freeprob::g_bar: theta -> R(theta) + 1/theta is not strictly increasing; "
            "fall back to the sup-form rate");
    if (x <= r_ + 1e-12) return w_top_;
    if (x > ext_x_.back() + 1e-9)
        throw NumericalError("freeprob::g_bar: x = " + std::to_string(x) +
                             " beyond the extension range " + std::to_string(ext_x_.back()));
    const auto begin = ext_x_.begin() + static_cast<std::ptrdiff_t>(fold_idx_);
    const auto it = std::lower_bound(begin, ext_x_.end(), x);
    std::size_t j = std::min<std::size_t>(it - ext_x_.begin(), ext_x_.size() - 1);
    Eigen::VectorXd g = ext_g_[j];
    if (!solver_.solve_real_branch(x, g))
        throw NumericalError("freeprob::g_bar: branch refinement failed at x = " +
                             std::to_string(x));
    const double w = p_.alpha.dot(g);
    if (w + 1e-9 < stieltjes_unchecked(x))
        throw NumericalError("freeprob::g_bar: refinement left the conjugate branch at x = " +
                             std::to_string(x));
    return w;
}

double TransformTable::spherical_j(double theta, double lambda, int beta) const {
    if (beta != 1 && beta != 2)
        throw ValidationError("freeprob::spherical_j: beta must be 1 or 2");
    if (theta < 0.0)
        throw ValidationError("freeprob::spherical_j: theta must be nonnegative");
    if (lambda < r_ - 1e-9)
        throw ValidationError("freeprob::spherical_j: lambda = " + std::to_string(lambda) +
                              " below the right edge " + std::to_string(r_));
    if (theta == 0.0) return 0.0;
    lambda = std::max(lambda, r_);

    const double b = static_cast<double>(beta);
    const double thetap = 2.0 * theta / b;
    const double g_lambda = (lambda <= r_ + 1e-14) ? w_top_ : stieltjes_unchecked(lambda);
    const double v = (thetap <= g_lambda)
                         ? (thetap <= w_min_ ? r_series(thetap) : k_transform(thetap) - 1.0 / thetap)
                         : lambda - b / (2.0 * theta);
    const double q = integrate_density([&](double y) {
        const double arg = thetap * (v - y);
        return std::log1p(std::max(arg, -1.0 + 1e-15));
    });
    return theta * v - (0.5 * b) * q;
}

}  // namespace varprof

#include "varprof/rate.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "varprof/numerics.hpp"

namespace varprof {

const char* to_string(RateMethod m) {
    switch (m) {
        case RateMethod::sup_direct: return "sup_direct";
        case RateMethod::closed_form: return "closed_form";
        case RateMethod::both_agree: return "both_agree";
    }
    return "unknown";
}

namespace {

void check_xs(const std::vector<double>& xs, double r) {
    if (xs.empty()) throw ValidationError("rate: empty x grid");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (xs[i] <= xs[i - 1]) throw ValidationError("rate: x grid must be increasing");
    if (xs.front() < r - 1e-9)
        throw ValidationError("rate: x grid starts at " + std::to_string(xs.front()) +
                              ", below the right edge " + std::to_string(r));
}

}  // namespace

RateCurve rate_function(const TransformTable& t, int beta, const std::vector<double>& xs) {
    if (beta != 1 && beta != 2)
        throw ValidationError("rate::rate_function: beta must be 1 or 2");
    const double r = t.right_edge();
    check_xs(xs, r);

    const AnnealedSolver asol(t.profile());
    const double p_alpha = asol.p_form(t.profile().alpha);
    if (!(p_alpha > 0.0))
        throw NumericalError("rate::rate_function: P(sigma, alpha) vanishes, theta cap unbounded");
    const double b = static_cast<double>(beta);

    // Path continuity over the full theta range decides the upper-bound tag.
    const double cap_max = b * (xs.back() / p_alpha + 1.0);
    const MaximizerPath path = asol.maximizer_path(linspace(0.0, cap_max, 65), beta);

    RateCurve curve;
    curve.beta = beta;
    curve.xs = xs;
    curve.values.resize(xs.size());
    curve.theta_stars.resize(xs.size());
    curve.methods.assign(xs.size(), RateMethod::sup_direct);
    curve.upper_bound_only = !path.continuous;

    parallel_for(xs.size(), [&](std::size_t ix) {
        const double x = std::max(xs[ix], r);
        const double cap = b * (x / p_alpha + 1.0);
        const int grid_n = 256;
        std::vector<double> vals(grid_n);
        std::vector<Eigen::VectorXd> psis(grid_n);
        const Eigen::VectorXd* warm = nullptr;
        int best = 0;
        for (int j = 0; j < grid_n; ++j) {
            const double theta = cap * (static_cast<double>(j) / (grid_n - 1));
            const AnnealedResult f = asol.annealed_f(theta, beta, warm);
            psis[j] = f.psi;
            warm = &psis[j];
            vals[j] = t.spherical_j(theta, x, beta) - f.value;
            if (vals[j] > vals[best]) best = j;
        }
        const double lo = cap * (static_cast<double>(std::max(0, best - 1)) / (grid_n - 1));
        const double hi = cap * (static_cast<double>(std::min(grid_n - 1, best + 1)) / (grid_n - 1));
        const Eigen::VectorXd warm_best = psis[best];
        const auto g = golden_max(
            [&](double theta) {
                return t.spherical_j(theta, x, beta) -
                       asol.annealed_f(theta, beta, &warm_best).value;
            },
            lo, hi, 70);
        if (g.value >= vals[best]) {
            curve.values[ix] = std::max(g.value, 0.0);
            curve.theta_stars[ix] = g.arg;
        } else {
            curve.values[ix] = std::max(vals[best], 0.0);
            curve.theta_stars[ix] = cap * (static_cast<double>(best) / (grid_n - 1));
        }
    });
    return curve;
}

RateCurve rate_function(const BlockProfile& p, int beta, const std::vector<double>& xs) {
    TransformOptions opts;
    opts.x_max = xs.empty() ? 12.0 : xs.back() + 2.0;
    const TransformTable t(p, opts);
    return rate_function(t, beta, xs);
}

RateCurve rate_closed_form(const TransformTable& t, int beta, const std::vector<double>& xs) {
    if (beta != 1 && beta != 2)
        throw ValidationError("rate::rate_closed_form: beta must be 1 or 2");
    const double r = t.right_edge();
    check_xs(xs, r);
    if (!t.r_extension_monotone())
        throw NumericalError(
            "rate::rate_closed_form: R(theta) + 1/theta monotonicity check failed; "
            "use rate_function instead");
    if (xs.back() > t.extension_xmax() + 1e-9)
        throw NumericalError("rate::rate_closed_form: x grid exceeds the extension range");

    auto gap = [&](double u) { return t.g_bar(u) - t.stieltjes(u); };

    RateCurve curve;
    curve.beta = beta;
    curve.xs = xs;
    curve.methods.assign(xs.size(), RateMethod::closed_form);
    curve.theta_stars.resize(xs.size());
    curve.values.resize(xs.size());

    double acc = 0.0;
    double prev = r;
    for (std::size_t ix = 0; ix < xs.size(); ++ix) {
        const double x = std::max(xs[ix], r);
        if (ix == 0) {
            // Edge segment via u = r + s^2: the integrand is analytic in s.
            const double s0 = std::sqrt(std::max(x - r, 0.0));
            if (s0 > 0.0)
                acc = adaptive_simpson([&](double s) { return gap(r + s * s) * 2.0 * s; }, 0.0,
                                       s0, 1e-10, 26);
        } else if (x > prev) {
            acc += adaptive_simpson(gap, prev, x, 1e-10, 26);
        }
        prev = x;
        curve.values[ix] = (0.5 * static_cast<double>(beta)) * acc;
        // First-order condition: the optimizing theta is (beta/2) Gbar(x).
        curve.theta_stars[ix] =
            (x > r) ? 0.5 * static_cast<double>(beta) * t.g_bar(x) : 0.0;
    }
    return curve;
}

TiltSolution tilt_solve(const BlockProfile& p, int beta, double x, const MaximizerPath& path) {
    if (beta != 1 && beta != 2)
        throw ValidationError("rate::tilt_solve: beta must be 1 or 2");
    if (!path.continuous)
        throw NumericalError(
            "rate::tilt_solve: maximizer path has jumps; the tilt construction needs a "
            "continuous psi^theta");

    const QveSolver solver(p);
    const QveSolution sol = solver.solve_real(x);  // throws if x is not beyond the edge
    const Eigen::VectorXd g = -sol.m.real();
    const Eigen::MatrixXd S = p.sigma_sq();
    const AnnealedSolver asol(p);
    const double b = static_cast<double>(beta);

    auto excess = [&](double theta) {
        const Eigen::VectorXd psi = asol.psi_at(path, theta, beta);
        const Eigen::VectorXd dsqrt = (g.array() * psi.array()).sqrt().matrix();
        const Eigen::MatrixXd B = dsqrt.asDiagonal() * S * dsqrt.asDiagonal();
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B, Eigen::EigenvaluesOnly);
        const double rho = es.eigenvalues().maxCoeff();
        return (2.0 * theta / b) * rho - 1.0;
    };

    // Fine multiplicative scan finds the first sign change (smallest root).
    double lo = 1e-4 * b, hi = lo;
    bool bracketed = false;
    for (int k = 0; k < 200; ++k) {
        hi = lo * 1.25;
        if (excess(hi) >= 0.0) {
            bracketed = true;
            break;
        }
        lo = hi;
    }
    if (!bracketed)
        throw NumericalError("rate::tilt_solve: no bracket for the tilt equation at x = " +
                             std::to_string(x));
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (excess(mid) >= 0.0)
            hi = mid;
        else
            lo = mid;
        if (hi - lo < 1e-15 * hi) break;
    }

    TiltSolution out;
    out.x = x;
    out.theta_x = 0.5 * (lo + hi);
    out.psi_at_theta = asol.psi_at(path, out.theta_x, beta);
    const Eigen::VectorXd dsqrt = (g.array() * out.psi_at_theta.array()).sqrt().matrix();
    const Eigen::MatrixXd B = dsqrt.asDiagonal() * S * dsqrt.asDiagonal();
    out.rho_value =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(B, Eigen::EigenvaluesOnly)
            .eigenvalues()
            .maxCoeff();
    return out;
}

PathologicalRate pathological_rate(double a, double b, double alpha, int beta,
                                   const std::vector<double>& xs) {
    if (!(a > 0.0) || !(b > 0.0))
        throw ValidationError("rate::pathological_rate: block entries must be positive");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("rate::pathological_rate: alpha must lie in (0,1)");
    if (xs.empty()) throw ValidationError("rate::pathological_rate: empty x grid");

    const double s1 = std::sqrt(a * alpha);          // printed sqrt(a alpha) scaling
    const double s2 = std::sqrt(b * (1.0 - alpha));
    const double inf = std::numeric_limits<double>::infinity();

    PathologicalRate out;
    out.xs = xs;
    out.bulk_edge = 2.0 * std::max(s1, s2);

    // All finite branch arguments evaluated in one pass on the Wigner curve.
    std::vector<double> ys;
    for (double x : xs) {
        if (x / s1 > 2.0) ys.push_back(x / s1);
        if (x / s2 > 2.0) ys.push_back(x / s2);
    }
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    std::map<double, double> wigner_rate;
    if (!ys.empty()) {
        const BlockProfile wigner =
            BlockProfile::make(Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Ones(1));
        TransformOptions opts;
        opts.x_max = ys.back() + 1.0;
        const TransformTable t(wigner, opts);
        const RateCurve base = rate_closed_form(t, beta, ys);
        for (std::size_t i = 0; i < ys.size(); ++i) wigner_rate[ys[i]] = base.values[i];
    }
    auto wigner_i = [&](double y) { return (y > 2.0) ? wigner_rate.at(y) : inf; };

    out.values.resize(xs.size());
    out.active_branch.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        if (x < out.bulk_edge) {  // below the bulk edge the speed-N rate is infinite
            out.values[i] = inf;
            out.active_branch[i] = 0;
            continue;
        }
        const double b1 = alpha * wigner_i(x / s1);
        const double b2 = (1.0 - alpha) * wigner_i(x / s2);
        out.values[i] = std::min(b1, b2);
        out.active_branch[i] = (b1 <= b2) ? 1 : 2;
    }
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (out.active_branch[i - 1] != 0 && out.active_branch[i] != 0 &&
            out.active_branch[i] != out.active_branch[i - 1])
            out.switch_locations.push_back(0.5 * (xs[i - 1] + xs[i]));
    }
    return out;
}

}  // namespace varprof

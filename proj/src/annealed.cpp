#include "varprof/annealed.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "varprof/numerics.hpp"
#include "varprof/rng.hpp"

namespace varprof {

namespace {

constexpr double kPsiFloor = 1e-12;    // interior clipping, no log barrier
constexpr double kInnerTol = 1e-11;    // projected-gradient norm target
constexpr double kJumpTol = 1e-3;      // sup-norm gap that flags a candidate jump

Eigen::VectorXd clip_renormalize(Eigen::VectorXd psi) {
    for (int i = 0; i < psi.size(); ++i) psi(i) = std::max(psi(i), kPsiFloor);
    psi /= psi.sum();
    return psi;
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (int i = 0; i < a.size(); ++i) {
        if (a(i) < b(i)) return true;
        if (a(i) > b(i)) return false;
    }
    return false;
}

}  // namespace

const char* to_string(TwoBlockCase c) {
    switch (c) {
        case TwoBlockCase::concave: return "concave";
        case TwoBlockCase::xmin_ge_half: return "xmin_ge_half";
        case TwoBlockCase::xmin_le_alpha: return "xmin_le_alpha";
        case TwoBlockCase::symmetric_critical: return "symmetric_critical";
        case TwoBlockCase::pathological: return "pathological";
    }
    return "unknown";
}

AnnealedSolver::AnnealedSolver(BlockProfile p) : p_(std::move(p)), S_(p_.sigma_sq()) {
    const int n = p_.n;
    starts_.push_back(p_.alpha);
    starts_.push_back(Eigen::VectorXd::Constant(n, 1.0 / n));
    // 32 uniform-simplex draws plus n vertex-biased ones; the battery is a
    // fixed function of n so results are reproducible.
    SplitMix64 rng(0xA11EA1EDF00DULL ^ (0x9E3779B9ULL * static_cast<std::uint64_t>(n)));
    auto exp1 = [](SplitMix64& r) { return -std::log(1.0 - r.uniform01()); };
    for (int s = 0; s < 32; ++s) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = exp1(rng);
        starts_.push_back(v / v.sum());
    }
    for (int vtx = 0; vtx < n; ++vtx) {
        SplitMix64 child = rng.child(vtx);
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) {
            double g = 0.0;
            const int shape = (i == vtx) ? 8 : 1;  // Gamma(shape) as a sum of exponentials
            for (int s = 0; s < shape; ++s) g += exp1(child);
            v(i) = g;
        }
        starts_.push_back(v / v.sum());
    }
}

double AnnealedSolver::p_form(const Eigen::VectorXd& psi) const { return psi.dot(S_ * psi); }

double AnnealedSolver::objective(double tau, const Eigen::VectorXd& psi) const {
    // Relative-entropy penalty in the nonnegative convention: the inner value
    // carries -KL(alpha || psi) = sum alpha_i log(psi_i/alpha_i) <= 0.
    double ent = 0.0;
    for (int i = 0; i < psi.size(); ++i)
        ent += p_.alpha(i) * (std::log(psi(i)) - std::log(p_.alpha(i)));
    return tau * p_form(psi) + ent;
}

AnnealedSolver::Inner AnnealedSolver::local_max(double tau, Eigen::VectorXd psi0) const {
    const int n = p_.n;
    Eigen::VectorXd psi = clip_renormalize(std::move(psi0));

    auto grad = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return 2.0 * tau * (S_ * v) + (p_.alpha.array() / v.array()).matrix();
    };
    auto projected_norm = [&](const Eigen::VectorXd& g) {
        const Eigen::VectorXd d = g.array() - g.mean();
        return d.norm();
    };

    double fval = objective(tau, psi);
    for (int round = 0; round < 3; ++round) {
        // Projected gradient ascent with Armijo backtracking.
        for (int it = 0; it < 60; ++it) {
            const Eigen::VectorXd g = grad(psi);
            Eigen::VectorXd d = (g.array() - g.mean()).matrix();
            const double dn = d.norm();
            if (dn < kInnerTol) break;
            double t = 0.25 / std::max(1.0, d.cwiseAbs().maxCoeff());
            bool moved = false;
            for (int h = 0; h < 40; ++h) {
                const Eigen::VectorXd cand = clip_renormalize(psi + t * d);
                const double fc = objective(tau, cand);
                if (fc > fval + 1e-4 * t * dn * dn) {
                    psi = cand;
                    fval = fc;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if (!moved) break;
        }
        // KKT Newton polish: grad - lambda 1 = 0, 1'psi = 1.
        double lambda = grad(psi).mean();
        for (int it = 0; it < 60; ++it) {
            const Eigen::VectorXd g = grad(psi);
            Eigen::VectorXd res(n + 1);
            res.head(n) = g.array() - lambda;
            res(n) = psi.sum() - 1.0;
            const double r0 = res.cwiseAbs().maxCoeff();
            if (r0 < 1e-14) break;
            Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n + 1, n + 1);
            J.topLeftCorner(n, n) = 2.0 * tau * S_;
            for (int i = 0; i < n; ++i) J(i, i) -= p_.alpha(i) / (psi(i) * psi(i));
            J.col(n).head(n).setConstant(-1.0);
            J.row(n).head(n).setConstant(1.0);
            const Eigen::VectorXd step = J.partialPivLu().solve(-res);
            double t = 1.0;
            bool accepted = false;
            for (int h = 0; h < 30; ++h) {
                const Eigen::VectorXd pc = psi + t * step.head(n);
                if (pc.minCoeff() > 0.0) {
                    const double lc = lambda + t * step(n);
                    Eigen::VectorXd rc(n + 1);
                    rc.head(n) = grad(pc).array() - lc;
                    rc(n) = pc.sum() - 1.0;
                    if (rc.cwiseAbs().maxCoeff() < r0) {
                        psi = pc;
                        lambda = lc;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if (!accepted) break;
        }
        fval = objective(tau, psi);
        if (projected_norm(grad(psi)) < kInnerTol) break;
    }

    Inner out;
    out.psi = psi;
    out.value = fval;
    out.defect = projected_norm(grad(psi));
    out.converged = out.defect < 1e-8;
    return out;
}

AnnealedSolver::Inner AnnealedSolver::optimize_tau(double tau, const Eigen::VectorXd* warm) const {
    std::vector<Eigen::VectorXd> starts = starts_;
    if (warm != nullptr) starts.push_back(*warm);

    std::vector<Inner> results(starts.size());
    parallel_for(starts.size(), [&](std::size_t s) { results[s] = local_max(tau, starts[s]); });

    // Deterministic reduction: best value, ties to the lexicographically
    // smaller psi (this also picks a continuous determination through the
    // symmetric pitchfork).
    std::size_t best = 0;
    for (std::size_t s = 1; s < results.size(); ++s) {
        const double dv = results[s].value - results[best].value;
        const double tol = 1e-12 * (1.0 + std::abs(results[best].value));
        if (dv > tol || (std::abs(dv) <= tol && lex_less(results[s].psi, results[best].psi)))
            best = s;
    }
    Inner out = results[best];
    double vmin = out.value, vmax = out.value;
    for (const auto& rgt : results) {
        if (!rgt.converged) continue;
        vmin = std::min(vmin, rgt.value);
        vmax = std::max(vmax, rgt.value);
    }
    out.spread = vmax - vmin;
    return out;
}

AnnealedResult AnnealedSolver::annealed_f(double theta, int beta,
                                          const Eigen::VectorXd* warm) const {
    if (beta != 1 && beta != 2)
        throw ValidationError("annealed::annealed_f: beta must be 1 or 2");
    if (theta < 0.0)
        throw ValidationError("annealed::annealed_f: theta must be nonnegative");
    const double b = static_cast<double>(beta);
    const double tau = 2.0 * (theta * theta) / (b * b);
    const Inner inner = optimize_tau(tau, warm);

    AnnealedResult res;
    res.theta = theta;
    res.value = 0.5 * b * inner.value;
    res.psi = inner.psi;
    res.critical_defect = 0.5 * b * inner.defect;
    res.multistart_spread = 0.5 * b * inner.spread;
    return res;
}

MaximizerPath AnnealedSolver::maximizer_path(const std::vector<double>& thetas, int beta) const {
    if (thetas.empty() || thetas.front() < 0.0)
        throw ValidationError("annealed::maximizer_path: theta grid must start at 0");
    for (std::size_t i = 1; i < thetas.size(); ++i)
        if (thetas[i] <= thetas[i - 1])
            throw ValidationError("annealed::maximizer_path: theta grid must increase");

    MaximizerPath path;
    path.beta = beta;
    path.thetas = thetas;
    path.psis.resize(thetas.size());
    const Eigen::VectorXd* warm = nullptr;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        path.psis[i] = annealed_f(thetas[i], beta, warm).psi;
        warm = &path.psis[i];
    }

    // Iterated local refinement: a square-root drift shrinks with the width,
    // a genuine jump does not.
    for (std::size_t i = 0; i + 1 < thetas.size(); ++i) {
        double lo = thetas[i], hi = thetas[i + 1];
        Eigen::VectorXd plo = path.psis[i], phi = path.psis[i + 1];
        if ((phi - plo).cwiseAbs().maxCoeff() <= kJumpTol) continue;
        bool jump = true;
        for (int round = 0; round < 8; ++round) {
            const auto sub = linspace(lo, hi, 11);
            std::vector<Eigen::VectorXd> sp(sub.size());
            sp.front() = plo;
            sp.back() = phi;
            const Eigen::VectorXd* w = &plo;
            for (std::size_t j = 1; j + 1 < sub.size(); ++j) {
                sp[j] = annealed_f(sub[j], beta, w).psi;
                w = &sp[j];
            }
            double worst = 0.0;
            std::size_t worst_j = 0;
            for (std::size_t j = 0; j + 1 < sub.size(); ++j) {
                const double d = (sp[j + 1] - sp[j]).cwiseAbs().maxCoeff();
                if (d > worst) {
                    worst = d;
                    worst_j = j;
                }
            }
            if (worst <= kJumpTol) {
                jump = false;
                break;
            }
            lo = sub[worst_j];
            hi = sub[worst_j + 1];
            plo = sp[worst_j];
            phi = sp[worst_j + 1];
        }
        if (jump) path.jump_locations.push_back(0.5 * (lo + hi));
    }
    path.continuous = path.jump_locations.empty();
    return path;
}

Eigen::VectorXd AnnealedSolver::psi_at(const MaximizerPath& path, double theta, int beta) const {
    const Eigen::VectorXd* warm = nullptr;
    if (!path.thetas.empty()) {
        const auto it = std::lower_bound(path.thetas.begin(), path.thetas.end(), theta);
        std::size_t j = std::min<std::size_t>(it - path.thetas.begin(), path.thetas.size() - 1);
        warm = &path.psis[j];
    }
    return annealed_f(theta, beta, warm).psi;
}

AnnealedResult annealed_f(const BlockProfile& p, double theta, int beta) {
    return AnnealedSolver(p).annealed_f(theta, beta);
}

GridAnnealedResult annealed_f(const GridProfile& p, double theta, int beta, int n) {
    const double b = static_cast<double>(beta);
    auto corrected = [&](int m) {
        AnnealedResult r = annealed_f(discretize(p, m), theta, beta);
        r.value -= theta * theta / ((m + 1) * b);  // exact squared-scale shift
        return r;
    };
    GridAnnealedResult out;
    out.coarse = corrected(n);
    out.value = out.coarse.value;
    out.doubling_defect = std::abs(corrected(2 * n).value - out.value);
    return out;
}

TwoBlockClassification classify_2x2(double a, double b, double c, double alpha, int beta) {
    if (a < 0 || b < 0 || c < 0)
        throw ValidationError("annealed::classify_2x2: entries must be nonnegative");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("annealed::classify_2x2: alpha must lie in (0,1)");
    TwoBlockClassification cls;
    cls.swapped = alpha > 0.5;
    cls.a = cls.swapped ? b : a;
    cls.b = cls.swapped ? a : b;
    cls.c = c;
    cls.alpha = cls.swapped ? 1.0 - alpha : alpha;

    const double a2 = cls.a * cls.a, b2 = cls.b * cls.b, c2 = cls.c * cls.c;
    const double d = a2 + b2 - 2.0 * c2;
    const double scale = std::max(1.0, a2 + b2 + c2);
    const double denom = 2.0 * c2 - a2 - b2;
    cls.x_min = (std::abs(denom) > 1e-14 * scale) ? (c2 - b2) / denom
                                                  : std::numeric_limits<double>::quiet_NaN();

    const double eq_tol = 1e-9;
    if (d <= eq_tol * scale) {
        cls.case_tag = TwoBlockCase::concave;
        return cls;
    }
    cls.theta_crit = beta * std::sqrt(2.0 / d);
    cls.theta_split_numeric = beta / std::sqrt(d);
    if (std::abs(cls.alpha - 0.5) <= eq_tol && std::abs(cls.x_min - 0.5) <= eq_tol)
        cls.case_tag = TwoBlockCase::symmetric_critical;
    else if (cls.x_min >= 0.5 - 1e-12)
        cls.case_tag = TwoBlockCase::xmin_ge_half;
    else if (cls.x_min <= cls.alpha + 1e-12)
        cls.case_tag = TwoBlockCase::xmin_le_alpha;
    else
        cls.case_tag = TwoBlockCase::pathological;
    return cls;
}

double small_theta_check(const BlockProfile& p, const TransformTable& t, int beta,
                         const std::vector<double>& thetas) {
    const double cap = 0.5 * beta * t.g_edge();
    AnnealedSolver solver(p);
    double worst = 0.0;
    const Eigen::VectorXd* warm = nullptr;
    Eigen::VectorXd prev;
    for (double theta : thetas) {
        if (!(theta > 0.0) || theta >= cap)
            throw ValidationError("annealed::small_theta_check: theta grid must lie in (0, " +
                                  std::to_string(cap) + ")");
        const AnnealedResult f = solver.annealed_f(theta, beta, warm);
        prev = f.psi;
        warm = &prev;
        const double rhs = 0.5 * beta * t.cum_r(2.0 * theta / beta);
        worst = std::max(worst, std::abs(f.value - rhs));
    }
    return worst;
}

}  // namespace varprof

#include "varprof/qve.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "varprof/numerics.hpp"

namespace varprof {

namespace {

constexpr double kSolveTol = 1e-13;       // target equation defect
constexpr double kRequiredTol = 1e-12;    // contract: residual below this
constexpr double kEdgeEps = 1e-6;         // density threshold for "inside"
constexpr int kBisectSteps = 60;

using Cplx = std::complex<double>;

}  // namespace

QveSolver::QveSolver(BlockProfile p) : p_(std::move(p)), n_(p_.n) {
    const Eigen::MatrixXd S = p_.sigma_sq();
    A_ = S * p_.alpha.asDiagonal();
}

double QveSolver::defect(const Eigen::VectorXcd& m, Cplx z) const {
    const Eigen::VectorXcd sm = A_ * m;
    double worst = 0.0;
    for (int i = 0; i < n_; ++i) {
        const Cplx d = -1.0 / m(i) - z - sm(i);
        worst = std::max(worst, std::abs(d));
    }
    return worst;
}

// Newton with step halving; falls back to the damped contraction map
// Phi(m) = -1/(z + S m) when a Newton step leaves the upper half-plane.
Eigen::VectorXcd QveSolver::refine(Eigen::VectorXcd m, Cplx z, int* iters) const {
    const bool upper = z.imag() > 0.0;
    auto residual_vec = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
        return (v.array() * (Eigen::VectorXcd::Constant(n_, z) + A_ * v).array() + 1.0).matrix();
    };
    auto ok_domain = [&](const Eigen::VectorXcd& v) {
        if (!upper) return true;
        for (int i = 0; i < n_; ++i)
            if (!(v(i).imag() > 0.0)) return false;
        return true;
    };

    for (int round = 0; round < 3; ++round) {
        // Newton phase.
        for (int it = 0; it < 16; ++it) {
            const Eigen::VectorXcd F = residual_vec(m);
            const double r0 = F.cwiseAbs().maxCoeff();
            if (iters) ++*iters;
            if (r0 < kSolveTol) return m;
            Eigen::MatrixXcd J = (m.asDiagonal() * A_.cast<Cplx>());
            const Eigen::VectorXcd diag = Eigen::VectorXcd::Constant(n_, z) + A_ * m;
            for (int i = 0; i < n_; ++i) J(i, i) += diag(i);
            const Eigen::VectorXcd dm = J.partialPivLu().solve(-F);
            double t = 1.0;
            bool accepted = false;
            for (int h = 0; h < 24; ++h) {
                Eigen::VectorXcd cand = m + t * dm;
                if (ok_domain(cand)) {
                    const double r1 = residual_vec(cand).cwiseAbs().maxCoeff();
                    if (r1 < r0) {
                        m = std::move(cand);
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if (!accepted) break;
        }
        if (residual_vec(m).cwiseAbs().maxCoeff() < kSolveTol) return m;
        // Damped fixed point (omega = 0.5); hyperbolic contraction on H.
        for (int it = 0; it < 800; ++it) {
            const Eigen::VectorXcd phi =
                (-(Eigen::VectorXcd::Constant(n_, z) + A_ * m).array().inverse()).matrix();
            m = 0.5 * m + 0.5 * phi;
            if (iters) ++*iters;
            if ((m - phi).cwiseAbs().maxCoeff() < 0.25 * kSolveTol) break;
        }
    }
    return m;
}

// Geometric eta-descent from Im = 2 with solution continuation.
Eigen::VectorXcd QveSolver::ladder(Cplx z, int* iters) const {
    const double target = z.imag();
    const double eta0 = std::max(2.0, 2.0 * target);
    Cplx z0(z.real(), eta0);
    Eigen::VectorXcd m(n_);
    for (int i = 0; i < n_; ++i) m(i) = 1.0 / (Cplx(0.0, 1.0) - z0);
    m = refine(std::move(m), z0, iters);
    double eta = eta0;
    while (eta > target) {
        eta = std::max(target, 0.5 * eta);
        m = refine(std::move(m), Cplx(z.real(), eta), iters);
    }
    return m;
}

QveSolution QveSolver::solve(Cplx z) const {
    if (!(z.imag() > 0.0))
        throw ValidationError("qve::solve_qve: Im z must be positive (got Im z = " +
                              std::to_string(z.imag()) + ")");
    QveSolution sol;
    sol.z = z;
    int iters = 0;
    sol.m = ladder(z, &iters);
    sol.iterations = iters;
    sol.residual = defect(sol.m, z);
    sol.converged = sol.residual <= kRequiredTol;
    if (!sol.converged)
        throw NumericalError("qve::solve_qve: no convergence at z = (" + std::to_string(z.real()) +
                             ", " + std::to_string(z.imag()) + "), residual " +
                             std::to_string(sol.residual));
    return sol;
}

QveSolution QveSolver::solve_real(double x) const {
    int iters = 0;
    const double probe_eta = 1e-7;
    Eigen::VectorXcd mc = ladder(Cplx(x, probe_eta), &iters);
    const double im_max = mc.imag().cwiseAbs().maxCoeff();
    if (im_max > 1e-4)
        throw NumericalError("qve::solve_qve: real z = " + std::to_string(x) +
                             " lies inside the support or too close to an edge (Im m = " +
                             std::to_string(im_max) + ")");
    mc = refine(std::move(mc), Cplx(x, 1e-9), &iters);

    // Real Newton polish on m o (x + A m) + 1 = 0.
    Eigen::VectorXd m = mc.real();
    auto residual_vec = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return (v.array() * (Eigen::VectorXd::Constant(n_, x) + A_ * v).array() + 1.0).matrix();
    };
    bool done = false;
    for (int it = 0; it < 60 && !done; ++it) {
        const Eigen::VectorXd F = residual_vec(m);
        const double r0 = F.cwiseAbs().maxCoeff();
        ++iters;
        if (r0 < kSolveTol) {
            done = true;
            break;
        }
        Eigen::MatrixXd J = m.asDiagonal() * A_;
        const Eigen::VectorXd diag = Eigen::VectorXd::Constant(n_, x) + A_ * m;
        for (int i = 0; i < n_; ++i) J(i, i) += diag(i);
        const Eigen::VectorXd dm = J.partialPivLu().solve(-F);
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h < 30; ++h) {
            const Eigen::VectorXd cand = m + t * dm;
            if (residual_vec(cand).cwiseAbs().maxCoeff() < r0) {
                m = cand;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
    }

    QveSolution sol;
    sol.z = Cplx(x, 0.0);
    sol.m = m.cast<Cplx>();
    sol.iterations = iters;
    sol.residual = defect(sol.m, sol.z);
    sol.converged = sol.residual <= kRequiredTol && (m.array() < 0.0).all();
    if (!sol.converged)
        throw NumericalError("qve::solve_qve: real-axis solve failed at z = " + std::to_string(x) +
                             " (residual " + std::to_string(sol.residual) + ")");
    return sol;
}

double QveSolver::stieltjes_real(double x) const {
    const QveSolution sol = solve_real(x);
    return -(p_.alpha.array() * sol.m.real().array()).sum();
}

double QveSolver::stieltjes_real_derivative(double x) const {
    // Differentiate m o (x + A m) + 1 = 0:  J m' = -m.
    const QveSolution sol = solve_real(x);
    const Eigen::VectorXd m = sol.m.real();
    Eigen::MatrixXd J = m.asDiagonal() * A_;
    const Eigen::VectorXd diag = Eigen::VectorXd::Constant(n_, x) + A_ * m;
    for (int i = 0; i < n_; ++i) J(i, i) += diag(i);
    const Eigen::VectorXd mp = J.partialPivLu().solve(-m);
    return -(p_.alpha.array() * mp.array()).sum();
}

double QveSolver::density_at(double E, double eta2) const {
    const double eta1 = 10.0 * eta2;
    int iters = 0;
    Eigen::VectorXcd m1 = ladder(Cplx(E, eta1), &iters);
    Eigen::VectorXcd m2 = refine(m1, Cplx(E, eta2), &iters);
    const double v1 = (p_.alpha.array() * m1.imag().array()).sum();
    const double v2 = (p_.alpha.array() * m2.imag().array()).sum();
    const double v0 = (10.0 * v2 - v1) / 9.0;  // linear Richardson to eta = 0
    const double pi = std::acos(-1.0);
    return std::max(0.0, v0 / pi);
}

bool QveSolver::solve_augmented(double w, Eigen::VectorXd& g, double& x) const {
    // Unknowns (g, x); equations g_i (x - (A g)_i) - 1 = 0 and alpha^T g = w.
    for (int it = 0; it < 60; ++it) {
        const Eigen::VectorXd Ag = A_ * g;
        Eigen::VectorXd F(n_ + 1);
        for (int i = 0; i < n_; ++i) F(i) = g(i) * (x - Ag(i)) - 1.0;
        F(n_) = p_.alpha.dot(g) - w;
        const double r0 = F.cwiseAbs().maxCoeff();
        if (r0 < kSolveTol) return true;
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n_ + 1, n_ + 1);
        for (int i = 0; i < n_; ++i) {
            for (int j = 0; j < n_; ++j) J(i, j) = -g(i) * A_(i, j);
            J(i, i) += x - Ag(i);
            J(i, n_) = g(i);
        }
        J.row(n_).head(n_) = p_.alpha.transpose();
        const Eigen::VectorXd d = J.partialPivLu().solve(-F);
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h < 30; ++h) {
            Eigen::VectorXd gc = g + t * d.head(n_);
            double xc = x + t * d(n_);
            const Eigen::VectorXd Agc = A_ * gc;
            double r1 = std::abs(p_.alpha.dot(gc) - w);
            for (int i = 0; i < n_; ++i)
                r1 = std::max(r1, std::abs(gc(i) * (xc - Agc(i)) - 1.0));
            if (r1 < r0) {
                g = std::move(gc);
                x = xc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) return false;
    }
    return false;
}

bool QveSolver::solve_real_branch(double x, Eigen::VectorXd& g) const {
    for (int it = 0; it < 60; ++it) {
        const Eigen::VectorXd Ag = A_ * g;
        Eigen::VectorXd F(n_);
        for (int i = 0; i < n_; ++i) F(i) = g(i) * (x - Ag(i)) - 1.0;
        const double r0 = F.cwiseAbs().maxCoeff();
        if (r0 < kSolveTol) return true;
        Eigen::MatrixXd J = -(g.asDiagonal() * A_);
        for (int i = 0; i < n_; ++i) J(i, i) += x - Ag(i);
        const Eigen::VectorXd d = J.partialPivLu().solve(-F);
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h < 30; ++h) {
            Eigen::VectorXd gc = g + t * d;
            const Eigen::VectorXd Agc = A_ * gc;
            double r1 = 0.0;
            for (int i = 0; i < n_; ++i)
                r1 = std::max(r1, std::abs(gc(i) * (x - Agc(i)) - 1.0));
            if (r1 < r0) {
                g = std::move(gc);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) return false;
    }
    return false;
}

namespace {

// Inside/outside predicate for edge bisection: outside means the real-axis
// solve converges with all m_i real AND the extrapolated density stays below
// the edge threshold.
bool outside_support(const QveSolver& solver, double E) {
    try {
        solver.solve_real(E);
    } catch (const NumericalError&) {
        return false;
    }
    return solver.density_at(E) <= kEdgeEps;
}

}  // namespace

EdgeResult edges(const BlockProfile& p) {
    const QveSolver solver(p);
    double lo = 0.0;
    double hi = 2.0 * p.max_sigma() + 1.0;
    if (!outside_support(solver, hi))
        throw NumericalError("qve::edges: bracket endpoint " + std::to_string(hi) +
                             " not outside the support");
    for (int it = 0; it < kBisectSteps; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (outside_support(solver, mid))
            hi = mid;
        else
            lo = mid;
    }
    EdgeResult res;
    res.r = 0.5 * (lo + hi);
    res.l = -res.r;  // centered entry laws: mu_sigma symmetric
    res.bracket = 0.5 * (hi - lo);
    return res;
}

double SpectralDensity::cdf(double x) const {
    if (grid.empty()) return 0.0;
    if (x <= grid.front()) return 0.0;
    if (x >= grid.back()) return cumulative.back();
    const auto it = std::upper_bound(grid.begin(), grid.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - grid.begin());
    const double x0 = grid[j - 1], x1 = grid[j];
    const double t = (x - x0) / (x1 - x0);
    // Trapezoid-consistent interpolation between cumulative nodes.
    const double rho0 = density[j - 1], rho1 = density[j];
    const double rho_x = rho0 + t * (rho1 - rho0);
    return cumulative[j - 1] + 0.5 * (rho0 + rho_x) * (x - x0);
}

SpectralDensity density(const BlockProfile& p, const GridSpec& spec) {
    SpectralDensity out;
    const EdgeResult e = edges(p);
    out.l = e.l;
    out.r = e.r;
    GridSpec gs = spec;
    if (gs.automatic) {
        gs.lo = e.l - 0.5;
        gs.hi = e.r + 0.5;
    }
    if (!(gs.hi > gs.lo) || gs.count < 2)
        throw ValidationError("qve::density: bad grid specification");
    out.grid = linspace(gs.lo, gs.hi, gs.count);
    out.density.assign(gs.count, 0.0);

    const QveSolver solver(p);
    std::vector<char> bad(gs.count, 0);
    parallel_for(gs.count, [&](std::size_t j) {
        try {
            out.density[j] = solver.density_at(out.grid[j]);
        } catch (const NumericalError&) {
            bad[j] = 1;
        }
    });
    for (std::size_t j = 0; j < gs.count; ++j) {
        if (!bad[j]) continue;
        out.flagged.push_back(j);
        std::size_t a = j, b = j;
        while (a > 0 && bad[a]) --a;
        while (b + 1 < gs.count && bad[b]) ++b;
        if (!bad[a] && !bad[b]) {
            const double t = (out.grid[j] - out.grid[a]) / (out.grid[b] - out.grid[a]);
            out.density[j] = out.density[a] + t * (out.density[b] - out.density[a]);
        }
    }

    out.cumulative.assign(gs.count, 0.0);
    for (std::size_t j = 1; j < gs.count; ++j) {
        out.cumulative[j] = out.cumulative[j - 1] + 0.5 * (out.density[j] + out.density[j - 1]) *
                                                        (out.grid[j] - out.grid[j - 1]);
    }
    out.mass_defect = std::abs(out.cumulative.back() - 1.0);
    return out;
}

// ---------------------------------------------------------------------------
// Wigner word enumeration (Remark on moments): closed walks of length 2k+1 on
// k+1 letters whose k distinct edges are each traversed exactly twice, taken
// up to relabeling. Generation is canonical (new letters appear in first-use
// order), so each equivalence class appears once.

namespace {

void word_dfs(int k, std::vector<int>& w, int used,
              std::map<std::pair<int, int>, int>& count, int open,
              std::vector<WignerWord>& out) {
    const int t = static_cast<int>(w.size()) - 1;  // steps taken
    if (t == 2 * k) {
        if (w.back() == 0 && used == k + 1 && open == 0) {
            WignerWord word;
            word.letters = w;
            for (const auto& [e, c] : count) word.edges.push_back(e);
            out.push_back(std::move(word));
        }
        return;
    }
    const int steps_left = 2 * k - t;
    const int new_letters = (k + 1) - used;
    if (steps_left < open + 2 * new_letters) return;

    const int cur = w.back();
    const int cand_max = std::min(used, k);  // letter `used` = introduce a new one
    for (int c = 0; c <= cand_max; ++c) {
        if (c == cur) continue;  // tree edges only
        const auto e = std::minmax(cur, c);
        auto it = count.find(e);
        const int cnt = (it == count.end()) ? 0 : it->second;
        if (cnt >= 2) continue;
        if (c == used && cnt != 0) continue;  // new letter means new edge
        count[e] = cnt + 1;
        w.push_back(c);
        word_dfs(k, w, used + (c == used ? 1 : 0), count, open + (cnt == 0 ? 1 : -1), out);
        w.pop_back();
        if (cnt == 0)
            count.erase(e);
        else
            count[e] = cnt;
    }
}

std::vector<WignerWord> enumerate_words(int k) {
    std::vector<WignerWord> out;
    std::vector<int> w{0};
    std::map<std::pair<int, int>, int> count;
    word_dfs(k, w, 1, count, 0, out);
    return out;
}

}  // namespace

const std::vector<WignerWord>& wigner_words(int k) {
    if (k < 1 || k > 6)
        throw ValidationError("qve::moments_oracle: k must lie in [1, 6], got " +
                              std::to_string(k));
    static std::mutex mtx;
    static std::map<int, std::vector<WignerWord>> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(k);
    if (it == cache.end()) it = cache.emplace(k, enumerate_words(k)).first;
    return it->second;
}

std::size_t wigner_word_count(int k) { return wigner_words(k).size(); }

double moments_oracle(const BlockProfile& p, int k) {
    const auto& words = wigner_words(k);
    const int n = p.n;
    const int letters = k + 1;
    const Eigen::MatrixXd S = p.sigma_sq();

    double total = 0.0;
    std::vector<int> idx(letters, 0);
    for (const auto& word : words) {
        for (;;) {
            double term = 1.0;
            for (int j = 0; j < letters; ++j) term *= p.alpha(idx[j]);
            for (const auto& [a, b] : word.edges) term *= S(idx[a], idx[b]);
            total += term;
            int pos = letters - 1;
            while (pos >= 0 && ++idx[pos] == n) idx[pos--] = 0;
            if (pos < 0) break;
        }
    }
    return total;
}

}  // namespace varprof

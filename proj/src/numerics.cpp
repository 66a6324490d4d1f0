#include "varprof/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace varprof {

std::vector<double> linspace(double a, double b, std::size_t count) {
    std::vector<double> out;
    if (count == 0) return out;
    if (count == 1) {
        out.push_back(a);
        return out;
    }
    out.resize(count);
    const double step = (b - a) / static_cast<double>(count - 1);
    for (std::size_t j = 0; j < count; ++j) out[j] = a + step * static_cast<double>(j);
    out.back() = b;
    return out;
}

namespace {

GaussLegendre compute_gl(int n) {
    GaussLegendre gl;
    gl.nodes.resize(n);
    gl.weights.resize(n);
    const double pi = std::acos(-1.0);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Legendre recurrence for P_n(x) and its derivative.
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        gl.nodes[i] = x;
        gl.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    return gl;
}

}  // namespace

const GaussLegendre& gauss_legendre(int n) {
    static std::mutex mtx;
    static std::map<int, GaussLegendre> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gl(n)).first;
    return it->second;
}

double gl_integrate(const std::function<double(double)>& f, double a, double b, int order) {
    const GaussLegendre& gl = gauss_legendre(order);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < order; ++i) sum += gl.weights[i] * f(mid + half * gl.nodes[i]);
    return sum * half;
}

namespace {

double simpson(double fa, double fm, double fb, double h6) { return h6 * (fa + 4.0 * fm + fb); }

double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                            double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(fa, flm, fm, (m - a) / 6.0);
    const double right = simpson(fm, frm, fb, (b - m) / 6.0);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = simpson(fa, fm, fb, (b - a) / 6.0);
    return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

GoldenResult golden_max(const std::function<double(double)>& f, double a, double b, int iters) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = a, hi = b;
    double c = hi - invphi * (hi - lo);
    double d = lo + invphi * (hi - lo);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < iters; ++i) {
        if (fc >= fd) {  // ties move toward the smaller argument
            hi = d;
            d = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + invphi * (hi - lo);
            fd = f(d);
        }
    }
    const double arg = (fc >= fd) ? c : d;
    const double val = std::max(fc, fd);
    return {arg, val};
}

std::vector<double> Chebyshev::lobatto_nodes(double a, double b, int n) {
    const double pi = std::acos(-1.0);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    std::vector<double> xs(n + 1);
    for (int j = 0; j <= n; ++j) xs[j] = mid + half * std::cos(pi * j / n);
    return xs;
}

Chebyshev Chebyshev::from_values(const std::vector<double>& v, double a, double b) {
    const int n = static_cast<int>(v.size()) - 1;
    if (n < 1) throw std::invalid_argument("Chebyshev: need at least two nodes");
    const double pi = std::acos(-1.0);
    Chebyshev c;
    c.a_ = a;
    c.b_ = b;
    c.coef_.assign(n + 1, 0.0);
    for (int k = 0; k <= n; ++k) {
        double s = 0.5 * (v[0] + (k % 2 == 0 ? v[n] : -v[n]));
        for (int j = 1; j < n; ++j) s += v[j] * std::cos(pi * k * j / n);
        c.coef_[k] = 2.0 * s / n;
    }
    c.coef_[0] *= 0.5;
    c.coef_[n] *= 0.5;
    return c;
}

Chebyshev Chebyshev::fit(const std::function<double(double)>& f, double a, double b, int n) {
    const auto xs = lobatto_nodes(a, b, n);
    std::vector<double> v(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) v[j] = f(xs[j]);
    return from_values(v, a, b);
}

double Chebyshev::operator()(double x) const {
    const double t = (2.0 * x - (a_ + b_)) / (b_ - a_);
    double b1 = 0.0, b2 = 0.0;
    for (std::size_t k = coef_.size(); k-- > 1;) {
        const double b0 = 2.0 * t * b1 - b2 + coef_[k];
        b2 = b1;
        b1 = b0;
    }
    return t * b1 - b2 + coef_[0];
}

namespace {
std::atomic<int> g_max_threads{0};  // 0 = hardware concurrency
}

void set_max_threads(int n) { g_max_threads.store(n); }

int max_threads() {
    int n = g_max_threads.load();
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, n);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const int workers = std::min<std::size_t>(max_threads(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                body(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace varprof

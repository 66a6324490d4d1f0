#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace varprof {

/// Inclusive uniform grid with `count` points (count >= 2, or the single point a).
std::vector<double> linspace(double a, double b, std::size_t count);

/// Gauss-Legendre nodes/weights on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};
const GaussLegendre& gauss_legendre(int n);

/// Fixed-order GL integral of f on [a, b].
double gl_integrate(const std::function<double(double)>& f, double a, double b, int order = 24);

/// Adaptive Simpson with absolute tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-11, int max_depth = 28);

/// Golden-section maximizer on [a, b]; ties resolve toward smaller argument.
struct GoldenResult {
    double arg;
    double value;
};
GoldenResult golden_max(const std::function<double(double)>& f, double a, double b,
                        int iters = 80);

/// Chebyshev interpolant of a smooth f on [a, b] (Chebyshev-Lobatto fit).
class Chebyshev {
public:
    Chebyshev() = default;
    static Chebyshev fit(const std::function<double(double)>& f, double a, double b, int n);
    /// Fit from precomputed values at the Lobatto nodes x_j = mid + half*cos(pi j / n).
    static Chebyshev from_values(const std::vector<double>& values_at_nodes, double a, double b);
    static std::vector<double> lobatto_nodes(double a, double b, int n);

    double operator()(double x) const;
    double a() const { return a_; }
    double b() const { return b_; }
    bool valid() const { return !coef_.empty(); }

private:
    std::vector<double> coef_;
    double a_ = 0.0, b_ = 0.0;
};

/// Worker cap for parallel loops (set by the CLI --threads flag; defaults to
/// hardware concurrency). Loops write per-index slots, so results do not
/// depend on the schedule.
void set_max_threads(int n);
int max_threads();
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace varprof

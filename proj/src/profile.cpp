#include "varprof/profile.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace varprof {

namespace {

constexpr double kSymTol = 1e-12;
constexpr double kWeightTol = 1e-12;

void check_symmetric_nonnegative(const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() < 1)
        throw ValidationError(std::string("profile: ") + what + " must be square and non-empty");
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            if (!std::isfinite(m(i, j)))
                throw ValidationError(std::string("profile: non-finite ") + what + " entry at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
            if (m(i, j) < 0.0)
                throw ValidationError(std::string("profile: negative ") + what + " entry at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
            if (j > i && std::abs(m(i, j) - m(j, i)) > kSymTol)
                throw ValidationError(std::string("profile: ") + what + " not symmetric at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
}

}  // namespace

BlockProfile BlockProfile::make(Eigen::MatrixXd sigma, Eigen::VectorXd alpha) {
    check_symmetric_nonnegative(sigma, "sigma");
    if (alpha.size() != sigma.rows())
        throw ValidationError("profile: alpha length " + std::to_string(alpha.size()) +
                              " does not match sigma dimension " + std::to_string(sigma.rows()));
    for (int i = 0; i < alpha.size(); ++i) {
        if (!(alpha(i) > 0.0))
            throw ValidationError("profile: alpha[" + std::to_string(i) + "] must be positive");
    }
    const double sum = alpha.sum();
    if (std::abs(sum - 1.0) > kWeightTol)
        throw ValidationError("profile: alpha sums to " + std::to_string(sum) + ", expected 1");

    BlockProfile p;
    p.n = static_cast<int>(sigma.rows());
    // Exact-symmetrize so downstream arithmetic sees sigma(k,l) == sigma(l,k) bitwise.
    p.sigma = 0.5 * (sigma + sigma.transpose());
    p.alpha = std::move(alpha);
    p.gamma.resize(p.n);
    double acc = 0.0;
    for (int i = 0; i < p.n; ++i) {
        acc += p.alpha(i);
        p.gamma(i) = acc;
    }
    p.gamma(p.n - 1) = 1.0;
    return p;
}

GridProfile GridProfile::make(Eigen::MatrixXd values) {
    check_symmetric_nonnegative(values, "grid values");
    GridProfile p;
    p.resolution = static_cast<int>(values.rows());
    p.values = 0.5 * (values + values.transpose());
    return p;
}

double GridProfile::at(double x, double y) const {
    const int g = resolution;
    auto cell = [g](double t) {
        int k = static_cast<int>(std::floor(t * g));
        return std::clamp(k, 0, g - 1);
    };
    return values(cell(x), cell(y));
}

double profile_max_sigma(const Profile& p) {
    return std::visit([](const auto& q) { return q.max_sigma(); }, p);
}

std::vector<int> block_sizes(const Eigen::VectorXd& alpha, int N) {
    const int n = static_cast<int>(alpha.size());
    std::vector<int> sizes(n);
    std::vector<std::pair<double, int>> remainder(n);
    int assigned = 0;
    for (int k = 0; k < n; ++k) {
        const double exact = alpha(k) * N;
        sizes[k] = static_cast<int>(std::floor(exact));
        remainder[k] = {exact - sizes[k], k};
        assigned += sizes[k];
    }
    // Largest remainder first; ties to the lowest block index.
    std::stable_sort(remainder.begin(), remainder.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (int r = 0; r < N - assigned; ++r) sizes[remainder[r % n].second] += 1;
    return sizes;
}

Eigen::MatrixXd materialize(const BlockProfile& p, int N) {
    if (N < p.n)
        throw ValidationError("profile::materialize: N = " + std::to_string(N) +
                              " smaller than block count n = " + std::to_string(p.n));
    const auto sizes = block_sizes(p.alpha, N);
    std::vector<int> block_of(N);
    int pos = 0;
    for (int k = 0; k < p.n; ++k)
        for (int c = 0; c < sizes[k]; ++c) block_of[pos++] = k;

    Eigen::MatrixXd out(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) out(i, j) = p.sigma(block_of[i], block_of[j]);
    return out;
}

Eigen::MatrixXd materialize(const GridProfile& p, int N) {
    if (N < 1) throw ValidationError("profile::materialize: N must be positive");
    Eigen::MatrixXd out(N, N);
    for (int i = 0; i < N; ++i) {
        const double x = static_cast<double>(i + 1) / N;
        for (int j = 0; j <= i; ++j) {
            const double y = static_cast<double>(j + 1) / N;
            out(i, j) = out(j, i) = p.at(x, y);
        }
    }
    return out;
}

Eigen::MatrixXd materialize(const Profile& p, int N) {
    return std::visit([N](const auto& q) { return materialize(q, N); }, p);
}

namespace {

// 1D overlap weights of target cell [i/n, (i+1)/n] against the grid cells,
// normalized to sum to 1. Exact integration of the piecewise-constant grid.
std::vector<std::pair<int, double>> overlap_weights(int i, int n, int g) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    std::vector<std::pair<int, double>> w;
    const int k_lo = std::clamp(static_cast<int>(std::floor(lo * g)), 0, g - 1);
    const int k_hi = std::clamp(static_cast<int>(std::ceil(hi * g)) - 1, 0, g - 1);
    for (int k = k_lo; k <= k_hi; ++k) {
        const double a = std::max(lo, static_cast<double>(k) / g);
        const double b = std::min(hi, static_cast<double>(k + 1) / g);
        if (b > a) w.emplace_back(k, (b - a) * n);
    }
    return w;
}

}  // namespace

BlockProfile discretize(const GridProfile& p, int n) {
    if (n < 1) throw ValidationError("profile::discretize: n must be >= 1");
    const int g = p.resolution;
    const double correction = 1.0 / (n + 1);  // keeps the discretized profile positive

    std::vector<std::vector<std::pair<int, double>>> w(n);
    for (int i = 0; i < n; ++i) w[i] = overlap_weights(i, n, g);

    Eigen::MatrixXd sq = p.values.array().square().matrix();
    Eigen::MatrixXd sigma_n(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double avg = 0.0;
            for (const auto& [k, wx] : w[i])
                for (const auto& [l, wy] : w[j]) avg += wx * wy * sq(k, l);
            sigma_n(i, j) = sigma_n(j, i) = std::sqrt(avg + correction);
        }
    }
    return BlockProfile::make(sigma_n, Eigen::VectorXd::Constant(n, 1.0 / n));
}

ConcavityReport check_concavity(const BlockProfile& p, double tol) {
    const int n = p.n;
    const Eigen::MatrixXd S = p.sigma_sq();
    const Eigen::MatrixXd P0 =
        Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    const Eigen::MatrixXd M = P0 * S * P0;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    ConcavityReport rep;
    rep.max_eigenvalue = es.eigenvalues().maxCoeff();
    rep.concave = rep.max_eigenvalue <= tol;
    if (!rep.concave) {
        int idx = 0;
        es.eigenvalues().maxCoeff(&idx);
        Eigen::VectorXd v = es.eigenvectors().col(idx);
        v.array() -= v.mean();  // exact zero-sum witness
        if (v.norm() > 0) v.normalize();
        rep.witness = v;
        rep.witness_quadform = v.dot(S * v);
    }
    return rep;
}

}  // namespace varprof

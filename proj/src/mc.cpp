#include "varprof/mc.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

#include "varprof/numerics.hpp"
#include "varprof/rng.hpp"

namespace varprof {

const char* to_string(LawKind k) {
    switch (k) {
        case LawKind::gaussian: return "gaussian";
        case LawKind::rademacher: return "rademacher";
        case LawKind::uniform: return "uniform_sqrt3";
    }
    return "unknown";
}

LawKind law_from_string(const std::string& s) {
    if (s == "gaussian") return LawKind::gaussian;
    if (s == "rademacher") return LawKind::rademacher;
    if (s == "uniform" || s == "uniform_sqrt3") return LawKind::uniform;
    throw ValidationError("mc: unknown entry law '" + s + "'");
}

namespace {

const double kSqrt3 = std::sqrt(3.0);
const double kSqrt2 = std::sqrt(2.0);

// Unit-variance draw; all three laws are sharp sub-Gaussian.
double draw_unit(SplitMix64& rng, LawKind kind) {
    switch (kind) {
        case LawKind::gaussian: return rng.gaussian();
        case LawKind::rademacher: return rng.rademacher();
        case LawKind::uniform: return rng.uniform_pm(kSqrt3);
    }
    return 0.0;
}

void validate_law(const EntryLaw& law, int expected_beta) {
    if (law.beta != expected_beta)
        throw ValidationError("mc::sample_matrix: entry law has beta " +
                              std::to_string(law.beta) + ", expected " +
                              std::to_string(expected_beta));
}

Eigen::VectorXd flat_block_vector(const BlockProfile& p, int N, const Eigen::VectorXd& psi) {
    if (psi.size() != p.n)
        throw ValidationError("mc::deformed_sample: psi has length " + std::to_string(psi.size()) +
                              ", expected " + std::to_string(p.n));
    double sum = 0.0;
    for (int k = 0; k < p.n; ++k) {
        if (psi(k) < -1e-12)
            throw ValidationError("mc::deformed_sample: psi[" + std::to_string(k) +
                                  "] is negative");
        sum += psi(k);
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError("mc::deformed_sample: psi sums to " + std::to_string(sum));
    const auto sizes = block_sizes(p.alpha, N);
    Eigen::VectorXd e(N);
    int pos = 0;
    for (int k = 0; k < p.n; ++k) {
        const double val = sizes[k] > 0 ? std::sqrt(std::max(psi(k), 0.0) / sizes[k]) : 0.0;
        for (int c = 0; c < sizes[k]; ++c) e(pos++) = val;
    }
    return e;
}

}  // namespace

Eigen::MatrixXd sample_matrix_real(const Eigen::MatrixXd& scaling, const EntryLaw& law,
                                   std::uint64_t seed) {
    validate_law(law, 1);
    const int N = static_cast<int>(scaling.rows());
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));
    SplitMix64 rng(seed);
    Eigen::MatrixXd X(N, N);
    for (int i = 0; i < N; ++i) {
        X(i, i) = scaling(i, i) * kSqrt2 * draw_unit(rng, law.kind) * inv_sqrt_n;  // variance 2
        for (int j = i + 1; j < N; ++j) {
            const double a = draw_unit(rng, law.kind);
            X(i, j) = X(j, i) = scaling(i, j) * a * inv_sqrt_n;
        }
    }
    return X;
}

Eigen::MatrixXcd sample_matrix_hermitian(const Eigen::MatrixXd& scaling, const EntryLaw& law,
                                         std::uint64_t seed) {
    validate_law(law, 2);
    const int N = static_cast<int>(scaling.rows());
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(N));
    const double comp = 1.0 / kSqrt2;  // per-component sd 1/sqrt(2)
    SplitMix64 rng(seed);
    Eigen::MatrixXcd X(N, N);
    for (int i = 0; i < N; ++i) {
        X(i, i) = scaling(i, i) * draw_unit(rng, law.kind) * inv_sqrt_n;  // real, variance 1
        for (int j = i + 1; j < N; ++j) {
            const std::complex<double> a(comp * draw_unit(rng, law.kind),
                                         comp * draw_unit(rng, law.kind));
            X(i, j) = scaling(i, j) * a * inv_sqrt_n;
            X(j, i) = std::conj(X(i, j));
        }
    }
    return X;
}

Eigen::MatrixXd sample_matrix_real(const Profile& p, int N, const EntryLaw& law,
                                   std::uint64_t seed) {
    return sample_matrix_real(materialize(p, N), law, seed);
}

Eigen::MatrixXcd sample_matrix_hermitian(const Profile& p, int N, const EntryLaw& law,
                                         std::uint64_t seed) {
    return sample_matrix_hermitian(materialize(p, N), law, seed);
}

Eigen::MatrixXd deformed_sample_real(const BlockProfile& p, int N, const EntryLaw& law,
                                     double theta, const Eigen::VectorXd& psi,
                                     std::uint64_t seed) {
    const Eigen::MatrixXd scaling = materialize(p, N);
    Eigen::MatrixXd X = sample_matrix_real(scaling, law, seed);
    const Eigen::VectorXd e = flat_block_vector(p, N, psi);
    const double factor = 2.0 * theta / 1.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            X(i, j) += factor * scaling(i, j) * scaling(i, j) * e(i) * e(j);
    return X;
}

Eigen::MatrixXcd deformed_sample_hermitian(const BlockProfile& p, int N, const EntryLaw& law,
                                           double theta, const Eigen::VectorXd& psi,
                                           std::uint64_t seed) {
    const Eigen::MatrixXd scaling = materialize(p, N);
    Eigen::MatrixXcd X = sample_matrix_hermitian(scaling, law, seed);
    const Eigen::VectorXd e = flat_block_vector(p, N, psi);
    const double factor = 2.0 * theta / 2.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            X(i, j) += factor * scaling(i, j) * scaling(i, j) * e(i) * e(j);
    return X;
}

double lambda_max(const Eigen::MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly)
        .eigenvalues()
        .maxCoeff();
}

double lambda_max(const Eigen::MatrixXcd& m) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(m, Eigen::EigenvaluesOnly)
        .eigenvalues()
        .maxCoeff();
}

double spectral_norm(const Eigen::MatrixXd& m) {
    const auto ev =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues();
    return std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()));
}

std::vector<double> eigenvalues(const Eigen::MatrixXd& m) {
    const auto ev =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + ev.size());
}

std::vector<double> eigenvalues(const Eigen::MatrixXcd& m) {
    const auto ev =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(m, Eigen::EigenvaluesOnly).eigenvalues();
    return std::vector<double>(ev.data(), ev.data() + ev.size());
}

double sample_lambda_max(const Eigen::MatrixXd& scaling, const EntryLaw& law,
                         std::uint64_t seed) {
    if (law.beta == 1) return lambda_max(sample_matrix_real(scaling, law, seed));
    return lambda_max(sample_matrix_hermitian(scaling, law, seed));
}

double esd_check(const SpectralDensity& limit, const Eigen::MatrixXd& scaling,
                 const EntryLaw& law, int trials, std::uint64_t seed) {
    if (trials < 1) throw ValidationError("mc::esd_check: trials must be positive");
    const int N = static_cast<int>(scaling.rows());
    std::vector<std::vector<double>> per_trial(trials);
    SplitMix64 master(seed);
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
        const std::uint64_t child = master.child(t).next_u64();
        if (law.beta == 1)
            per_trial[t] = eigenvalues(sample_matrix_real(scaling, law, child));
        else
            per_trial[t] = eigenvalues(sample_matrix_hermitian(scaling, law, child));
    });
    std::vector<double> pooled;
    pooled.reserve(static_cast<std::size_t>(trials) * N);
    for (const auto& v : per_trial) pooled.insert(pooled.end(), v.begin(), v.end());
    std::sort(pooled.begin(), pooled.end());

    const double M = static_cast<double>(pooled.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        const double F = limit.cdf(pooled[i]);
        ks = std::max(ks, std::abs((i + 1) / M - F));
        ks = std::max(ks, std::abs(F - i / M));
    }
    return ks;
}

double esd_check(const BlockProfile& p, int N, const EntryLaw& law, int trials,
                 std::uint64_t seed) {
    const SpectralDensity limit = density(p);
    return esd_check(limit, materialize(p, N), law, trials, seed);
}

namespace {

TailCell make_cell(int N, double threshold, long long count, long long trials) {
    TailCell cell;
    cell.N = N;
    cell.threshold = threshold;
    cell.count = count;
    cell.trials = trials;
    cell.p_hat = static_cast<double>(count) / static_cast<double>(trials);
    const double z = 1.959963984540054;  // 95% Wilson score
    const double n = static_cast<double>(trials);
    const double c = z * z;
    const double denom = 1.0 + c / n;
    const double center = cell.p_hat + c / (2.0 * n);
    const double half =
        z * std::sqrt(cell.p_hat * (1.0 - cell.p_hat) / n + c / (4.0 * n * n));
    cell.wilson_lo = std::max(0.0, (center - half) / denom);
    cell.wilson_hi = std::min(1.0, (center + half) / denom);
    cell.estimate_available = count > 0;
    cell.log_rate = cell.estimate_available
                        ? -std::log(cell.p_hat) / static_cast<double>(N)
                        : std::numeric_limits<double>::quiet_NaN();
    return cell;
}

}  // namespace

SimulationReport tail_estimate(const BlockProfile& p, const std::vector<int>& Ns,
                               const EntryLaw& law, const std::vector<double>& thresholds,
                               long long trials, std::uint64_t seed) {
    if (trials < 1) throw ValidationError("mc::tail_estimate: trials must be positive");
    const EdgeResult e = edges(p);
    for (double thr : thresholds)
        if (!(thr > e.r))
            throw ValidationError("mc::tail_estimate: threshold " + std::to_string(thr) +
                                  " not above the right edge " + std::to_string(e.r));

    SimulationReport report;
    report.seed = seed;
    report.trials = trials;
    report.law = law;
    report.Ns = Ns;

    SplitMix64 master(seed);
    for (std::size_t ni = 0; ni < Ns.size(); ++ni) {
        const int N = Ns[ni];
        if (N < p.n) throw ValidationError("mc::tail_estimate: N smaller than block count");
        const Eigen::MatrixXd scaling = materialize(p, N);
        std::vector<double> samples(static_cast<std::size_t>(trials));
        SplitMix64 stream = master.child(ni);
        parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
            samples[t] = sample_lambda_max(scaling, law, stream.child(t).next_u64());
        });
        std::sort(samples.begin(), samples.end());
        for (double thr : thresholds) {
            const auto it = std::upper_bound(samples.begin(), samples.end(), thr);
            const long long count = static_cast<long long>(samples.end() - it);
            report.tails.push_back(make_cell(N, thr, count, trials));
        }
        report.lambda_max_samples.push_back(std::move(samples));
    }
    return report;
}

}  // namespace varprof

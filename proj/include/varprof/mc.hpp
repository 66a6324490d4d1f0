#pragma once

#include <cstdint>
#include <vector>

#include "varprof/profile.hpp"
#include "varprof/qve.hpp"

namespace varprof {

enum class LawKind { gaussian, rademacher, uniform };
const char* to_string(LawKind k);
LawKind law_from_string(const std::string& s);

/// Sharp sub-Gaussian entry law. Unrenormalized entries a_{i,j}: beta = 1 has
/// off-diagonal variance 1 and diagonal variance 2; beta = 2 has independent
/// real/imaginary parts of variance 1/2 off-diagonal and a real diagonal of
/// variance 1.
struct EntryLaw {
    LawKind kind = LawKind::gaussian;
    int beta = 1;
};

/// X = Sigma_N o W_N with W_N(i,j) = a_{i,j}/sqrt(N); exactly self-adjoint.
Eigen::MatrixXd sample_matrix_real(const Eigen::MatrixXd& scaling, const EntryLaw& law,
                                   std::uint64_t seed);
Eigen::MatrixXcd sample_matrix_hermitian(const Eigen::MatrixXd& scaling, const EntryLaw& law,
                                         std::uint64_t seed);
Eigen::MatrixXd sample_matrix_real(const Profile& p, int N, const EntryLaw& law,
                                   std::uint64_t seed);
Eigen::MatrixXcd sample_matrix_hermitian(const Profile& p, int N, const EntryLaw& law,
                                         std::uint64_t seed);

/// Rank <= n deformation (2 theta / beta) (e e*) o Sigma_N^2 added to a fresh
/// sample; e is flat within blocks with ||e^(k)||^2 = psi_k.
Eigen::MatrixXd deformed_sample_real(const BlockProfile& p, int N, const EntryLaw& law,
                                     double theta, const Eigen::VectorXd& psi,
                                     std::uint64_t seed);
Eigen::MatrixXcd deformed_sample_hermitian(const BlockProfile& p, int N, const EntryLaw& law,
                                           double theta, const Eigen::VectorXd& psi,
                                           std::uint64_t seed);

double lambda_max(const Eigen::MatrixXd& m);
double lambda_max(const Eigen::MatrixXcd& m);
double spectral_norm(const Eigen::MatrixXd& m);
std::vector<double> eigenvalues(const Eigen::MatrixXd& m);
std::vector<double> eigenvalues(const Eigen::MatrixXcd& m);

/// Largest eigenvalue of one profile sample (dispatches on law.beta).
double sample_lambda_max(const Eigen::MatrixXd& scaling, const EntryLaw& law,
                         std::uint64_t seed);

/// Kolmogorov distance between the pooled empirical spectrum and the limiting
/// CDF (trials are seeded independently from the master seed).
double esd_check(const BlockProfile& p, int N, const EntryLaw& law, int trials,
                 std::uint64_t seed);
double esd_check(const SpectralDensity& limit, const Eigen::MatrixXd& scaling,
                 const EntryLaw& law, int trials, std::uint64_t seed);

struct TailCell {
    int N = 0;
    double threshold = 0.0;
    long long count = 0;
    long long trials = 0;
    double p_hat = 0.0;
    double wilson_lo = 0.0, wilson_hi = 0.0;  // 95% score interval
    double log_rate = 0.0;                    // -(1/N) log p_hat
    bool estimate_available = false;          // false when count == 0
};

struct SimulationReport {
    std::uint64_t seed = 0;
    long long trials = 0;
    EntryLaw law;
    std::vector<int> Ns;
    std::vector<std::vector<double>> lambda_max_samples;  // per N, sorted
    std::vector<TailCell> tails;
};

/// Tail probabilities P[lambda_max > threshold] per (N, threshold) with Wilson
/// intervals and the normalized log-rate.
SimulationReport tail_estimate(const BlockProfile& p, const std::vector<int>& Ns,
                               const EntryLaw& law, const std::vector<double>& thresholds,
                               long long trials, std::uint64_t seed);

}  // namespace varprof

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace varprof {

/// One CLI invocation. Grids use the inclusive start:stop:count syntax.
struct RunConfig {
    std::string command;  // density|edges|transforms|annealed|rate|tilt|classify2x2|simulate|verify
    std::string profile_path;
    int beta = 1;
    std::string theta_grid;  // empty -> per-command default
    std::string x_grid;
    std::string e_grid;
    std::uint64_t seed = 12345;
    long long trials = 200;
    std::vector<int> Ns = {200};
    std::string law = "gaussian";
    double a = 1.0, b = 1.0, c = 1.0, alpha = 0.5;  // classify2x2 inputs
    std::string out_dir = ".";
    int threads = 0;  // 0 = hardware concurrency
};

/// Executes the command, writes <command>.csv/.json plus manifest.json into
/// out_dir and prints a one-line summary per artifact. Returns 0; validation
/// problems throw ValidationError (exit 2), solver failures NumericalError
/// (exit 3).
int run(const RunConfig& cfg);

}  // namespace varprof

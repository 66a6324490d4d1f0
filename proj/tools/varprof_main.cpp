#include <CLI11.hpp>
#include <iostream>

#include "varprof/cli.hpp"
#include "varprof/common.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Limiting spectra, free-probability transforms and largest-eigenvalue "
                 "large-deviation rates for Wigner matrices with variance profiles"};
    app.require_subcommand(1);

    varprof::RunConfig cfg;
    const std::vector<std::string> commands = {"density", "edges",  "transforms",
                                               "annealed", "rate",  "tilt",
                                               "classify2x2", "simulate", "verify"};
    for (const auto& name : commands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--profile", cfg.profile_path, "profile document (JSON)");
        sub->add_option("--beta", cfg.beta, "ensemble parameter, 1 or 2");
        sub->add_option("--theta-grid", cfg.theta_grid, "theta grid start:stop:count");
        sub->add_option("--x-grid", cfg.x_grid, "x grid start:stop:count");
        sub->add_option("--e-grid", cfg.e_grid, "energy grid start:stop:count");
        sub->add_option("--seed", cfg.seed, "master seed");
        sub->add_option("--trials", cfg.trials, "Monte Carlo trials");
        sub->add_option("--N", cfg.Ns, "matrix sizes (repeatable)");
        sub->add_option("--law", cfg.law, "entry law: gaussian|rademacher|uniform");
        sub->add_option("--a", cfg.a, "2x2 block entry a");
        sub->add_option("--b", cfg.b, "2x2 block entry b");
        sub->add_option("--c", cfg.c, "2x2 off-diagonal entry c");
        sub->add_option("--alpha", cfg.alpha, "2x2 first block weight");
        sub->add_option("--out", cfg.out_dir, "output directory");
        sub->add_option("--threads", cfg.threads, "worker cap (0 = hardware)");
        sub->callback([&cfg, name]() { cfg.command = name; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        return varprof::run(cfg);
    } catch (const varprof::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const varprof::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

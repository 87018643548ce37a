#pragma once

#include "cbf/cbf2d.hpp"
#include "cbf/rothe.hpp"
#include "cbf/stationary.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cbf {

/// Named forcing / initial-state profile.
struct ProfileSpec {
    std::string profile = "zero";         // zero | taylor-green | shear | random
    double amplitude = 1.0;
    std::string modulation = "constant";  // constant | decay | sine
    double frequency = 1.0;
};

/// Experiment description, parsed from a sectioned key-value text file.
/// Unknown sections or keys are rejected.
struct ExperimentConfig {
    int nx = 16, ny = 16;
    CbfParams params;
    std::string superpotential_name = "quadratic";
    std::vector<double> superpotential_params;
    std::string superpotential_table;  // for name = table
    ProfileSpec forcing;
    ProfileSpec initial;
    double T = 0.5;
    int N = 50;
    std::vector<int> N_list;
    std::uint64_t seed = 42;
    std::string out_dir = "out";
    int trials = 1000;
    int jobs = 1;
    double newton_tol = 1e-10;
    int max_iters = 200;
    double damping = 1.0;
    double eps_first = 1e-1;
    double eps_last = 1e-6;
    std::vector<double> mu_list;          // sweep
    double twin_perturb = 1e-3;
    std::string twin_target = "initial";  // initial | forcing

    void validate() const;
    SolveOptions solve_options() const;
    Superpotential superpotential() const;
    std::string canonical_text() const;
    std::uint64_t hash() const;  // FNV-1a of the canonical text
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Seeded smooth random stream function: a small set of sine modes with
/// coefficients drawn from a generator seeded as given.
State random_smooth_state(const GridSpec& grid, std::uint64_t seed, double amplitude);

/// Realize a profile as an initial state on the built space.
State make_initial_state(const BuiltSpace& built, const ProfileSpec& prof, std::uint64_t seed);

/// Realize a profile as a time-dependent forcing on the built space. The
/// spatial shape is the exact discrete forcing of the corresponding
/// manufactured state (or a seeded random one), modulated in time.
ForcingFn make_forcing(const BuiltSpace& built, const CbfParams& p, const ProfileSpec& prof,
                       std::uint64_t seed);

}  // namespace cbf

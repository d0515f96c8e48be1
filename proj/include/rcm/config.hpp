#pragma once

#include "rcm/environment.hpp"
#include "rcm/solver.hpp"
#include "rcm/testfn.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace rcm {

enum class ExperimentKind {
    homogenization_rate,
    corrector_scaling,
    operator_gaps,
    poincare_suite,
    cutoff_lemma,
    time_change_check,
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);
std::vector<ExperimentKind> all_experiment_kinds();
/// One line per kind for `list-experiments`.
std::string describe(ExperimentKind kind);

enum class SourceKind { zero, modulated, cutoff_duhamel };

std::string to_string(SourceKind kind);
SourceKind source_kind_from_string(const std::string& name);

/// Everything a run needs. Lengths are in continuum units, times in the
/// unscaled clock of the limit equation.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::homogenization_rate;
    std::string name;

    // [model]
    int d = 1;
    double alpha = 1.5;
    double T = 1.0;
    /// Decay exponent of the source class; infinity selects compactly supported sources.
    double beta = std::numeric_limits<double>::infinity();
    /// Reject d <= alpha; switching it off allows the one-dimensional runs with alpha >= 1.
    bool enforce_theorem_hypotheses = true;

    // [environment]; the seed comes from [run] seeds
    EnvironmentKind environment = EnvironmentKind::piecewise_linear;
    MarginalLaw marginal = MarginalLaw::uniform02();
    MeanProfile profile = MeanProfile::constant(1.0);

    // [lattice]
    double half_width = 6.0;
    std::vector<int> k_list{8, 16, 32, 64};
    int reference_scale = 128;

    // [solver]
    SolveParams solver;

    // [initial]: compact bump g
    double g_radius = 1.0;
    double g_amplitude = 1.0;

    // [source]
    SourceKind source = SourceKind::cutoff_duhamel;
    double source_shift = 2.0;
    double source_a0 = 1.0;
    double source_a1 = 0.5;

    // [profile]: test function f of the operator-gap and cutoff experiments
    SmoothProfile test_profile{SmoothProfile::Kind::gaussian, 1, 1.0, {}, 1.0, 1.0, 0.0, 0.0};

    // [correctors]
    std::vector<int> m_list{3, 4, 5, 6, 7};
    double corrector_T = 1.0;

    // [diagnostics]
    std::vector<double> radii{4, 8, 16, 32};
    std::vector<int> r_list{8, 16, 32, 64};
    std::vector<int> multiscale_levels{4, 5, 6, 7};
    int multiscale_depth = 2;
    std::size_t samples = 100;
    std::size_t draws = 20;
    double delta = 0.5;
    bool random_gaps = false;
    int grid_points_per_unit = 16;

    // [run]
    std::vector<std::uint64_t> seeds;
    std::uint64_t seed_offset = 0;
    int threads = 1;
    std::string output = "results";
};

/// Reads a flat INI file with dotted sections; unknown keys and invalid values throw ConfigError.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

/// Checks every invariant; throws ConfigError naming the field.
void validate(const ExperimentConfig& config);

/// INI text that parses back to the same configuration.
std::string echo_config(const ExperimentConfig& config);

/// Environment for one seed of the sweep (seed offset applied).
EnvironmentSpec environment_spec(const ExperimentConfig& config, std::uint64_t seed);

} // namespace rcm

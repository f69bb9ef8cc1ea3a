// Sweeps, figure-data presets, phase portraits, the invariant suite and CSV /
// JSON serialization.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ptlab/dynamics.hpp"
#include "ptlab/formalisms.hpp"

namespace ptlab {

struct SweepSpec {
    double r = 1.0;
    double d = 0.95;
    std::vector<double> theta_values;
    double t_max = 20.0;
    std::size_t samples = 400;
    // ket0 | maximally_mixed | biorthogonal_mixed | custom
    std::string initial_state = "ket0";
    std::vector<cplx> custom_amplitudes;
    std::vector<Formalism> formalisms = {Formalism::HermitianAdjoint};
    std::vector<double> alphas = {0.5, 2.0, 3.0};
    // power of the CPT norm dividing pure biorthogonal projectors
    int norm_power = 1;
};

std::string_view formalism_name(Formalism f);
Formalism formalism_from_name(std::string_view name);

SweepSpec sweep_from_json_text(const std::string& text);
SweepSpec sweep_from_json_file(const std::filesystem::path& file);
std::string sweep_to_json(const SweepSpec& spec);

struct ThetaSummary {
    double theta = 0.0;
    Regime regime = Regime::Unbroken;
    std::optional<double> period;      // detected trace period (unbroken)
    std::optional<double> growth_rate; // fitted log-trace slope (broken)
    std::string error;                 // nonempty when this angle failed
};

struct SweepSummary {
    std::vector<std::filesystem::path> csv_files;
    std::filesystem::path metadata_file;
    std::map<std::string, std::vector<ThetaSummary>> per_formalism;
};

// Evolves every (formalism, theta) job, samples the observable columns and
// writes one CSV per formalism plus a metadata JSON. Jobs run on a bounded
// worker pool; output bytes do not depend on the thread count. Angles that
// fail (for instance the exceptional point in the biorthogonal formalism)
// produce nan rows and an error note instead of aborting the sweep.
SweepSummary run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir,
                       const std::string& stem, const Tolerances& tol = {},
                       unsigned threads = 0);

struct PortraitSummary {
    std::filesystem::path field_csv;
    std::filesystem::path points_json;
    std::optional<std::filesystem::path> svg;
    FixedPointReport fixed_points;
};

// Samples the polarization velocity field on both charts, lists the fixed
// points with their classification and common reference states, and can
// render a minimal SVG of the field.
PortraitSummary emit_portrait(const ModelParams& p, std::size_t grid,
                              const std::filesystem::path& out_dir, bool with_svg = false,
                              const Tolerances& tol = {});

// Runs the operator / dynamics invariant suite over a parameter grid, writing
// one line per check; returns the number of unexpected failures.
int verify_invariants(std::ostream& log, const Tolerances& tol = {});

// Data presets behind the published curves. figure_spec covers the sweep
// figures 3-6; run_figure additionally accepts 1 (the phase portrait).
SweepSpec figure_spec(int figure);
std::vector<std::filesystem::path> run_figure(int figure, const std::filesystem::path& out_dir,
                                              const Tolerances& tol = {}, unsigned threads = 0);

std::string format_sig17(double v);

} // namespace ptlab

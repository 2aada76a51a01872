#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bellkl/bell.hpp"
#include "bellkl/quantum.hpp"
#include "bellkl/strength.hpp"

namespace bellkl {

enum class OptimizationMode { exact, conjectured };

const char *to_string(OptimizationMode mode);

struct TraceEntry {
    std::size_t step;
    double divergence_bits;
    double parameter;
};

struct OptimizationReport {
    int dim = 0;
    OptimizationMode mode = OptimizationMode::exact;
    PureState best_pure;
    SchmidtState best_state;  // Schmidt coefficients of best_pure, descending
    double divergence_bits = 0.0;
    double entanglement_bits = 0.0;
    std::optional<double> parameter;
    // exact: EM certificate gap at the optimum; conjectured: |sum q/r - 1|
    // plus, when enumeration is feasible, |D - min_kl_local(q)|
    double consistency_residual = 0.0;
    double certificate_gap = 0.0;
    bool converged = true;
    std::vector<TraceEntry> trace;
};

/// Statistical strength of a Schmidt state under the two-setting CGLMP
/// measurements and uniform settings.
StrengthResult cglmp_strength(const SchmidtState &state, const StrengthOptions &options = {});

struct ExactOptions {
    double inner_tol = 1e-10;
    double outer_tol = 1e-10;
    double coordinate_tol = 1e-7;
    std::size_t max_sweeps = 60;
    int max_dim = 6;
};

/// Maximizes min_kl_local over Schmidt states in the computational basis.
/// Squared coefficients are softmax(0, x_1, ..., x_{d-1}); x is searched by
/// coordinate descent with golden-section line searches from x = 0.
OptimizationReport optimize_state_exact(int d, const MeasurementSettings &alice, const MeasurementSettings &bob,
                                        const SettingsDistribution &settings, const ExactOptions &options = {});

struct SeesawOptions {
    double inner_tol = 1e-10;
    double tol = 1e-9;
    std::size_t max_iterations = 500;
    EigenOptions eigen;
};

/// Alternates the best local fit for the current state with the top
/// eigenvector of the resulting log-ratio operator. Only improving steps are
/// accepted.
OptimizationReport seesaw(const PureState &initial, const MeasurementSettings &alice, const MeasurementSettings &bob,
                          const SettingsDistribution &settings, const SeesawOptions &options = {});

struct ConjecturedOptions {
    int grid_points = 64;
    int refine_rounds = 3;
    int golden_steps_per_round = 20;
    // cross-check against min_kl_local when d <= this
    int verify_max_dim = 6;
    double inner_tol = 1e-10;
    EigenOptions eigen;
};

/// Value of the top eigenpair of the log2-tilted CGLMP operator at a given b,
/// with the behavior it induces.
struct TiltedEvaluation {
    double b;
    double value_bits;
    TopEigenpair eigen;
};

TiltedEvaluation evaluate_tilted(int d, double b, const EigenOptions &options = {});

/// Scans b over (0, tilted_b_limit(d)) on a coarse grid, refines by
/// golden-section search and reports the best eigenvalue. This relies on
/// the optimal Bell inequality keeping the CGLMP form at every d, which is an
/// assumption rather than a proven fact for d > 4.
OptimizationReport conjectured_optimum(int d, const ConjecturedOptions &options = {});

struct SettingsSample {
    std::vector<double> probs;
    double divergence_bits;
};

struct UniformSettingsReport {
    double uniform_bits = 0.0;
    double best_perturbed_bits = 0.0;
    std::vector<double> worst_direction;  // perturbation that came closest to beating uniform
    bool uniform_is_local_max = false;
    std::vector<SettingsSample> samples;
};

/// Evaluates the strength of a fixed state and measurements on perturbations
/// p_M = 1/m^2 + eps (e_k - e_l) for every ordered cell pair and eps.
UniformSettingsReport verify_uniform_settings(const PureState &state, const MeasurementSettings &alice,
                                              const MeasurementSettings &bob, double tol,
                                              const std::vector<double> &epsilons = {1e-3, 1e-2, 5e-2},
                                              const StrengthOptions &inner = {});

struct AdditivityOptions {
    double inner_tol = 1e-10;
    std::uint64_t verify_vertex_cap = default_vertex_cap;
    bool compare_conjectured = true;
};

struct AdditivityReport {
    int d_base = 0;
    int copies = 0;
    double single_bits = 0.0;
    double product_bits = 0.0;  // copies * single_bits
    // KL divergence from the product behavior to the product of single-copy
    // best local models, evaluated explicitly
    std::optional<double> product_form_bits;
    // min_kl_local over the full local polytope of the regrouped test
    std::optional<double> verified_product_bits;
    std::optional<double> verified_certificate_gap;
    int compare_dim = 0;
    std::optional<double> compare_bits;
    std::optional<double> compare_entanglement_bits;
    std::optional<double> compare_residual;
    bool product_wins = false;
    SchmidtState single_state;
};

AdditivityReport additivity_comparison(int d_base, int copies, const AdditivityOptions &options = {});

enum class SweepMode { automatic, exact, conjectured };

struct SweepOptions {
    int exact_max_dim = 6;
    double inner_tol = 1e-10;
    bool parallel = false;
};

struct SweepRow {
    int d = 0;
    double divergence_bits = 0.0;
    double entanglement_bits = 0.0;
    OptimizationMode mode = OptimizationMode::exact;
    double certificate_gap = 0.0;
    bool ok = false;
    std::string error;
    std::vector<double> schmidt;  // descending
};

std::vector<SweepRow> figure1_sweep(int d_min, int d_max, SweepMode mode, const SweepOptions &options = {});

}  // namespace bellkl

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "slabkin/collision_operator.hpp"
#include "slabkin/moments.hpp"
#include "slabkin/slab_solver.hpp"

namespace slabkin
{

inline constexpr char const* version_string = "0.1.0";

/// Process exit codes of the command line tool.
enum ExitCode : int
{
    exit_ok = 0,
    exit_failure = 1,
    exit_config_error = 2,
};

/*!
 * Everything one run needs, read from a `key = value` text file.
 * Omitted keys keep the defaults below.
 */
struct RunConfig
{
    // cross section
    std::string cross_section{"hard_sphere"};
    std::string beta_table;
    double gamma{1.0};
    double cutoff_const{1.0};

    // velocity grid
    VelocityGridParams grid{};
    double assembly_tol{1e-8};

    // slab
    double l{1.0};
    int n_x_uniform{64};
    int dyadic_k_min{6};
    int dyadic_k_max{16};
    int dyadic_per_octave{1};
    int min_wall_depth{10};
    double tol{1e-9};
    int max_iter{500};
    double relaxation{1.0};

    // boundary data
    std::string boundary{"temperature_jump"};
    double boundary_amplitude{1.0};
    std::string boundary_in_table;
    std::string boundary_out_table;

    // analysis
    std::vector<MomentIndex> moments{MomentIndex{0, 0, 0},
                                     MomentIndex{2, 0, 0},
                                     MomentIndex{0, 2, 0}};
    int fit_k_min{8};
    int fit_k_max{14};
    double lp_exponent{2.0};
    double holder_beta{0.3};
    std::uint64_t seed{12345};

    std::string output_dir{"slabkin_out"};

    /// Keys and values exactly as written in the file, in file order.
    std::vector<std::pair<std::string, std::string>> echo;

    CrossSectionModel make_model() const;
    SlabConfig make_slab() const;
    BoundaryData make_boundary() const;
};

/// Parse `key = value` lines ('#' comments). Throws ConfigError naming the
/// line for syntax errors and listing every violation for invalid values.
RunConfig parse_config(std::string const& text);
RunConfig load_config(std::filesystem::path const& path);

/// "0,0,0; 2,0,0" or "000 200".
std::vector<MomentIndex> parse_moment_list(std::string const& text);

struct MomentProfile
{
    MomentIndex alpha{0, 0, 0};
    std::vector<double> sigma;
    std::vector<double> dsigma;
};

struct GradientBound
{
    MomentIndex alpha{0, 0, 0};
    /// max over dyadic x of |d sigma| / (|ln x| + 1) near x = 0.
    double near_zero{0};
    /// max over dyadic x of |d sigma| / (|ln(l - x)| + 1) near x = l.
    double near_l{0};
};

struct RunResults
{
    RunConfig config;
    std::string status{"ok"};
    std::string error_code;
    std::string error_message;

    // operator
    double nu0_fit{0}, nu1_fit{0};
    double max_entry_error{0};
    std::vector<InvariantResidual> invariants;
    SmoothingReport smoothing;
    std::uint64_t grid_hash{0};
    bool operator_from_cache{false};

    // solver
    bool converged{false};
    std::vector<double> residual_history;
    bool monotonicity_flag{false};
    double fixed_point_residual{0};
    double triple_norm{0};
    double sup_norm{0};
    double boundedness_constant{0};
    BoundaryData::Regularity regularity;

    // analysis
    std::vector<double> x_rows;
    std::vector<MomentProfile> profiles;
    std::vector<SingularityReport> singularities;
    std::vector<GradientBound> gradient_bounds;
    HolderReport holder;
    double lemma_theta_ratio{0};
};

/// Build (or load from $SLABKIN_CACHE_DIR) the operator, solve, analyse.
/// Never throws for solver non-convergence; status/error_code say what
/// happened.
RunResults run_experiment(RunConfig const& cfg);

/// Exit code matching a finished run.
int exit_code_for(RunResults const& results);

/// Writes moments.csv, report.json and e1_validation.csv into dir.
void export_results(RunResults const& results,
                    std::filesystem::path const& dir);

/// moments.csv content alone (used by export_results and tests).
std::string moments_csv(RunResults const& results);
/// report.json content. include_timestamp = false gives the
/// deterministic part only.
std::string report_json(RunResults const& results,
                        bool include_timestamp = true);

struct E1ValidationRow
{
    double x{0};
    double value{0};
    std::string branch;
    double est_error{0};
    double lower{0};
    double upper{0};
};
/// n log-spaced x in [x_min, x_max] with E1 and its bounds.
std::vector<E1ValidationRow> e1_table(int n = 1000,
                                      double x_min = 1e-6,
                                      double x_max = 50.0);
std::string e1_validation_csv(std::vector<E1ValidationRow> const& rows);

}  // namespace slabkin

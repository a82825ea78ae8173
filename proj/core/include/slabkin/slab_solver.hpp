#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "slabkin/collision_operator.hpp"
#include "slabkin/velocity_grid.hpp"

namespace slabkin
{

/// Slab [0, l] and the source-iteration controls.
struct SlabConfig
{
    double l{1.0};
    std::vector<double> x_nodes;
    double tol{1e-9};
    int max_iter{500};
    double relaxation{1.0};
    /// Required dyadic depth k near each wall: some interior node must lie
    /// within 2^{-k} of x = 0 and of x = l. 0 disables the check (toy grids).
    int min_wall_depth{10};

    /// Throws DomainError listing what is wrong.
    void validate() const;
};

/*!
 * Union of a uniform grid with n_uniform points on [0, l] and the dyadic
 * points 2^{-k}, k = k_min..k_max, mirrored to l - 2^{-k}. per_octave > 1
 * adds geometrically spaced points between consecutive dyadic points.
 */
std::vector<double> make_x_nodes(double l,
                                 int n_uniform,
                                 int k_min = 6,
                                 int k_max = 16,
                                 int per_octave = 1);

/*!
 * Incoming data: f_in at x = 0 for zeta_1 > 0 and f_out at x = l for
 * zeta_1 < 0, both functions of (zeta_1, zeta_r), i.e. azimuthally
 * symmetric.
 */
class BoundaryData
{
  public:
    using Profile = std::function<double(double zeta1, double zeta_r)>;

    BoundaryData(Profile f_in, Profile f_out, std::string name);

    /// f_in = f_out = w^{1/2}: the global Maxwellian perturbation.
    static BoundaryData equilibrium();
    /// f_in = f_out = 0.
    static BoundaryData zero();
    /*!
     * Wall at x = 0 emits a Maxwellian with perturbed temperature,
     * f_in = amplitude (|zeta|^2 - 3/2) w^{1/2}; f_out = 0.
     */
    static BoundaryData temperature_jump(double amplitude = 1.0);
    /*!
     * f_in = amplitude (1 + zeta_1 - |zeta|^2 / 2) w^{1/2} at x = 0 and
     * f_out = -amplitude w^{1/2} / 2 at x = l: a density, drift and
     * temperature mismatch all at once.
     */
    static BoundaryData mixed(double amplitude = 1.0);
    /// Rectilinear table "zeta1 zeta_r value" for each wall, bilinearly
    /// interpolated (clamped outside the table).
    static BoundaryData from_table_files(std::string const& in_path,
                                         std::string const& out_path);

    std::string const& name() const noexcept { return name_; }
    double f_in(double zeta1, double zeta_r) const { return f_in_(zeta1, zeta_r); }
    double f_out(double zeta1, double zeta_r) const { return f_out_(zeta1, zeta_r); }

    /// Incoming values at every node: f_in where zeta_1 > 0, f_out where
    /// zeta_1 < 0.
    std::vector<double> sample_incoming(VelocityGrid const& grid) const;

    struct Regularity
    {
        double sup_in{0};
        double sup_out{0};
        /// ||grad f_in||_{L^p(zeta_1 > 0)} from finite differences.
        double grad_in_lp{0};
        double p{2};
    };
    /// Sampled regularity metadata; throws DomainError if a norm is not
    /// finite.
    Regularity regularity(VelocityGrid const& grid, double p = 2.0) const;

  private:
    Profile f_in_, f_out_;
    std::string name_;
};

/*!
 * f(x, zeta) on x_nodes x velocity nodes, one column per x node.
 *
 * kf holds K applied to every column when it is known (after solve it
 * always is).
 */
struct DistributionField
{
    std::shared_ptr<VelocityGrid const> grid;
    std::vector<double> x_nodes;
    Eigen::MatrixXd values;
    Eigen::MatrixXd kf;
    bool converged{false};
    std::vector<double> residual_history;
    /// Set when the residual rose after the third iteration.
    bool monotonicity_flag{false};

    std::size_t n_x() const noexcept { return x_nodes.size(); }
    double l() const noexcept { return x_nodes.back(); }
    /// Column of the velocity grid function at x node ix.
    std::span<double const> at(std::size_t ix) const
    {
        return {values.col(static_cast<Eigen::Index>(ix)).data(),
                static_cast<std::size_t>(values.rows())};
    }
    /// Index of an x node equal to x (to 1e-14 relative), if any.
    std::optional<std::size_t> node_index(double x) const;
};

/// Weights (a, b) with int_0^h exp(-lambda (h - t)) g(t) dt = a g(0) +
/// b g(h) exactly for linear g; stable for every lambda h >= 0.
std::pair<double, double> exp_linear_weights(double lambda, double h);

/// Field filled with the free-streaming part only (K term dropped).
DistributionField free_streaming(BoundaryData const& bc,
                                 LinearizedOperator const& op,
                                 SlabConfig const& cfg);

/*!
 * One application of the mild-form map T. The s-integral uses K(f)
 * linear between x nodes and integrates the exponential weight in closed
 * form cell by cell. Reuses f.kf when present.
 */
DistributionField mild_step(DistributionField const& f,
                            BoundaryData const& bc,
                            LinearizedOperator const& op,
                            SlabConfig const& cfg);

/// Source iteration f <- (1 - r) f + r T(f) from the free-streaming field
/// (or `initial`). Never throws on non-convergence: check `converged`.
DistributionField solve(BoundaryData const& bc,
                        LinearizedOperator const& op,
                        SlabConfig const& cfg,
                        DistributionField const* initial = nullptr);

/// Direct solve of f = T f through the dense matrix of T, built column by
/// column from mild_step. Only sensible for tiny grids.
DistributionField solve_dense(BoundaryData const& bc,
                              LinearizedOperator const& op,
                              SlabConfig const& cfg);

/// sup over x nodes of the star norm of f - g.
double sup_star_distance(DistributionField const& f,
                         DistributionField const& g,
                         LinearizedOperator const& op);
/// |||f||| = sup_x ||f(x)||_*.
double triple_norm(DistributionField const& f, LinearizedOperator const& op);
/// sup over x and zeta of |f|.
double sup_norm(DistributionField const& f);

/// The field's continuous extension at arbitrary x in [0, l]: T(f)(x)
/// with the stored K(f) interpolated linearly.
std::vector<double> evaluate_at(DistributionField const& f,
                                BoundaryData const& bc,
                                LinearizedOperator const& op,
                                double x);

/// K(f)(x, .) interpolated linearly between x nodes.
std::vector<double> kf_at(DistributionField const& f, double x);

struct HolderReport
{
    std::vector<double> separations;
    std::vector<double> differences;
    /// Log-log least-squares slope and exp(intercept).
    double slope{0};
    double constant{0};
    /// All differences vanished (slope undefined).
    bool exact_constant{false};
    double beta{0};
    bool meets_beta{false};
};

/// ||K(f)(x) - K(f)(s)||_inf over pairs of x nodes, with a log-log fit
/// against |x - s|.
HolderReport holder_probe(DistributionField const& f,
                          std::vector<std::pair<double, double>> const& pairs,
                          double beta);

/// int |zeta_1|^{-(2 - 2 theta)} nu^{-2 theta} |K f|^2 dzeta / ||f||_*^2 at
/// x node ix.
double lemma_theta_ratio(DistributionField const& f,
                         LinearizedOperator const& op,
                         std::size_t ix,
                         double theta);

/// Checkpoint: "SLKCK001", u64 grid hash, u64 n_x, u64 n_v, x nodes, then
/// values column by column, 64-bit floats.
void save_checkpoint(DistributionField const& f,
                     std::filesystem::path const& path);
/// nullopt if the file is missing or belongs to another grid.
std::optional<DistributionField>
load_checkpoint(std::filesystem::path const& path,
                std::shared_ptr<VelocityGrid const> grid);

}  // namespace slabkin

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slabkin/cross_section.hpp"
#include "slabkin/velocity_grid.hpp"

namespace slabkin
{

/*!
 * Collision frequency nu(|zeta|) = int int int B w(zeta_*) dtheta deps
 * dzeta_*.
 *
 * The angular factor integrates to 2 pi int beta; the polar angle of
 * zeta_* about zeta is done in closed form, leaving an adaptive
 * Gauss-Kronrod integral over |zeta_*| split at |zeta_*| = speed.
 * Throws QuadratureError if the radial integral does not converge.
 */
double compute_nu(CrossSectionModel const& model, double speed);

/*!
 * Pointwise kernel k(zeta, eta) of K in L = -nu + K, for a fixed model.
 *
 * The loss part is w^{1/2}(zeta) w^{1/2}(eta) |zeta - eta|^gamma 2 pi
 * int beta. The gain part comes from the Carleman rewrite of the two gain
 * terms: for each one the post-collision velocity is fixed and the
 * remaining integration runs over the plane through it perpendicular to
 * eta - zeta. Those plane integrals depend only on the distance d =
 * |zeta - eta| and on the offset M of the Gaussian centre inside the plane;
 * d * (J_A + J_B) is tabulated once per model on a (d, M) grid by adaptive
 * quadrature and read back with bicubic interpolation. Beyond d = 12 the
 * Gaussian factor is below 1e-15 and the table is clamped.
 *
 * By rotation invariance k depends only on |zeta|, |eta| and d.
 */
class CollisionKernel
{
  public:
    CollisionKernel(CrossSectionModel const& model, double zeta_max);

    /// k as a function of the two speeds and their distance (d > 0).
    double operator()(double speed_a, double speed_b, double distance) const;

    /// Full 3-D evaluation.
    double operator()(std::array<double, 3> const& zeta,
                      std::array<double, 3> const& eta) const;

    /// Gain-term plane integral d * (J_A + J_B) at (d, M), by direct
    /// quadrature (not the table).
    double plane_integral_direct(double distance, double offset) const;
    /// Same quantity read from the table.
    double plane_integral(double distance, double offset) const;

    /// Largest |table - direct| seen on the off-grid probe set, relative to
    /// the table scale.
    double table_error() const noexcept { return table_error_; }

    CrossSectionModel const& model() const noexcept { return model_; }

  private:
    CrossSectionModel model_;
    double loss_factor_;
    double d_max_, m_max_, dd_, dm_;
    int nd_, nm_;
    // Shared between kernels of the same model (tables are memoised).
    std::shared_ptr<std::vector<double> const> table_;
    double table_error_{0};
};

struct AssemblyOptions
{
    /// Tolerance on each azimuthally averaged kernel entry, relative with
    /// the same value as absolute floor.
    double assembly_tol{1e-8};
    /// Azimuthal Fourier mode: 0 for axisymmetric functions, 1 for
    /// functions proportional to cos(phi) or sin(phi).
    int mode{0};
    /// Remove the residual of the discrete collision invariants with a
    /// symmetric low-rank correction.
    bool conserve{true};
};

/// Invariant residual ||L psi||_* / ||psi||_*, before and after the
/// conservation correction.
struct InvariantResidual
{
    std::string name;
    double raw{0};
    double corrected{0};
};

/*!
 * Discrete L = -nu + K on a VelocityGrid.
 *
 * (L f)_i = -nu_i f_i + sum_j K_ij W_j f_j with K symmetric and W the grid
 * weights, so L is self-adjoint in the W-weighted inner product.
 * Immutable once assembled.
 */
class LinearizedOperator
{
  public:
    LinearizedOperator(std::shared_ptr<VelocityGrid const> grid,
                       CrossSectionModel model,
                       std::vector<double> nu,
                       Eigen::MatrixXd kernel,
                       int mode);

    VelocityGrid const& grid() const noexcept { return *grid_; }
    std::shared_ptr<VelocityGrid const> const& grid_ptr() const noexcept
    {
        return grid_;
    }
    CrossSectionModel const& model() const noexcept { return model_; }
    std::span<double const> nu() const noexcept { return nu_; }
    Eigen::MatrixXd const& kernel() const noexcept { return kernel_; }
    int mode() const noexcept { return mode_; }
    std::size_t size() const noexcept { return nu_.size(); }

    double nu0_fit() const noexcept { return nu0_fit_; }
    double nu1_fit() const noexcept { return nu1_fit_; }

    /// Largest azimuthal-quadrature error estimate over all entries.
    double max_entry_error() const noexcept { return max_entry_error_; }
    std::vector<InvariantResidual> const& invariant_residuals() const noexcept
    {
        return invariants_;
    }

    /// K applied to every column of F (one velocity grid function per
    /// column).
    Eigen::MatrixXd apply_K_columns(Eigen::MatrixXd const& columns) const;

    /// Key for the on-disk cache: grid hash combined with the model.
    std::uint64_t cache_key() const noexcept;

  private:
    friend LinearizedOperator assemble_operator(CrossSectionModel const&,
                                                std::shared_ptr<VelocityGrid const>,
                                                AssemblyOptions const&);
    friend std::optional<LinearizedOperator>
    load_operator(std::filesystem::path const&,
                  CrossSectionModel const&,
                  std::shared_ptr<VelocityGrid const>,
                  int);

    std::shared_ptr<VelocityGrid const> grid_;
    CrossSectionModel model_;
    std::vector<double> nu_;
    Eigen::MatrixXd kernel_;
    // kernel_ with the grid weights folded into its columns.
    Eigen::MatrixXd kernel_w_;
    int mode_{0};
    double nu0_fit_{0}, nu1_fit_{0};
    double max_entry_error_{0};
    std::vector<InvariantResidual> invariants_;
};

/*!
 * Assemble L on the grid.
 *
 * Off-diagonal kernel entries are azimuthal averages of k (times cos(m phi)
 * for mode m) computed adaptively; the 1/d singularity at phi = 0 is
 * removed with an asinh substitution. Diagonal entries follow from
 * singularity subtraction against the exact identity K(w^{1/2}) =
 * nu w^{1/2} (zeta_r w^{1/2} for mode 1). Throws QuadratureError if any
 * entry misses assembly_tol, DomainError if the model fails validate().
 */
LinearizedOperator assemble_operator(CrossSectionModel const& model,
                                     std::shared_ptr<VelocityGrid const> grid,
                                     AssemblyOptions const& options = {});

/// Collision invariants restricted to the grid for the operator's mode:
/// {w^{1/2}, zeta_1 w^{1/2}, |zeta|^2 w^{1/2}} for mode 0 and
/// {zeta_r w^{1/2}} for mode 1 (the zeta_2 and zeta_3 invariants).
std::vector<std::pair<std::string, std::vector<double>>>
collision_invariants(VelocityGrid const& grid, int mode);

std::vector<double> apply_L(LinearizedOperator const& op,
                            std::span<double const> f);
std::vector<double> apply_K(LinearizedOperator const& op,
                            std::span<double const> f);

/// sum_i W_i f_i g_i.
double grid_inner(VelocityGrid const& grid,
                  std::span<double const> f,
                  std::span<double const> g);

/// (sum_i W_i nu_i f_i^2)^{1/2}.
double norm_star(std::span<double const> f, LinearizedOperator const& op);

/// max_i (1 + |zeta_i|)^a |f_i|.
double norm_Linf_weighted(std::span<double const> f,
                          double a,
                          VelocityGrid const& grid);

/// (sum_i W_i f_i^2)^{1/2}.
double norm_L2(std::span<double const> f, VelocityGrid const& grid);

struct SmoothingReport
{
    /// max ||K f||_{L^inf_{3/2-gamma}} / ||f||_{L^2}.
    double c1{0};
    /// (a, max ||K f||_{L^inf_{2+a-gamma}} / ||f||_{L^inf_a}).
    std::vector<std::pair<double, double>> c2;
    int samples{0};
};

/// Empirical smoothing constants over a seeded random family of
/// Gaussian-envelope test functions; f = 0 is skipped.
SmoothingReport smoothing_report(LinearizedOperator const& op,
                                 std::uint64_t seed = 12345,
                                 int n_samples = 64,
                                 std::vector<double> const& a_values
                                 = {0.0, 2.0, 4.0});

/// Cache key for (model, grid, mode).
std::uint64_t operator_cache_key(CrossSectionModel const& model,
                                 VelocityGrid const& grid,
                                 int mode);

/*!
 * Binary cache: "SLKOP001", u64 key, u64 n, u64 mode, then nu[n] and the
 * row-major n x n kernel as 64-bit floats, followed by the entry error
 * estimate, u64 count and the raw invariant residuals.
 */
void save_operator(LinearizedOperator const& op,
                   std::filesystem::path const& path);

/// Returns nullopt if the file is missing or its key does not match.
std::optional<LinearizedOperator>
load_operator(std::filesystem::path const& path,
              CrossSectionModel const& model,
              std::shared_ptr<VelocityGrid const> grid,
              int mode = 0);

}  // namespace slabkin

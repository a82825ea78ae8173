#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace slabkin
{

struct VelocityGridParams
{
    /// Total number of zeta_1 nodes; must be even (half on each side of 0).
    int n_zeta1{64};
    int n_zeta_r{16};
    double zeta_max{6.0};
    /// Smallest |zeta_1| node.
    double zeta1_min{1e-7};
    /// Scale s of the map zeta_1 = s ln(1 + e^t): geometric below s,
    /// uniform above.
    double zeta1_scale{1.0};
    /// Bisection depth of the adaptive azimuthal rule used in assembly.
    int azimuth_order{15};
    /// Allowed |Maxwellian mass - 1| of the rule.
    double eps_grid{1e-8};
};

/*!
 * Axisymmetric velocity grid over (zeta_1, zeta_r).
 *
 * zeta_1 uses the trapezoidal rule in t under zeta_1 = s ln(1 + e^t),
 * mirrored about zero, so nodes cluster geometrically toward zeta_1 = 0
 * without touching it. zeta_r uses Gauss-Legendre on [0, zeta_max]. The
 * weights are 3-D volume weights and include the 2 pi zeta_r Jacobian.
 *
 * Node i = i1 * n_zeta_r + ir, with zeta_1 ascending in i1.
 */
class VelocityGrid
{
  public:
    /// Throws DomainError for bad parameters or when the Maxwellian mass
    /// check fails.
    explicit VelocityGrid(VelocityGridParams const& params);

    VelocityGridParams const& params() const noexcept { return params_; }

    std::size_t size() const noexcept { return weights_.size(); }
    int n_zeta1() const noexcept { return static_cast<int>(zeta1_.size()); }
    int n_zeta_r() const noexcept { return static_cast<int>(zeta_r_.size()); }
    double zeta_max() const noexcept { return params_.zeta_max; }
    int azimuth_order() const noexcept { return params_.azimuth_order; }

    std::span<double const> zeta1_nodes() const noexcept { return zeta1_; }
    std::span<double const> zeta1_weights() const noexcept { return w1_; }
    std::span<double const> zeta_r_nodes() const noexcept { return zeta_r_; }
    /// Includes the 2 pi zeta_r factor.
    std::span<double const> zeta_r_weights() const noexcept { return wr_; }
    std::span<double const> weights() const noexcept { return weights_; }

    std::size_t index(int i1, int ir) const noexcept
    {
        return static_cast<std::size_t>(i1) * zeta_r_.size()
               + static_cast<std::size_t>(ir);
    }
    int i1_of(std::size_t i) const noexcept
    {
        return static_cast<int>(i / zeta_r_.size());
    }
    int ir_of(std::size_t i) const noexcept
    {
        return static_cast<int>(i % zeta_r_.size());
    }

    double zeta1(std::size_t i) const noexcept { return zeta1_[i1_of(i)]; }
    double zeta_r(std::size_t i) const noexcept { return zeta_r_[ir_of(i)]; }
    double weight(std::size_t i) const noexcept { return weights_[i]; }
    double speed(std::size_t i) const noexcept;

    /// i1 of the p-th positive zeta_1 level (p = 0 is closest to zero).
    int positive_level(int p) const noexcept { return n_zeta1() / 2 + p; }
    /// i1 of the p-th negative zeta_1 level (p = 0 is closest to zero).
    int negative_level(int p) const noexcept { return n_zeta1() / 2 - 1 - p; }

    /// Standard Maxwellian pi^{-3/2} exp(-|zeta|^2) at node i.
    double maxwellian(std::size_t i) const noexcept;
    /// w^{1/2} at node i.
    double sqrt_maxwellian(std::size_t i) const noexcept;

    /// Quadrature of the Maxwellian over the grid (1 up to eps_grid).
    double maxwellian_mass() const noexcept;

    /// FNV-1a over the node coordinates and weights.
    std::uint64_t hash() const noexcept;

  private:
    VelocityGridParams params_;
    std::vector<double> zeta1_, w1_, zeta_r_, wr_, weights_;
};

/// w^{1/2} sampled on the nodes.
std::vector<double> sample_sqrt_maxwellian(VelocityGrid const& grid);

}  // namespace slabkin

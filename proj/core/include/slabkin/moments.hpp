#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slabkin/collision_operator.hpp"
#include "slabkin/slab_solver.hpp"

namespace slabkin
{

/// Multi-index alpha with its constant A_alpha.
class MomentIndex
{
  public:
    MomentIndex(int a1, int a2, int a3);

    std::array<int, 3> const& alpha() const noexcept { return alpha_; }
    int order() const noexcept { return alpha_[0] + alpha_[1] + alpha_[2]; }
    /// (2a1)^{a1/2} (2a2)^{a2/2} (2a3)^{a3/2} e^{-|alpha|/2}, 0^0 = 1.
    double a_alpha() const noexcept { return a_alpha_; }
    /// True when alpha_2 + alpha_3 is even (representable under the
    /// axisymmetric reduction).
    bool transverse_even() const noexcept
    {
        return (alpha_[1] + alpha_[2]) % 2 == 0;
    }
    /// "a1,a2,a3".
    std::string label() const;

    friend bool operator==(MomentIndex const&, MomentIndex const&) = default;

  private:
    std::array<int, 3> alpha_;
    double a_alpha_;
};

/// pi^{-3/4} zeta^alpha exp(-|zeta|^2 / 2).
double phi_alpha(MomentIndex const& alpha, std::array<double, 3> const& zeta);

/// (1/2pi) int_0^{2pi} cos^a(phi) sin^b(phi) dphi.
double azimuthal_average(int a, int b);

/// phi_alpha averaged over the azimuth at every grid node, so that grid
/// quadrature against an axisymmetric f gives the 3-D moment.
std::vector<double> reduced_test_function(MomentIndex const& alpha,
                                          VelocityGrid const& grid);

double moment(DistributionField const& f,
              MomentIndex const& alpha,
              std::size_t x_index);
/// Moment of an arbitrary grid function.
double moment(std::span<double const> f,
              VelocityGrid const& grid,
              MomentIndex const& alpha);

struct HalfMoments
{
    double plus{0};
    double minus{0};
};
HalfMoments half_moments(DistributionField const& f,
                         MomentIndex const& alpha,
                         std::size_t x_index);

struct MomentDerivative
{
    /// Contribution of zeta_1 > 0, split into the three terms of the
    /// reorganised derivative identity.
    double plus_boundary{0};
    double plus_k_jump{0};
    double plus_k_holder{0};
    /// Contribution of zeta_1 < 0 (based at x = l), same split.
    double minus_boundary{0};
    double minus_k_jump{0};
    double minus_k_holder{0};

    double plus() const noexcept
    {
        return plus_boundary + plus_k_jump + plus_k_holder;
    }
    double minus() const noexcept
    {
        return minus_boundary + minus_k_jump + minus_k_holder;
    }
    double total() const noexcept { return plus() + minus(); }
};

/*!
 * d sigma_alpha / dx at 0 < x < l from the reorganised identity
 *
 *   d_x f = |z1|^{-1} e^{-nu x/|z1|} L(f)(0)
 *         + |z1|^{-1} e^{-nu x/|z1|} (K f(x) - K f(0))
 *         + int_0^x nu |z1|^{-2} e^{-nu (x-s)/|z1|} (K f(x) - K f(s)) ds
 *
 * for zeta_1 > 0 and its mirror image based at l for zeta_1 < 0. The
 * K f differences are taken cell by cell, so nothing cancels
 * catastrophically as |zeta_1| -> 0. Throws DomainError for x outside
 * (0, l).
 */
MomentDerivative d_moment_dx(DistributionField const& f,
                             BoundaryData const& bc,
                             LinearizedOperator const& op,
                             MomentIndex const& alpha,
                             double x);

/// L(f) at a wall (x index 0 or last) for every node.
std::vector<double> wall_collision_term(DistributionField const& f,
                                        LinearizedOperator const& op,
                                        std::size_t x_index);

struct SingularCoefficient
{
    double value{0};
    /// Plane integrals at the finest and next-finest zeta_1 levels.
    double finest_level{0};
    double second_level{0};
    /// Finest two levels disagree by more than 5 %.
    bool unstable{false};
    /// L(f)(0, 0+, zeta_r) after extrapolation, per zeta_r node.
    std::vector<double> boundary_trace;
};

/*!
 * c = int int phi_alpha(0, zeta_2, zeta_3) L(f)(0, 0+, zeta_2, zeta_3).
 * L(f)(0, .) is extrapolated to zeta_1 -> 0+ by quadratic (Richardson)
 * extrapolation through the three smallest positive zeta_1 levels.
 */
SingularCoefficient singular_coefficient(DistributionField const& f,
                                         LinearizedOperator const& op,
                                         MomentIndex const& alpha);

/*!
 * I(x) = int_0^inf int_0^{2pi} E1(nu(rho) x / rho) F(rho, 0, phi)
 * e^{-rho^2/2} rho dphi drho, with F the zeta_1 = 0 trace of
 * pi^{-3/4} zeta^alpha L(f)(0, .).
 */
double singular_term_I(DistributionField const& f,
                       LinearizedOperator const& op,
                       MomentIndex const& alpha,
                       double x);

/// rho_0(x) = sup{rho : nu(rho) x / rho > 1}, by bisection on the model's
/// collision frequency (0 if the set is empty).
double rho0(CrossSectionModel const& model, double x);

struct LogFit
{
    double a{0};
    double b{0};
    double residual{0};
};

/// Least squares d ~ a + b (-ln x); residual is the RMS misfit. Needs at
/// least two distinct x (DomainError otherwise).
LogFit fit_log_singularity(std::vector<std::pair<double, double>> const& samples);

struct SingularityReport
{
    MomentIndex alpha{0, 0, 0};
    double c_theory{0};
    double b_fit{0};
    double a_fit{0};
    double fit_residual{0};
    /// Same fit on |d sigma / dx|.
    double b_fit_abs{0};
    double a_fit_abs{0};
    double fit_residual_abs{0};
    std::pair<double, double> x_range{0, 0};
    std::vector<double> rho0_values;
    /// I(x) / (-ln x) at the fit abscissae, and its extrapolation in
    /// 1/(-ln x) to zero.
    std::vector<double> i_ratios;
    double i_limit{0};
    bool extrapolation_unstable{false};
    std::vector<std::pair<double, double>> samples;
};

/// Full analysis of one moment over x = 2^{-k}, k = k_min..k_max.
SingularityReport analyze_singularity(DistributionField const& f,
                                      BoundaryData const& bc,
                                      LinearizedOperator const& op,
                                      MomentIndex const& alpha,
                                      int k_min = 8,
                                      int k_max = 14);

struct MacroscopicVariables
{
    double density{0};
    double velocity1{0};
    double temperature{0};
};
MacroscopicVariables macroscopic_variables(DistributionField const& f,
                                           std::size_t x_index);

}  // namespace slabkin

#pragma once

#include <functional>
#include <string>
#include <vector>

namespace slabkin
{

/*!
 * Collision cross-section B(|V|, theta) = |V|^gamma * beta(theta) for an
 * inverse-power interaction with Grad's angular cutoff.
 *
 * theta is the angle between the relative velocity V and the unit vector
 * alpha on the hemisphere alpha . V > 0, so theta lives in [0, pi/2]. The
 * measure in the collision integral is d(theta) d(epsilon), without the
 * sin(theta) Jacobian; beta carries it.
 *
 * Immutable after construction.
 */
class CrossSectionModel
{
  public:
    using AngularFactor = std::function<double(double)>;

    static constexpr int default_cutoff_samples = 1024;

    /// Hard spheres: gamma = 1, beta = cos(theta) sin(theta), C = 1.
    static CrossSectionModel hard_sphere();

    /// Tabulated beta, linearly interpolated. Throws if the table is not
    /// sorted, does not cover [0, pi/2], or has a negative entry.
    static CrossSectionModel tabulated(double gamma,
                                       std::vector<double> theta,
                                       std::vector<double> beta,
                                       double cutoff_const);

    /// Two-column text file "theta beta" ('#' starts a comment).
    static CrossSectionModel from_table_file(std::string const& path,
                                             double gamma,
                                             double cutoff_const);

    /*!
     * General model. Checks 0 < gamma <= 1 and cutoff_const > 0 and throws
     * DomainError otherwise. The Grad bound is not enforced here so that a
     * violating model can still be inspected with check_grad_cutoff; call
     * validate() before using it in an operator.
     */
    CrossSectionModel(double gamma,
                      AngularFactor beta,
                      double cutoff_const,
                      std::string name);

    double gamma() const noexcept { return gamma_; }
    double cutoff_const() const noexcept { return cutoff_const_; }
    std::string const& name() const noexcept { return name_; }

    double beta(double theta) const { return beta_(theta); }

    /// beta(theta) / sin(theta): angular density per unit solid angle.
    double beta_per_solid_angle(double theta) const;

    /// Integral of beta over [0, pi/2].
    double beta_integral() const noexcept { return beta_integral_; }

    /// Throws DomainError if beta is negative or violates the Grad bound
    /// anywhere on the default cutoff sample.
    void validate() const;

    /// Samples of beta on a fixed grid, used to fingerprint the model.
    std::vector<double> fingerprint(int n = 64) const;

  private:
    double gamma_;
    AngularFactor beta_;
    double cutoff_const_;
    std::string name_;
    double beta_integral_{0};
};

/// B(|V|, theta). Throws DomainError for v_rel < 0 or theta outside
/// [0, pi/2].
double evaluate_B(CrossSectionModel const& model, double v_rel, double theta);

struct CutoffReport
{
    bool satisfied{false};
    /// Largest beta / (cos sin) over interior samples.
    double max_ratio{0};
    /// Angle at which max_ratio occurs.
    double worst_theta{0};
};

/// Sampled check of beta(theta) <= C cos(theta) sin(theta) on a uniform
/// grid of n_samples points in [0, pi/2].
CutoffReport check_grad_cutoff(CrossSectionModel const& model,
                               int n_samples
                               = CrossSectionModel::default_cutoff_samples);

}  // namespace slabkin

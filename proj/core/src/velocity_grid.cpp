#include "slabkin/velocity_grid.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "slabkin/errors.hpp"
#include "slabkin/quadrature.hpp"

namespace slabkin
{
namespace
{
double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// zeta = s ln(1 + e^t) and its inverse.
double softplus(double t, double s) { return s * std::log1p(std::exp(t)); }
double softplus_inverse(double z, double s) { return std::log(std::expm1(z / s)); }

void check_params(VelocityGridParams const& p)
{
    std::string problems;
    if (p.n_zeta1 < 4 || p.n_zeta1 % 2 != 0)
        problems += " n_zeta1 must be even and >= 4;";
    if (p.n_zeta_r < 1)
        problems += " n_zeta_r must be positive;";
    if (!(p.zeta_max > 0))
        problems += " zeta_max must be positive;";
    if (!(p.zeta1_min > 0 && p.zeta1_min < p.zeta_max))
        problems += " zeta1_min must lie in (0, zeta_max);";
    if (!(p.zeta1_scale > 0))
        problems += " zeta1_scale must be positive;";
    if (p.azimuth_order < 1)
        problems += " azimuth_order must be positive;";
    if (!(p.eps_grid > 0))
        problems += " eps_grid must be positive;";
    if (!problems.empty())
        throw DomainError("VelocityGrid:" + problems);
}
}  // namespace

VelocityGrid::VelocityGrid(VelocityGridParams const& params) : params_(params)
{
    check_params(params_);
    double const s = params_.zeta1_scale;
    int const half = params_.n_zeta1 / 2;
    double const t0 = softplus_inverse(params_.zeta1_min, s);
    double const t1 = softplus_inverse(params_.zeta_max, s);
    double const h = (t1 - t0) / (half - 1);

    std::vector<double> pos(half), wpos(half);
    for (int j = 0; j < half; ++j)
    {
        double const t = t0 + j * h;
        pos[j] = softplus(t, s);
        wpos[j] = h * s * sigmoid(t);
    }
    // Lump the part of the infinite trapezoid sum below t0 onto the first
    // node; the integrand is flat there.
    for (int j = 1; j < 10000; ++j)
    {
        double const extra = h * s * sigmoid(t0 - j * h);
        wpos[0] += extra;
        if (extra < 1e-18 * wpos[0])
            break;
    }

    zeta1_.resize(2 * half);
    w1_.resize(2 * half);
    for (int j = 0; j < half; ++j)
    {
        zeta1_[half + j] = pos[j];
        w1_[half + j] = wpos[j];
        zeta1_[half - 1 - j] = -pos[j];
        w1_[half - 1 - j] = wpos[j];
    }

    auto rule = gauss_legendre(params_.n_zeta_r, 0.0, params_.zeta_max);
    zeta_r_ = rule.nodes;
    wr_.resize(zeta_r_.size());
    for (std::size_t k = 0; k < zeta_r_.size(); ++k)
        wr_[k] = 2 * std::numbers::pi * zeta_r_[k] * rule.weights[k];

    weights_.resize(zeta1_.size() * zeta_r_.size());
    for (std::size_t a = 0; a < zeta1_.size(); ++a)
        for (std::size_t b = 0; b < zeta_r_.size(); ++b)
            weights_[a * zeta_r_.size() + b] = w1_[a] * wr_[b];

    double const mass = maxwellian_mass();
    if (!(std::abs(mass - 1) <= params_.eps_grid))
    {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "VelocityGrid: Maxwellian mass misses 1 by %.3e, more than eps_grid = %.3e",
                      mass - 1, params_.eps_grid);
        throw DomainError(buf);
    }
}

double VelocityGrid::speed(std::size_t i) const noexcept
{
    return std::hypot(zeta1(i), zeta_r(i));
}

double VelocityGrid::maxwellian(std::size_t i) const noexcept
{
    double const s = speed(i);
    return std::exp(-s * s) / (std::numbers::pi * std::sqrt(std::numbers::pi));
}

double VelocityGrid::sqrt_maxwellian(std::size_t i) const noexcept
{
    double const s = speed(i);
    return std::exp(-0.5 * s * s) * std::pow(std::numbers::pi, -0.75);
}

double VelocityGrid::maxwellian_mass() const noexcept
{
    double sum = 0;
    for (std::size_t i = 0; i < size(); ++i)
        sum += weights_[i] * maxwellian(i);
    return sum;
}

std::uint64_t VelocityGrid::hash() const noexcept
{
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](double v) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b)
        {
            h ^= (bits >> (8 * b)) & 0xffu;
            h *= 1099511628211ull;
        }
    };
    for (double v : zeta1_) mix(v);
    for (double v : zeta_r_) mix(v);
    for (double v : weights_) mix(v);
    mix(static_cast<double>(params_.azimuth_order));
    return h;
}

std::vector<double> sample_sqrt_maxwellian(VelocityGrid const& grid)
{
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        out[i] = grid.sqrt_maxwellian(i);
    return out;
}

}  // namespace slabkin

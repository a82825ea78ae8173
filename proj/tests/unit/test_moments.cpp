#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/special_functions/expint.hpp>
#include <boost/math/tools/roots.hpp>
#include <gtest/gtest.h>

#include "slabkin/errors.hpp"
#include "slabkin/moments.hpp"

using namespace slabkin;
using std::numbers::pi;

namespace
{
std::shared_ptr<VelocityGrid const> grid()
{
    VelocityGridParams p;
    p.n_zeta1 = 24;
    p.n_zeta_r = 10;
    p.zeta_max = 5.5;
    p.zeta1_min = 1e-3;
    p.eps_grid = 1e-3;
    return std::make_shared<VelocityGrid const>(p);
}

LinearizedOperator const& op()
{
    static LinearizedOperator const o = assemble_operator(CrossSectionModel::hard_sphere(), grid());
    return o;
}

SlabConfig slab()
{
    SlabConfig c;
    c.x_nodes = make_x_nodes(1.0, 41, 3, 12);
    c.tol = 1e-12;
    c.max_iter = 3000;
    c.min_wall_depth = 0;
    return c;
}

DistributionField const& solved()
{
    static DistributionField const f = solve(BoundaryData::temperature_jump(), op(), slab());
    return f;
}

double nu_hs(double c)
{
    return c < 1e-8 ? 2 * std::sqrt(pi)
                    : pi * (std::exp(-c * c) / std::sqrt(pi) + (c + 0.5 / c) * std::erf(c));
}
}  // namespace

TEST(MomentIndex, Constants)
{
    EXPECT_EQ(MomentIndex(0, 0, 0).a_alpha(), 1.0);
    EXPECT_NEAR(MomentIndex(2, 0, 0).a_alpha(), 4 / std::numbers::e, 1e-15);
    for (int a = 0; a <= 6; ++a)
        for (int b = 0; a + b <= 6; ++b)
            for (int c = 0; a + b + c <= 6; ++c)
            {
                auto part = [](int k) { return k == 0 ? 1.0 : std::pow(2.0 * k, k / 2.0); };
                double const ref = part(a) * part(b) * part(c) * std::exp(-(a + b + c) / 2.0);
                EXPECT_NEAR(MomentIndex(a, b, c).a_alpha(), ref, 1e-13 * ref);
            }
    EXPECT_FALSE(MomentIndex(1, 1, 0).transverse_even());
    EXPECT_TRUE(MomentIndex(3, 1, 1).transverse_even());
    EXPECT_EQ(MomentIndex(2, 0, 4).label(), "2,0,4");
    EXPECT_THROW(MomentIndex(-1, 0, 0), DomainError);
}

TEST(MomentIndex, EnvelopeBound)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-8, 8);
    double const c_hat = std::pow(pi, -0.75);
    for (int a = 0; a <= 4; ++a)
        for (int b = 0; b <= 2; ++b)
            for (int k = 0; k < 200; ++k)
            {
                std::array<double, 3> z{u(rng), u(rng), u(rng)};
                MomentIndex const m(a, b, 0);
                double const env = c_hat * m.a_alpha()
                                   * std::exp(-(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]) / 4);
                EXPECT_LE(std::abs(phi_alpha(m, z)), env * (1 + 1e-12));
            }
}

TEST(Moments, AzimuthalAverages)
{
    EXPECT_NEAR(azimuthal_average(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(azimuthal_average(2, 0), 0.5, 1e-15);
    EXPECT_NEAR(azimuthal_average(0, 4), 3.0 / 8, 1e-15);
    EXPECT_NEAR(azimuthal_average(2, 2), 1.0 / 8, 1e-15);
    EXPECT_EQ(azimuthal_average(1, 0), 0.0);
    EXPECT_EQ(azimuthal_average(1, 1), 0.0);
}

TEST(Moments, GaussianMomentsOfMaxwellian)
{
    auto const& g = op().grid();
    auto const w12 = sample_sqrt_maxwellian(g);
    EXPECT_NEAR(moment(w12, g, MomentIndex(0, 0, 0)), 1.0, 1e-3);
    EXPECT_NEAR(moment(w12, g, MomentIndex(2, 0, 0)), 0.5, 1e-3);
    EXPECT_NEAR(moment(w12, g, MomentIndex(0, 2, 0)), 0.5, 1e-3);
    EXPECT_NEAR(moment(w12, g, MomentIndex(0, 0, 2)), 0.5, 1e-3);
    EXPECT_NEAR(moment(w12, g, MomentIndex(1, 0, 0)), 0.0, 1e-14);

    auto const eq = solve(BoundaryData::equilibrium(), op(), slab());
    auto const mv = macroscopic_variables(eq, eq.n_x() / 2);
    EXPECT_NEAR(mv.density, 1.0, 1e-3);
    EXPECT_NEAR(mv.velocity1, 0.0, 1e-12);
    EXPECT_NEAR(mv.temperature, 0.0, 2e-3);
}

TEST(Moments, HalfMomentsSplitExactly)
{
    auto const& f = solved();
    for (auto const& a : {MomentIndex(0, 0, 0), MomentIndex(2, 0, 0), MomentIndex(1, 2, 0)})
        for (std::size_t k : {std::size_t{0}, std::size_t{7}, f.n_x() - 1})
        {
            auto const h = half_moments(f, a, k);
            double const m = moment(f, a, k);
            EXPECT_NEAR(h.plus + h.minus, m, 1e-14 * std::max(1.0, std::abs(m)));
        }
}

TEST(Moments, DerivativeMatchesFiniteDifferences)
{
    auto const& f = solved();
    auto const bc = BoundaryData::temperature_jump();
    auto const& g = op().grid();
    double const h = 1e-4;
    for (auto const& a : {MomentIndex(0, 0, 0), MomentIndex(0, 2, 0), MomentIndex(4, 0, 0)})
        for (double x : {0.2, 0.35, 0.5, 0.65, 0.8})
        {
            double const sp = moment(evaluate_at(f, bc, op(), x + h), g, a);
            double const sm = moment(evaluate_at(f, bc, op(), x - h), g, a);
            double const fd = (sp - sm) / (2 * h);
            double const d = d_moment_dx(f, bc, op(), a, x).total();
            EXPECT_NEAR(d, fd, 1e-3 * std::abs(fd)) << a.label() << " x=" << x;
        }
    EXPECT_THROW(d_moment_dx(f, bc, op(), MomentIndex(0, 0, 0), 0.0), DomainError);
    EXPECT_THROW(d_moment_dx(f, bc, op(), MomentIndex(0, 0, 0), 1.0), DomainError);
}

TEST(Moments, MomentumFluxDerivativeVanishes)
{
    // zeta_1 phi_(2,0,0) is proportional to the momentum invariant.
    auto const& f = solved();
    auto const bc = BoundaryData::temperature_jump();
    for (double x : {1e-3, 0.3, 0.9})
        EXPECT_NEAR(d_moment_dx(f, bc, op(), MomentIndex(2, 0, 0), x).total(), 0.0, 1e-6);
}

TEST(Moments, EquilibriumHasNoSingularity)
{
    auto const eq = solve(BoundaryData::equilibrium(), op(), slab());
    auto const bc = BoundaryData::equilibrium();
    auto const rep = analyze_singularity(eq, bc, op(), MomentIndex(0, 0, 0), 4, 10);
    EXPECT_LT(std::abs(rep.b_fit), 1e-8);
    EXPECT_LT(std::abs(rep.c_theory), 1e-8);
    for (auto const& [x, d] : rep.samples)
        EXPECT_LT(std::abs(d), 1e-8) << x;
}

TEST(Moments, SingularTermAgainstIndependentE1)
{
    auto const& f = solved();
    auto const& g = op().grid();
    MomentIndex const a(0, 2, 0);
    auto const sc = singular_coefficient(f, op(), a);
    double const x = 1e-3;
    double ref = 0;
    for (int r = 0; r < g.n_zeta_r(); ++r)
    {
        double const zr = g.zeta_r_nodes()[static_cast<std::size_t>(r)];
        // Azimuthal average of phi_(0,2,0) at zeta_1 = 0: zeta_r^2 / 2 times the Gaussian.
        double const phi = std::pow(pi, -0.75) * 0.5 * zr * zr * std::exp(-0.5 * zr * zr);
        ref += g.zeta_r_weights()[static_cast<std::size_t>(r)]
               * boost::math::expint(1, nu_hs(zr) * x / zr) * phi
               * sc.boundary_trace[static_cast<std::size_t>(r)];
    }
    EXPECT_NEAR(singular_term_I(f, op(), a, x), ref, 1e-12 * std::abs(ref));
}

TEST(Moments, SingularCoefficientStructure)
{
    auto const& f = solved();
    auto const sc = singular_coefficient(f, op(), MomentIndex(0, 0, 0));
    EXPECT_EQ(sc.boundary_trace.size(), static_cast<std::size_t>(op().grid().n_zeta_r()));
    EXPECT_TRUE(std::isfinite(sc.value));
    // phi vanishes on zeta_1 = 0 whenever alpha_1 > 0.
    EXPECT_EQ(singular_coefficient(f, op(), MomentIndex(1, 0, 0)).value, 0.0);
}

TEST(Moments, Rho0AgainstRootFinder)
{
    auto const hs = CrossSectionModel::hard_sphere();
    for (double x : {1e-4, 1e-3, 0.05})
    {
        auto fn = [x](double r) { return nu_hs(r) * x / r - 1; };
        boost::math::tools::eps_tolerance<double> tol(50);
        auto const [lo, hi] = boost::math::tools::bisect(fn, 1e-6, 1e7, tol);
        EXPECT_NEAR(rho0(hs, x), 0.5 * (lo + hi), 1e-9 * hi) << x;
    }
    EXPECT_EQ(rho0(hs, 0.0), 0.0);
    EXPECT_TRUE(std::isinf(rho0(hs, 1.0)));
}

TEST(Moments, LogFit)
{
    std::vector<std::pair<double, double>> s;
    for (int k = 8; k <= 14; ++k)
    {
        double const x = std::ldexp(1.0, -k);
        s.emplace_back(x, 0.3 - 0.7 * -std::log(x));
    }
    auto const fit = fit_log_singularity(s);
    EXPECT_NEAR(fit.a, 0.3, 1e-12);
    EXPECT_NEAR(fit.b, -0.7, 1e-12);
    EXPECT_LT(fit.residual, 1e-12);
    EXPECT_THROW(fit_log_singularity({{0.1, 1.0}}), DomainError);
    EXPECT_THROW(fit_log_singularity({{0.1, 1.0}, {0.1, 2.0}}), DomainError);
}

TEST(Moments, AnalysisNeedsSixAbscissae)
{
    auto const& f = solved();
    EXPECT_THROW(analyze_singularity(f, BoundaryData::temperature_jump(), op(),
                                     MomentIndex(0, 0, 0), 8, 12),
                 DomainError);
}

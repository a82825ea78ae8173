#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "slabkin/errors.hpp"
#include "slabkin/special_functions.hpp"

using namespace slabkin;

namespace
{
// E1(x) = int_0^inf exp(-x e^u) du, integrated piecewise by Gauss-Kronrod.
double e1_oracle(double x)
{
    using boost::math::quadrature::gauss_kronrod;
    auto f = [x](double u) { return std::exp(-x * std::exp(u)); };
    double const knee = std::log(1.0 / x);
    double const end = std::log(750.0 / x);
    double total = 0;
    double a = 0;
    for (double b : {std::max(knee - 4, 0.0), std::max(knee, 0.0), std::max(knee + 3, 0.0), end})
    {
        if (b > a)
            total += gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-15);
        a = std::max(a, b);
    }
    return total;
}

// -int_z^1 exp(-a/u)/u du.
double h_oracle(double z, double a)
{
    using boost::math::quadrature::gauss_kronrod;
    auto f = [a](double t) { return std::exp(-a * std::exp(-t)); };
    // u = e^t
    return -gauss_kronrod<double, 61>::integrate(f, std::log(z), 0.0, 15, 1e-15);
}
}  // namespace

TEST(E1, MatchesQuadratureOracle)
{
    for (double x : {1e-6, 1e-3, 0.1, 0.5, 0.999, 1.0, 1.001, 2.0, 7.5, 20.0, 49.0})
    {
        double const ref = e1_oracle(x);
        EXPECT_NEAR(e1(x) / ref, 1.0, 1e-11) << "x = " << x;
    }
}

TEST(E1, BranchSelection)
{
    EXPECT_EQ(exp_integral_E1(0.5).branch, E1Branch::series);
    EXPECT_EQ(exp_integral_E1(1.0).branch, E1Branch::series);
    EXPECT_EQ(exp_integral_E1(1.5).branch, E1Branch::continued_fraction);
}

TEST(E1, BranchesAgreeAtSwitch)
{
    for (double x : {0.9, 1.0, 1.1})
    {
        double const cf = e1_continued_fraction(x);
        double const s = -euler_gamma - std::log(x) + e1_series_tail(x, 40);
        EXPECT_NEAR(cf / s, 1.0, 1e-12) << x;
    }
}

TEST(E1, ErrorEstimateIsSmall)
{
    for (double x : {1e-4, 0.3, 3.0, 30.0})
    {
        auto const r = exp_integral_E1(x);
        EXPECT_LT(r.est_error, 1e-12 * r.value) << x;
        EXPECT_FALSE(r.underflow);
    }
}

TEST(E1, RejectsBadArguments)
{
    EXPECT_THROW(exp_integral_E1(0.0), DomainError);
    EXPECT_THROW(exp_integral_E1(-1.0), DomainError);
    EXPECT_THROW(exp_integral_E1(std::numeric_limits<double>::quiet_NaN()), DomainError);
}

TEST(E1, UnderflowFlushesToZero)
{
    auto const r = exp_integral_E1(800.0);
    EXPECT_EQ(r.value, 0.0);
    EXPECT_TRUE(r.underflow);
}

TEST(E1, SmallArgumentAsymptotics)
{
    double const x = 1e-8;
    EXPECT_NEAR(e1(x), -euler_gamma - std::log(x), 2e-8);
    double const ratio = e1(1e-6) / -std::log(1e-6);
    EXPECT_GE(ratio, 0.95);
    EXPECT_LE(ratio, 1.05);
}

TEST(E1, BoundsHoldStrictly)
{
    for (double x = 1e-6; x < 60; x *= 1.37)
    {
        auto const b = e1_bounds(x);
        double const v = e1(x);
        EXPECT_LT(b.lower, v) << x;
        EXPECT_LT(v, b.upper) << x;
    }
}

TEST(E1, SeriesPartialSums)
{
    double const x = 0.7;
    EXPECT_NEAR(e1_series(x, 1), -euler_gamma - std::log(x) + x, 1e-15);
    EXPECT_NEAR(e1_series(x, 30), e1(x), 1e-15);
    EXPECT_THROW(e1_series(x, 0), DomainError);
    EXPECT_THROW(e1_series(1.5, 5), DomainError);
}

TEST(HKernel, MatchesQuadrature)
{
    for (double z : {1e-6, 0.01, 0.3, 0.5, 0.6, 0.9, 0.999})
        for (double x : {1e-5, 1e-2, 0.4, 3.0})
            for (double r : {0.5, 2.0, 10.0})
            {
                double const ref = h_oracle(z, r * x);
                double const got = h_kernel(z, x, r);
                EXPECT_NEAR(got, ref, 1e-12 * std::max(1.0, std::abs(ref)))
                    << "z=" << z << " x=" << x << " r=" << r;
            }
}

TEST(HKernel, VanishesAtOne)
{
    EXPECT_EQ(h_kernel(1.0, 0.3, 2.0), 0.0);
    EXPECT_NEAR(h_kernel(0.5, 0.0, 1.0), std::log(0.5), 1e-15);
    EXPECT_THROW(h_kernel(0.0, 0.1, 1.0), DomainError);
    EXPECT_THROW(h_kernel(1.5, 0.1, 1.0), DomainError);
}

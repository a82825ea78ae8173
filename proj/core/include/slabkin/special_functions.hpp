#pragma once

namespace slabkin
{

/// Euler-Mascheroni constant.
inline constexpr double euler_gamma = 0.57721566490153286061;

enum class E1Branch
{
    series,
    continued_fraction
};

struct E1Result
{
    double value{0};
    E1Branch branch{E1Branch::series};
    double est_error{0};
    /// x > 700: value flushed to zero.
    bool underflow{false};
};

/*!
 * Exponential integral E1(x) = int_0^1 z^{-1} exp(-x/z) dz for x > 0.
 *
 * x <= 1 uses the power series, summed until the next term drops below
 * 1e-16 relative; x > 1 uses a modified-Lentz continued fraction.
 * Throws DomainError for x <= 0 or NaN.
 */
E1Result exp_integral_E1(double x);

/// Continued-fraction branch alone (any x > 0; converges slowly for small
/// x). Exposed to check agreement with the series around the switch.
double e1_continued_fraction(double x);

/// Convenience: exp_integral_E1(x).value.
inline double e1(double x);

/// Partial sum -gamma_E - ln x + sum_{k=1}^{n} (-1)^{k+1} x^k / (k k!).
/// Requires 0 < x <= 1 and n >= 1.
double e1_series(double x, int n_terms);

/// The sum part alone: sum_{k=1}^{n} (-1)^{k+1} x^k / (k k!).
double e1_series_tail(double x, int n_terms);

struct E1Bounds
{
    double lower{0};
    double upper{0};
};

/// (1/2) e^{-x} ln(1 + 2/x) <= E1(x) <= e^{-x} ln(1 + 1/x), x > 0.
E1Bounds e1_bounds(double x);

/*!
 * H(z, x) = -int_z^1 u^{-1} exp(-a/u) du with a = nu_over_rho * x.
 *
 * Equals E1(a/z) - E1(a); computed from the series difference when both
 * arguments are at most one, from E1 itself when z <= 1/2, and by adaptive
 * quadrature on [z, 1] otherwise, which avoids cancellation for z near 1.
 * Requires 0 < z <= 1, x >= 0, nu_over_rho > 0.
 */
double h_kernel(double z, double x, double nu_over_rho);

inline double e1(double x) { return exp_integral_E1(x).value; }

}  // namespace slabkin

#include "slabkin/special_functions.hpp"

#include <cmath>
#include <limits>
#include <tuple>

#include "slabkin/errors.hpp"
#include "slabkin/quadrature.hpp"

namespace slabkin
{
namespace
{
constexpr double eps = std::numeric_limits<double>::epsilon();
constexpr double underflow_threshold = 700.0;

/// sum_{k>=1} (-1)^{k+1} x^k / (k k!) until the next term is below
/// 1e-16 relative to the running sum. Returns the sum and the first
/// omitted term.
std::pair<double, double> series_sum(double x)
{
    double term = x;  // x^k / k!
    double sum = 0;
    for (int k = 1; k < 200; ++k)
    {
        double const contribution = (k % 2 == 1 ? 1.0 : -1.0) * term / k;
        sum += contribution;
        term *= x / (k + 1);
        double const next = term / (k + 1);
        if (next < 1e-16 * std::max(std::abs(sum), 1e-300))
            return {sum, next};
    }
    return {sum, term};
}

/// Modified Lentz evaluation of
/// E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...))).
/// Returns the value, the last correction factor and the iteration count.
std::tuple<double, double, int> lentz(double x)
{
    constexpr double tiny = 1e-300;
    double b = x + 1;
    double c = 1 / tiny;
    double d = 1 / b;
    double h = d;
    double delta = 0;
    int i = 1;
    for (; i < 10000; ++i)
    {
        double const an = -static_cast<double>(i) * i;
        b += 2;
        d = 1 / (an * d + b);
        c = b + an / c;
        delta = c * d;
        h *= delta;
        if (std::abs(delta - 1) < eps)
            break;
    }
    return {h * std::exp(-x), delta, i};
}
}  // namespace

E1Result exp_integral_E1(double x)
{
    if (!(x > 0))
    {
        throw DomainError("exp_integral_E1: argument must be positive, got "
                          + std::to_string(x));
    }
    E1Result out;
    if (x > underflow_threshold)
    {
        out.branch = E1Branch::continued_fraction;
        out.underflow = true;
        return out;
    }
    if (x <= 1.0)
    {
        auto [sum, next] = series_sum(x);
        out.branch = E1Branch::series;
        out.value = -euler_gamma - std::log(x) + sum;
        double const magnitude
            = euler_gamma + std::abs(std::log(x)) + std::abs(sum);
        out.est_error = next + 4 * eps * magnitude;
        return out;
    }

    auto [value, delta, iterations] = lentz(x);
    out.branch = E1Branch::continued_fraction;
    out.value = value;
    out.est_error = (std::abs(delta - 1) + 2 * eps * std::sqrt(double(iterations)))
                    * out.value;
    return out;
}

double e1_continued_fraction(double x)
{
    if (!(x > 0))
    {
        throw DomainError("e1_continued_fraction: argument must be positive");
    }
    return std::get<0>(lentz(x));
}

double e1_series_tail(double x, int n_terms)
{
    if (n_terms < 1)
    {
        throw DomainError("e1_series: need at least one term");
    }
    double term = 1;  // x^k / k!
    double sum = 0;
    for (int k = 1; k <= n_terms; ++k)
    {
        term *= x / k;
        sum += (k % 2 == 1 ? 1.0 : -1.0) * term / k;
    }
    return sum;
}

double e1_series(double x, int n_terms)
{
    if (!(x > 0 && x <= 1))
    {
        throw DomainError("e1_series: x must lie in (0, 1]");
    }
    return -euler_gamma - std::log(x) + e1_series_tail(x, n_terms);
}

E1Bounds e1_bounds(double x)
{
    if (!(x > 0))
    {
        throw DomainError("e1_bounds: argument must be positive");
    }
    double const decay = std::exp(-x);
    return {0.5 * decay * std::log1p(2 / x), decay * std::log1p(1 / x)};
}

double h_kernel(double z, double x, double nu_over_rho)
{
    if (!(z > 0 && z <= 1))
        throw DomainError("h_kernel: z must lie in (0, 1]");
    if (!(x >= 0))
        throw DomainError("h_kernel: x must be non-negative");
    if (!(nu_over_rho > 0))
        throw DomainError("h_kernel: nu/rho must be positive");

    if (z == 1)
        return 0;
    double const a = nu_over_rho * x;
    if (a == 0)
        return std::log(z);
    if (a / z <= 1)
    {
        return std::log(z) + series_sum(a / z).first - series_sum(a).first;
    }
    if (z <= 0.5)
    {
        return exp_integral_E1(a / z).value - exp_integral_E1(a).value;
    }
    auto integrand = [a](double u) { return std::exp(-a / u) / u; };
    auto est = integrate_adaptive(integrand, z, 1.0, 1e-14, 1e-300);
    return -est.value;
}

}  // namespace slabkin

#include "slabkin/quadrature.hpp"

#include <array>
#include <cmath>
#include <queue>
#include <numbers>

#include "slabkin/errors.hpp"

namespace slabkin
{
namespace
{
// QUADPACK qk15 abscissae and weights.
constexpr std::array<double, 8> xgk{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> wgk{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> wg{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel
{
    double a, b, value, error;
    bool operator<(Panel const& other) const { return error < other.error; }
};

Panel kronrod15(std::function<double(double)> const& f, double a, double b)
{
    double const c = 0.5 * (a + b);
    double const h = 0.5 * (b - a);
    std::array<double, 15> fv{};
    fv[7] = f(c);
    for (std::size_t j = 0; j < 7; ++j)
    {
        double const dx = h * xgk[j];
        fv[j] = f(c - dx);
        fv[14 - j] = f(c + dx);
    }
    double res_k = fv[7] * wgk[7];
    double res_g = fv[7] * wg[3];
    for (std::size_t j = 0; j < 7; ++j)
    {
        double const pair = fv[j] + fv[14 - j];
        res_k += wgk[j] * pair;
        if (j % 2 == 1)
            res_g += wg[j / 2] * pair;
    }
    double const mean = 0.5 * res_k;
    double res_asc = wgk[7] * std::abs(fv[7] - mean);
    for (std::size_t j = 0; j < 7; ++j)
    {
        res_asc += wgk[j]
                   * (std::abs(fv[j] - mean) + std::abs(fv[14 - j] - mean));
    }
    res_asc *= std::abs(h);
    double err = std::abs((res_k - res_g) * h);
    // QUADPACK's rescaling of the raw Kronrod-Gauss difference.
    if (res_asc != 0 && err != 0)
        err = res_asc * std::min(1.0, std::pow(200 * err / res_asc, 1.5));
    return {a, b, res_k * h, err};
}
}  // namespace


QuadratureRule gauss_legendre(int n, double a, double b)
{
    if (n < 1)
    {
        throw DomainError("gauss_legendre: order must be positive");
    }
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    double const mid = 0.5 * (a + b);
    double const half = 0.5 * (b - a);
    int const m = (n + 1) / 2;
    for (int i = 0; i < m; ++i)
    {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int iter = 0; iter < 100; ++iter)
        {
            double p0 = 1, p1 = 0;
            for (int k = 1; k <= n; ++k)
            {
                double const p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1);
            double const dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
            {
                // one more pass to refresh dp at the converged node
                p0 = 1;
                p1 = 0;
                for (int k = 1; k <= n; ++k)
                {
                    double const p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * k - 1) * z * p1 - (k - 1.0) * p2) / k;
                }
                dp = n * (z * p0 - p1) / (z * z - 1);
                break;
            }
        }
        double const w = 2 / ((1 - z * z) * dp * dp);
        auto const lo = static_cast<std::size_t>(i);
        auto const hi = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo] = mid - half * z;
        rule.nodes[hi] = mid + half * z;
        rule.weights[lo] = half * w;
        rule.weights[hi] = half * w;
    }
    return rule;
}

IntegralEstimate integrate_adaptive(std::function<double(double)> const& f,
                                    double a,
                                    double b,
                                    double rel_tol,
                                    double abs_tol,
                                    int max_intervals)
{
    IntegralEstimate out;
    if (a == b)
    {
        out.converged = true;
        return out;
    }
    std::priority_queue<Panel> panels;
    panels.push(kronrod15(f, a, b));
    double value = panels.top().value;
    double error = panels.top().error;
    int count = 1;
    auto done = [&] {
        return error <= std::max(abs_tol, rel_tol * std::abs(value));
    };
    while (!done() && count < max_intervals)
    {
        Panel worst = panels.top();
        panels.pop();
        double const mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b)
        {
            panels.push(worst);
            break;
        }
        Panel left = kronrod15(f, worst.a, mid);
        Panel right = kronrod15(f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
        ++count;
    }
    // Re-sum to shed the drift of the running totals.
    value = 0;
    error = 0;
    while (!panels.empty())
    {
        value += panels.top().value;
        error += panels.top().error;
        panels.pop();
    }
    out.value = value;
    out.error = error;
    out.converged = std::isfinite(value) && done();
    return out;
}

}  // namespace slabkin

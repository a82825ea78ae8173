#pragma once

#include <functional>
#include <vector>

namespace slabkin
{

struct QuadratureRule
{
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b] (Newton on the Legendre
/// recurrence, nodes accurate to a few ulp).
QuadratureRule gauss_legendre(int n, double a = -1.0, double b = 1.0);

struct IntegralEstimate
{
    double value{0};
    double error{0};
    bool converged{false};
};

/*!
 * Globally adaptive Gauss-Kronrod (G7/K15) integration of f over [a, b]:
 * the interval with the largest error estimate is bisected until the
 * total estimate drops below max(abs_tol, rel_tol * |I|) or max_intervals
 * is reached.
 *
 * Does not throw; callers decide whether a failed estimate is fatal.
 */
IntegralEstimate integrate_adaptive(std::function<double(double)> const& f,
                                    double a,
                                    double b,
                                    double rel_tol = 1e-12,
                                    double abs_tol = 0.0,
                                    int max_intervals = 500);

}  // namespace slabkin

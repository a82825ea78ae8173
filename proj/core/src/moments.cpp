#include "slabkin/moments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "slabkin/errors.hpp"
#include "slabkin/special_functions.hpp"

namespace slabkin
{
namespace
{
double const pi_m34 = std::pow(std::numbers::pi, -0.75);

double double_factorial(int n)
{
    double r = 1;
    for (int k = n; k > 1; k -= 2)
        r *= k;
    return r;
}

double ipow(double x, int n)
{
    double r = 1;
    for (int k = 0; k < n; ++k)
        r *= x;
    return r;
}

/// Reduced test function at (zeta_1, zeta_r).
double reduced_phi(MomentIndex const& alpha, double z1, double zr)
{
    auto const& a = alpha.alpha();
    double const avg = azimuthal_average(a[1], a[2]);
    if (avg == 0)
        return 0;
    return pi_m34 * ipow(z1, a[0]) * ipow(zr, a[1] + a[2]) * avg
           * std::exp(-0.5 * (z1 * z1 + zr * zr));
}

/// L(f) at zeta_1 level i1 and wall column ix, per zeta_r node.
std::vector<double> level_trace(VelocityGrid const& grid,
                                std::vector<double> const& lf,
                                int i1)
{
    std::vector<double> out(static_cast<std::size_t>(grid.n_zeta_r()));
    for (int ir = 0; ir < grid.n_zeta_r(); ++ir)
        out[static_cast<std::size_t>(ir)] = lf[grid.index(i1, ir)];
    return out;
}

double plane_integral(VelocityGrid const& grid,
                      MomentIndex const& alpha,
                      std::vector<double> const& trace)
{
    auto const zr = grid.zeta_r_nodes();
    auto const wr = grid.zeta_r_weights();
    double sum = 0;
    for (std::size_t r = 0; r < trace.size(); ++r)
        sum += wr[r] * reduced_phi(alpha, 0.0, zr[r]) * trace[r];
    return sum;
}
}  // namespace

MomentIndex::MomentIndex(int a1, int a2, int a3) : alpha_{a1, a2, a3}
{
    if (a1 < 0 || a2 < 0 || a3 < 0)
        throw DomainError("MomentIndex: indices must be non-negative");
    a_alpha_ = 1;
    for (int a : alpha_)
        a_alpha_ *= std::pow(2.0 * a, 0.5 * a);  // pow(0, 0) = 1
    a_alpha_ *= std::exp(-0.5 * order());
}

std::string MomentIndex::label() const
{
    return std::to_string(alpha_[0]) + "," + std::to_string(alpha_[1]) + ","
           + std::to_string(alpha_[2]);
}

double phi_alpha(MomentIndex const& alpha, std::array<double, 3> const& zeta)
{
    auto const& a = alpha.alpha();
    double const s2 = zeta[0] * zeta[0] + zeta[1] * zeta[1] + zeta[2] * zeta[2];
    return pi_m34 * ipow(zeta[0], a[0]) * ipow(zeta[1], a[1]) * ipow(zeta[2], a[2])
           * std::exp(-0.5 * s2);
}

double azimuthal_average(int a, int b)
{
    if (a < 0 || b < 0)
        throw DomainError("azimuthal_average: exponents must be non-negative");
    if (a % 2 != 0 || b % 2 != 0)
        return 0;
    return double_factorial(a - 1) * double_factorial(b - 1) / double_factorial(a + b);
}

std::vector<double> reduced_test_function(MomentIndex const& alpha, VelocityGrid const& grid)
{
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        out[i] = reduced_phi(alpha, grid.zeta1(i), grid.zeta_r(i));
    return out;
}

double moment(std::span<double const> f, VelocityGrid const& grid, MomentIndex const& alpha)
{
    if (f.size() != grid.size())
        throw DimensionError("moment: grid function does not match the grid");
    return grid_inner(grid, f, reduced_test_function(alpha, grid));
}

double moment(DistributionField const& f, MomentIndex const& alpha, std::size_t x_index)
{
    if (x_index >= f.n_x())
        throw DomainError("moment: x index out of range");
    return moment(f.at(x_index), *f.grid, alpha);
}

HalfMoments half_moments(DistributionField const& f,
                         MomentIndex const& alpha,
                         std::size_t x_index)
{
    if (x_index >= f.n_x())
        throw DomainError("half_moments: x index out of range");
    VelocityGrid const& grid = *f.grid;
    auto const col = f.at(x_index);
    auto const phi = reduced_test_function(alpha, grid);
    HalfMoments h;
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        double const v = grid.weight(i) * phi[i] * col[i];
        (grid.zeta1(i) > 0 ? h.plus : h.minus) += v;
    }
    return h;
}

MomentDerivative d_moment_dx(DistributionField const& f,
                             BoundaryData const& bc,
                             LinearizedOperator const& op,
                             MomentIndex const& alpha,
                             double x)
{
    double const l = f.l();
    if (!(x > 0 && x < l))
        throw DomainError("d_moment_dx: x must lie strictly inside (0, l)");
    if (f.kf.size() != f.values.size())
        throw DomainError("d_moment_dx: field carries no K f");
    VelocityGrid const& grid = op.grid();
    auto const nu = op.nu();
    auto const phi = reduced_test_function(alpha, grid);
    auto const kx = kf_at(f, x);
    auto const& xs = f.x_nodes;
    auto const& kf = f.kf;
    auto const last = static_cast<Eigen::Index>(xs.size() - 1);
    auto const incoming = bc.sample_incoming(grid);

    MomentDerivative out;
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        double const wphi = grid.weight(i) * phi[i];
        if (wphi == 0)
            continue;
        auto const ii = static_cast<Eigen::Index>(i);
        double const z1 = grid.zeta1(i);
        double const mu = std::abs(z1);
        double const lambda = nu[i] / mu;
        if (z1 > 0)
        {
            double const decay = std::exp(-lambda * x) / mu;
            double const l0 = -nu[i] * incoming[i] + kf(ii, 0);
            double holder = 0;
            for (std::size_t c = 0; c + 1 < xs.size() && xs[c] < x; ++c)
            {
                double const e = std::min(xs[c + 1], x);
                double const d0 = kx[i] - kf(ii, static_cast<Eigen::Index>(c));
                double const d1 = e < x ? kx[i] - kf(ii, static_cast<Eigen::Index>(c) + 1) : 0.0;
                auto [a, b] = exp_linear_weights(lambda, e - xs[c]);
                holder += std::exp(-lambda * (x - e)) * (a * d0 + b * d1);
            }
            out.plus_boundary += wphi * decay * l0;
            out.plus_k_jump += wphi * decay * (kx[i] - kf(ii, 0));
            out.plus_k_holder += wphi * lambda / mu * holder;
        }
        else
        {
            double const decay = std::exp(-lambda * (l - x)) / mu;
            double const ll = -nu[i] * incoming[i] + kf(ii, last);
            double holder = 0;
            for (std::size_t c = xs.size() - 1; c > 0 && xs[c] > x; --c)
            {
                double const e = std::max(xs[c - 1], x);
                double const d0 = kx[i] - kf(ii, static_cast<Eigen::Index>(c));
                double const d1 = e > x ? kx[i] - kf(ii, static_cast<Eigen::Index>(c) - 1) : 0.0;
                auto [a, b] = exp_linear_weights(lambda, xs[c] - e);
                holder += std::exp(-lambda * (e - x)) * (a * d0 + b * d1);
            }
            out.minus_boundary -= wphi * decay * ll;
            out.minus_k_jump -= wphi * decay * (kx[i] - kf(ii, last));
            out.minus_k_holder -= wphi * lambda / mu * holder;
        }
    }
    return out;
}

std::vector<double> wall_collision_term(DistributionField const& f,
                                        LinearizedOperator const& op,
                                        std::size_t x_index)
{
    if (x_index >= f.n_x())
        throw DomainError("wall_collision_term: x index out of range");
    auto const col = f.at(x_index);
    if (f.kf.size() == f.values.size())
    {
        std::vector<double> out(col.size());
        auto const nu = op.nu();
        for (std::size_t i = 0; i < col.size(); ++i)
            out[i] = f.kf(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(x_index))
                     - nu[i] * col[i];
        return out;
    }
    return apply_L(op, col);
}

SingularCoefficient singular_coefficient(DistributionField const& f,
                                         LinearizedOperator const& op,
                                         MomentIndex const& alpha)
{
    VelocityGrid const& grid = op.grid();
    if (grid.n_zeta1() < 6)
        throw DomainError("singular_coefficient: need three positive zeta_1 levels");
    auto const lf = wall_collision_term(f, op, 0);
    std::array<double, 3> z{};
    std::array<std::vector<double>, 3> traces;
    for (int p = 0; p < 3; ++p)
    {
        int const i1 = grid.positive_level(p);
        z[static_cast<std::size_t>(p)] = grid.zeta1_nodes()[static_cast<std::size_t>(i1)];
        traces[static_cast<std::size_t>(p)] = level_trace(grid, lf, i1);
    }
    // Lagrange weights of the quadratic through the three levels, at 0.
    std::array<double, 3> w{};
    for (std::size_t a = 0; a < 3; ++a)
    {
        w[a] = 1;
        for (std::size_t b = 0; b < 3; ++b)
            if (b != a)
                w[a] *= (0 - z[b]) / (z[a] - z[b]);
    }
    SingularCoefficient out;
    out.boundary_trace.assign(traces[0].size(), 0.0);
    for (std::size_t r = 0; r < traces[0].size(); ++r)
        for (std::size_t a = 0; a < 3; ++a)
            out.boundary_trace[r] += w[a] * traces[a][r];
    out.value = plane_integral(grid, alpha, out.boundary_trace);
    out.finest_level = plane_integral(grid, alpha, traces[0]);
    out.second_level = plane_integral(grid, alpha, traces[1]);
    double const diff = std::abs(out.finest_level - out.second_level);
    out.unstable = diff > 0.05 * std::abs(out.finest_level) && diff > 1e-10;
    return out;
}

double singular_term_I(DistributionField const& f,
                       LinearizedOperator const& op,
                       MomentIndex const& alpha,
                       double x)
{
    if (!(x > 0))
        throw DomainError("singular_term_I: x must be positive");
    VelocityGrid const& grid = op.grid();
    auto const trace = singular_coefficient(f, op, alpha).boundary_trace;
    auto const zr = grid.zeta_r_nodes();
    auto const wr = grid.zeta_r_weights();
    double sum = 0;
    for (std::size_t r = 0; r < trace.size(); ++r)
    {
        double const phi = reduced_phi(alpha, 0.0, zr[r]);
        if (phi == 0 || trace[r] == 0)
            continue;
        double const arg = compute_nu(op.model(), zr[r]) * x / zr[r];
        sum += wr[r] * exp_integral_E1(arg).value * phi * trace[r];
    }
    return sum;
}

double rho0(CrossSectionModel const& model, double x)
{
    if (!(x >= 0))
        throw DomainError("rho0: x must be non-negative");
    if (x == 0)
        return 0;
    auto inside = [&](double rho) { return compute_nu(model, rho) * x / rho > 1; };
    double hi = 1;
    while (inside(hi))
    {
        hi *= 2;
        if (hi > 1e6)
            return std::numeric_limits<double>::infinity();
    }
    double lo = 0;
    for (int it = 0; it < 100 && hi - lo > 1e-14 * hi; ++it)
    {
        double const mid = 0.5 * (lo + hi);
        (mid > 0 && inside(mid) ? lo : hi) = mid;
    }
    return lo;
}

LogFit fit_log_singularity(std::vector<std::pair<double, double>> const& samples)
{
    if (samples.size() < 2)
        throw DomainError("fit_log_singularity: need at least two samples");
    double const n = static_cast<double>(samples.size());
    double mt = 0, md = 0;
    for (auto const& [x, d] : samples)
    {
        if (!(x > 0))
            throw DomainError("fit_log_singularity: x must be positive");
        mt += -std::log(x) / n;
        md += d / n;
    }
    double stt = 0, std_ = 0;
    for (auto const& [x, d] : samples)
    {
        double const t = -std::log(x) - mt;
        stt += t * t;
        std_ += t * (d - md);
    }
    if (!(stt > 1e-300))
        throw DomainError("fit_log_singularity: degenerate design (all x equal)");
    LogFit fit;
    fit.b = std_ / stt;
    fit.a = md - fit.b * mt;
    double ss = 0;
    for (auto const& [x, d] : samples)
    {
        double const r = d - (fit.a + fit.b * -std::log(x));
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

SingularityReport analyze_singularity(DistributionField const& f,
                                      BoundaryData const& bc,
                                      LinearizedOperator const& op,
                                      MomentIndex const& alpha,
                                      int k_min,
                                      int k_max)
{
    if (k_max - k_min + 1 < 6)
        throw DomainError("analyze_singularity: the fit needs at least six dyadic abscissae");
    SingularityReport rep;
    rep.alpha = alpha;
    auto const sc = singular_coefficient(f, op, alpha);
    rep.c_theory = sc.value;
    rep.extrapolation_unstable = sc.unstable;
    rep.x_range = {std::ldexp(1.0, -k_max), std::ldexp(1.0, -k_min)};

    std::vector<std::pair<double, double>> abs_samples;
    std::vector<double> inv_log;
    for (int k = k_min; k <= k_max; ++k)
    {
        double const x = std::ldexp(1.0, -k);
        double const d = d_moment_dx(f, bc, op, alpha, x).total();
        rep.samples.emplace_back(x, d);
        abs_samples.emplace_back(x, std::abs(d));
        rep.rho0_values.push_back(rho0(op.model(), x));
        rep.i_ratios.push_back(singular_term_I(f, op, alpha, x) / -std::log(x));
        inv_log.push_back(1 / -std::log(x));
    }
    auto const fit = fit_log_singularity(rep.samples);
    rep.a_fit = fit.a;
    rep.b_fit = fit.b;
    rep.fit_residual = fit.residual;
    auto const fit_abs = fit_log_singularity(abs_samples);
    rep.a_fit_abs = fit_abs.a;
    rep.b_fit_abs = fit_abs.b;
    rep.fit_residual_abs = fit_abs.residual;

    // I / (-ln x) = c + B / (-ln x) + o(1): extrapolate linearly in 1/(-ln x).
    double const n = static_cast<double>(inv_log.size());
    double mu = 0, mr = 0;
    for (std::size_t k = 0; k < inv_log.size(); ++k)
    {
        mu += inv_log[k] / n;
        mr += rep.i_ratios[k] / n;
    }
    double suu = 0, sur = 0;
    for (std::size_t k = 0; k < inv_log.size(); ++k)
    {
        suu += (inv_log[k] - mu) * (inv_log[k] - mu);
        sur += (inv_log[k] - mu) * (rep.i_ratios[k] - mr);
    }
    rep.i_limit = mr - (sur / suu) * mu;
    return rep;
}

MacroscopicVariables macroscopic_variables(DistributionField const& f, std::size_t x_index)
{
    MacroscopicVariables m;
    m.density = moment(f, MomentIndex{0, 0, 0}, x_index);
    m.velocity1 = moment(f, MomentIndex{1, 0, 0}, x_index);
    double const e = moment(f, MomentIndex{2, 0, 0}, x_index)
                     + moment(f, MomentIndex{0, 2, 0}, x_index)
                     + moment(f, MomentIndex{0, 0, 2}, x_index);
    m.temperature = 2.0 / 3.0 * e - m.density;
    return m;
}

}  // namespace slabkin

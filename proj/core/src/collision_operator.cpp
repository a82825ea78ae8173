#include "slabkin/collision_operator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <random>

#include "slabkin/errors.hpp"
#include "slabkin/quadrature.hpp"

namespace slabkin
{
namespace
{
constexpr double pi = std::numbers::pi;
// pi^{-3/2}
double const inv_pi_32 = 1.0 / (pi * std::sqrt(pi));

constexpr double table_step = 0.1;
constexpr double table_root_step = 0.02;
constexpr double table_d_cap = 12.0;

/// e^{-z} I_0(z) for z >= 0.
double bessel_i0e(double z)
{
    if (z < 15.0)
    {
        double const q = 0.25 * z * z;
        double term = 1;
        double sum = 1;
        for (int k = 1; k < 200; ++k)
        {
            term *= q / (static_cast<double>(k) * k);
            sum += term;
            if (term < 1e-17 * sum)
                break;
        }
        return sum * std::exp(-z);
    }
    // Asymptotic series, stopped at its smallest term.
    double term = 1;
    double sum = 1;
    for (int k = 1; k < 60; ++k)
    {
        double const next = term * (2.0 * k - 1) * (2.0 * k - 1) / (8.0 * k * z);
        if (next > term)
            break;
        term = next;
        sum += term;
        if (term < 1e-17 * sum)
            break;
    }
    return sum / std::sqrt(2 * pi * z);
}

void mix_hash(std::uint64_t& h, double v)
{
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b)
    {
        h ^= (bits >> (8 * b)) & 0xffu;
        h *= 1099511628211ull;
    }
}

// Catmull-Rom weights for fractional offset t in [0, 1).
// Cubic Lagrange weights on the nodes -1, 0, 1, 2 at t.
std::array<double, 4> cubic_weights(double t)
{
    double const a = t + 1, b = t - 1, c = t - 2;
    return {-t * b * c / 6, a * b * c / 2, -a * t * c / 2, a * t * b / 6};
}

// 1-D radial integral at speed c of e^{-r^2} r^2 times the sphere average
// of |zeta - eta|^gamma.
double sphere_shell(double r, double c, double gamma)
{
    if (c < 1e-8 * std::max(r, 1.0))
        return 4 * pi * r * r * std::pow(r, gamma) * std::exp(-r * r);
    double const g2 = gamma + 2;
    double shell;
    if (r < c)
    {
        // c^g2 ((1 + t)^g2 - (1 - t)^g2) without cancellation at small t.
        double const t = r / c;
        shell = std::pow(c, g2)
                * (std::expm1(g2 * std::log1p(t)) - std::expm1(g2 * std::log1p(-t)))
                / (g2 * r * c);
    }
    else
    {
        shell = (std::pow(r + c, g2) - std::pow(r - c, g2)) / (g2 * r * c);
    }
    return 2 * pi * r * r * shell * std::exp(-r * r);
}
}  // namespace

double compute_nu(CrossSectionModel const& model, double speed)
{
    if (!(speed >= 0))
        throw DomainError("compute_nu: speed must be non-negative");
    double const gamma = model.gamma();
    auto f = [&](double r) { return sphere_shell(r, speed, gamma); };
    // e^{-r^2} is below 1e-62 past r = 12; split at the kink r = speed.
    double const r_max = 12.0;
    double const split = std::min(speed, r_max);
    IntegralEstimate total;
    total.converged = true;
    if (split > 0)
        total = integrate_adaptive(f, 0.0, split, 1e-12, 1e-300);
    IntegralEstimate tail;
    tail.converged = true;
    if (split < r_max)
        tail = integrate_adaptive(f, split, r_max, 1e-12, 1e-300);
    double const value = total.value + tail.value;
    double const error = total.error + tail.error;
    if (!total.converged || !tail.converged)
        throw QuadratureError("compute_nu: radial integral did not converge", error);
    return 2 * pi * model.beta_integral() * inv_pi_32 * value;
}

// --------------------------------------------------------------------------
// Kernel

CollisionKernel::CollisionKernel(CrossSectionModel const& model, double zeta_max)
    : model_(model)
{
    if (!(zeta_max > 0))
        throw DomainError("CollisionKernel: zeta_max must be positive");
    loss_factor_ = 2 * pi * model_.beta_integral() * inv_pi_32;
    d_max_ = std::min(2 * std::sqrt(2.0) * zeta_max, table_d_cap) + 4 * table_step;
    m_max_ = std::sqrt(2.0) * zeta_max + 4 * table_step;
    // d is tabulated on a square-root scale, fine where the |d| term of
    // the gamma < 1 models lives.
    dd_ = table_root_step;
    dm_ = table_step;
    nd_ = static_cast<int>(std::ceil(std::sqrt(d_max_) / dd_)) + 1;
    nm_ = static_cast<int>(std::ceil(m_max_ / dm_)) + 1;

    std::uint64_t key = 14695981039346656037ull;
    mix_hash(key, model_.gamma());
    for (double v : model_.fingerprint())
        mix_hash(key, v);
    mix_hash(key, static_cast<double>(nd_));
    mix_hash(key, static_cast<double>(nm_));
    static std::mutex memo_mutex;
    static std::map<std::uint64_t, std::shared_ptr<std::vector<double> const>> memo;
    {
        std::lock_guard lock(memo_mutex);
        if (auto it = memo.find(key); it != memo.end())
            table_ = it->second;
    }
    if (!table_)
    {
        auto table = std::make_shared<std::vector<double>>(
            static_cast<std::size_t>(nd_) * nm_);
        for (int a = 0; a < nd_; ++a)
            for (int b = 0; b < nm_; ++b)
                (*table)[static_cast<std::size_t>(a) * nm_ + b]
                    = plane_integral_direct((a * dd_) * (a * dd_), b * dm_);
        table_ = table;
        std::lock_guard lock(memo_mutex);
        memo.emplace(key, table_);
    }

    // Probe the interpolant between table nodes.
    double scale = 0;
    for (double v : *table_)
        scale = std::max(scale, std::abs(v));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ud(0.0, d_max_ - 2 * table_step);
    std::uniform_real_distribution<double> um(0.0, m_max_ - 2 * dm_);
    for (int k = 0; k < 16; ++k)
    {
        double const d = ud(rng);
        double const m = um(rng);
        table_error_ = std::max(table_error_,
                                std::abs(plane_integral(d, m)
                                         - plane_integral_direct(d, m))
                                    / std::max(scale, 1e-300));
    }
}

double CollisionKernel::plane_integral_direct(double distance, double offset) const
{
    // Below 1e-6 the rounding of theta near pi/2 would show up in b / d.
    double const d = std::max(distance, 1e-6);
    double const m = std::max(offset, 0.0);
    double const half_gamma = 0.5 * model_.gamma();
    auto integrand = [&](double r) {
        if (r <= 0)
            return 0.0;
        double const power = std::pow(d * d + r * r, half_gamma);
        double const theta_b = std::atan2(r, d);
        double const theta_a = std::atan2(d, r);
        double const g = power
                         * (model_.beta_per_solid_angle(theta_b) / d
                            + model_.beta_per_solid_angle(theta_a) / r);
        double const shift = r - m;
        return 2 * pi * r * std::exp(-shift * shift) * bessel_i0e(2 * m * r) * g;
    };
    double const lo = std::max(0.0, m - 9.0);
    double const hi = m + 9.0;
    auto est = integrate_adaptive(integrand, lo, hi, 1e-10, 1e-14, 1000);
    if (!est.converged)
        throw QuadratureError("CollisionKernel: plane integral did not converge",
                              est.error);
    return est.value;
}

double CollisionKernel::plane_integral(double distance, double offset) const
{
    double const u = std::clamp(std::sqrt(std::max(distance, 0.0)) / dd_, 0.0, nd_ - 1.0);
    double const v = std::clamp(offset / dm_, 0.0, nm_ - 1.0);
    // One-sided in sqrt(d) at the bottom; in M the table is even and
    // analytic, so reflect.
    int const bu = std::clamp(static_cast<int>(u) - 1, 0, nd_ - 4);
    int const iv = std::min(static_cast<int>(v), nm_ - 2);
    auto const wu = cubic_weights(u - bu - 1);
    auto const wv = cubic_weights(v - iv);
    double sum = 0;
    for (int a = 0; a < 4; ++a)
    {
        std::size_t const ia = static_cast<std::size_t>(bu + a);
        double row = 0;
        for (int b = 0; b < 4; ++b)
        {
            int ib = std::abs(iv - 1 + b);
            ib = std::min(ib, nm_ - 1);
            row += wv[b] * (*table_)[ia * nm_ + ib];
        }
        sum += wu[a] * row;
    }
    return sum;
}

double CollisionKernel::operator()(double speed_a, double speed_b, double distance) const
{
    double const d = distance;
    double const s2a = speed_a * speed_a;
    double const s2b = speed_b * speed_b;
    double const d2 = d * d;
    double const delta = s2b - s2a;
    double const ratio = delta * delta / (4 * d2);
    double const m2 = std::max(0.0, 0.25 * (2 * s2a + 2 * s2b - d2) - ratio);
    double const gain = inv_pi_32 * std::exp(-0.25 * d2 - ratio)
                        * plane_integral(d, std::sqrt(m2)) / d;
    double const loss = loss_factor_ * std::pow(d, model_.gamma())
                        * std::exp(-0.5 * (s2a + s2b));
    return gain - loss;
}

double CollisionKernel::operator()(std::array<double, 3> const& zeta,
                                   std::array<double, 3> const& eta) const
{
    double const sa = std::hypot(zeta[0], zeta[1], zeta[2]);
    double const sb = std::hypot(eta[0], eta[1], eta[2]);
    double const d = std::hypot(zeta[0] - eta[0], zeta[1] - eta[1], zeta[2] - eta[2]);
    return (*this)(sa, sb, d);
}

// --------------------------------------------------------------------------
// Operator

namespace
{
double residual_ratio(LinearizedOperator const& op, std::vector<double> const& psi)
{
    auto lpsi = apply_L(op, psi);
    double const den = norm_star(psi, op);
    return den > 0 ? norm_star(lpsi, op) / den : 0.0;
}

/// (1/pi) int_0^pi k(d(phi)) cos(m phi) dphi for
/// d^2 = dmin^2 + 2 b sin^2(phi/2), dmin > 0, b > 0.
IntegralEstimate azimuthal_entry(CollisionKernel const& kernel,
                                 double speed_i,
                                 double speed_j,
                                 double dmin,
                                 double b,
                                 int mode,
                                 double rel_tol,
                                 double abs_tol,
                                 int max_intervals)
{
    double const root2b = std::sqrt(2 * b);
    auto weight = [mode](double phi) { return mode == 0 ? 1.0 : std::cos(phi); };

    // phi in [0, pi/2] through u = asinh(sqrt(2b) sin(phi/2) / dmin), which
    // absorbs the 1/d peak at phi = 0: dphi / d = 2 du / (sqrt(2b) cos(phi/2)).
    double const u_max = std::asinh(root2b * std::sin(0.25 * pi) / dmin);
    auto near = [&](double u) {
        double const s = std::min(dmin * std::sinh(u) / root2b, 1.0);
        double const phi = 2 * std::asin(s);
        double const d = dmin * std::cosh(u);
        double const c = std::sqrt(std::max(1 - s * s, 0.0));
        return kernel(speed_i, speed_j, d) * d * 2 / (root2b * c) * weight(phi);
    };
    auto far = [&](double phi) {
        double const h = std::sin(0.5 * phi);
        double const d = std::sqrt(dmin * dmin + 2 * b * h * h);
        return kernel(speed_i, speed_j, d) * weight(phi);
    };
    IntegralEstimate out;
    double panel_rel = rel_tol;
    double panel_abs = 0.5 * pi * abs_tol;
    for (int pass = 0; pass < 2; ++pass)
    {
        auto e1 = integrate_adaptive(near, 0.0, u_max, panel_rel, panel_abs, max_intervals);
        auto e2 = integrate_adaptive(far, 0.5 * pi, pi, panel_rel, panel_abs, max_intervals);
        out.value = (e1.value + e2.value) / pi;
        out.error = (e1.error + e2.error) / pi;
        double const target = std::max(rel_tol * std::abs(out.value), abs_tol);
        out.converged = out.error <= target;
        if (out.converged)
            break;
        // The two halves cancel: tighten them against the total.
        panel_rel = 0;
        panel_abs = 0.25 * pi * target;
    }
    return out;
}

std::vector<double> reference_function(VelocityGrid const& grid, int mode)
{
    std::vector<double> r(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        r[i] = grid.sqrt_maxwellian(i) * (mode == 0 ? 1.0 : grid.zeta_r(i));
    return r;
}
}  // namespace

LinearizedOperator::LinearizedOperator(std::shared_ptr<VelocityGrid const> grid,
                                       CrossSectionModel model,
                                       std::vector<double> nu,
                                       Eigen::MatrixXd kernel,
                                       int mode)
    : grid_(std::move(grid))
    , model_(std::move(model))
    , nu_(std::move(nu))
    , kernel_(std::move(kernel))
    , mode_(mode)
{
    if (!grid_)
        throw DimensionError("LinearizedOperator: null grid");
    auto const n = static_cast<Eigen::Index>(grid_->size());
    if (static_cast<Eigen::Index>(nu_.size()) != n || kernel_.rows() != n
        || kernel_.cols() != n)
        throw DimensionError("LinearizedOperator: nu/kernel do not match the grid");
    if (mode_ != 0 && mode_ != 1)
        throw DomainError("LinearizedOperator: mode must be 0 or 1");

    Eigen::Map<Eigen::VectorXd const> w(grid_->weights().data(), n);
    kernel_w_ = kernel_ * w.asDiagonal();

    nu0_fit_ = std::numeric_limits<double>::infinity();
    nu1_fit_ = 0;
    for (std::size_t i = 0; i < nu_.size(); ++i)
    {
        double const r = nu_[i] / std::pow(1 + grid_->speed(i), model_.gamma());
        nu0_fit_ = std::min(nu0_fit_, r);
        nu1_fit_ = std::max(nu1_fit_, r);
    }
    for (auto const& [name, psi] : collision_invariants(*grid_, mode_))
    {
        double const r = residual_ratio(*this, psi);
        invariants_.push_back({name, r, r});
    }
}

Eigen::MatrixXd LinearizedOperator::apply_K_columns(Eigen::MatrixXd const& columns) const
{
    if (columns.rows() != kernel_w_.cols())
        throw DimensionError("apply_K_columns: row count does not match the grid");
    return kernel_w_ * columns;
}

std::uint64_t operator_cache_key(CrossSectionModel const& model,
                                 VelocityGrid const& grid,
                                 int mode)
{
    std::uint64_t h = grid.hash();
    mix_hash(h, model.gamma());
    mix_hash(h, model.cutoff_const());
    for (double v : model.fingerprint())
        mix_hash(h, v);
    mix_hash(h, static_cast<double>(mode));
    mix_hash(h, table_step);
    mix_hash(h, table_root_step);
    return h;
}

std::uint64_t LinearizedOperator::cache_key() const noexcept
{
    return operator_cache_key(model_, *grid_, mode_);
}

std::vector<std::pair<std::string, std::vector<double>>>
collision_invariants(VelocityGrid const& grid, int mode)
{
    std::size_t const n = grid.size();
    std::vector<std::pair<std::string, std::vector<double>>> out;
    if (mode == 0)
    {
        std::vector<double> mass(n), mom(n), energy(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            double const s = grid.sqrt_maxwellian(i);
            double const sp = grid.speed(i);
            mass[i] = s;
            mom[i] = grid.zeta1(i) * s;
            energy[i] = sp * sp * s;
        }
        out.emplace_back("mass", std::move(mass));
        out.emplace_back("momentum_1", std::move(mom));
        out.emplace_back("energy", std::move(energy));
    }
    else
    {
        out.emplace_back("momentum_transverse", reference_function(grid, 1));
    }
    return out;
}

LinearizedOperator assemble_operator(CrossSectionModel const& model,
                                     std::shared_ptr<VelocityGrid const> grid_ptr,
                                     AssemblyOptions const& options)
{
    model.validate();
    if (!grid_ptr)
        throw DimensionError("assemble_operator: null grid");
    if (options.mode != 0 && options.mode != 1)
        throw DomainError("assemble_operator: mode must be 0 or 1");
    if (!(options.assembly_tol > 0))
        throw DomainError("assemble_operator: assembly_tol must be positive");

    VelocityGrid const& grid = *grid_ptr;
    std::size_t const n = grid.size();
    int const n_r = grid.n_zeta_r();
    int const n1 = grid.n_zeta1();

    // nu per (|zeta_1| level, zeta_r) pair; the grid is symmetric in zeta_1.
    std::vector<double> nu(n);
    for (int p = 0; p < n1 / 2; ++p)
    {
        for (int ir = 0; ir < n_r; ++ir)
        {
            std::size_t const ip = grid.index(grid.positive_level(p), ir);
            double const v = compute_nu(model, grid.speed(ip));
            nu[ip] = v;
            nu[grid.index(grid.negative_level(p), ir)] = v;
        }
    }

    CollisionKernel const kernel(model, grid.zeta_max());
    double const rel_tol = options.assembly_tol;
    // Entries are O(1) near the diagonal; the same number serves as the
    // absolute floor for entries that pass through zero.
    double const abs_tol = options.assembly_tol;
    // The azimuthal order sets the bisection budget of the adaptive rule.
    int const max_intervals = std::max(8, 1 << std::min(grid.azimuth_order(), 20));

    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(n));
    double worst = 0;
    double worst_abs = 0;
    bool failed = false;

#if defined(SLABKIN_USE_OPENMP)
#pragma omp parallel for schedule(dynamic, 4) reduction(max : worst, worst_abs) reduction(|| : failed)
#endif
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii)
    {
        auto const i = static_cast<std::size_t>(ii);
        double const z1i = grid.zeta1(i);
        double const zri = grid.zeta_r(i);
        double const si = grid.speed(i);
        for (std::size_t j = i + 1; j < n; ++j)
        {
            double const dz = z1i - grid.zeta1(j);
            double const zrj = grid.zeta_r(j);
            double const dmin = std::hypot(dz, zri - zrj);
            double const b = 2 * zri * zrj;
            auto est = azimuthal_entry(kernel, si, grid.speed(j), dmin, b, options.mode,
                                       rel_tol, abs_tol, max_intervals);
            K(ii, static_cast<Eigen::Index>(j)) = est.value;
            K(static_cast<Eigen::Index>(j), ii) = est.value;
            double const rel = est.error / std::max(std::abs(est.value), abs_tol / rel_tol);
            worst = std::max(worst, rel);
            worst_abs = std::max(worst_abs, est.error);
            if (!est.converged)
                failed = true;
        }
    }
    if (failed)
        throw QuadratureError("assemble_operator: an azimuthal kernel entry missed "
                              "assembly_tol",
                              worst_abs);

    // Singularity subtraction: what sum_j K_ij W_j r_j misses of nu_i r_i.
    auto const ref = reference_function(grid, options.mode);
    auto const w = grid.weights();
    std::vector<double> defect(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        double off = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i)
                off += K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                       * w[j] * ref[j];
        defect[i] = (nu[i] * ref[i] - off) / ref[i];
    }

    // The defect is the near-singular mass of row i that the tensor rule
    // misses along the zeta_r column through node i. Lumping it on the
    // diagonal would make K act locally on sharp zeta_1 layers, so it is
    // spread over the column as dK_ij = g_ij (u_i + u_j) / 2 with g a
    // Gaussian one zeta_r cell wide, u chosen to keep K(ref) = nu ref.
    for (int ir = 0; ir < n_r; ++ir)
    {
        double const r = grid.zeta_r_nodes()[static_cast<std::size_t>(ir)];
        double const cell = grid.zeta_r_weights()[static_cast<std::size_t>(ir)] / (2 * pi * r);
        Eigen::MatrixXd g(n1, n1);
        Eigen::VectorXd wr(n1), rhs(n1);
        for (int a = 0; a < n1; ++a)
        {
            std::size_t const i = grid.index(a, ir);
            wr[a] = w[i] * ref[i];
            rhs[a] = 2 * defect[i] * ref[i];
            for (int c = 0; c < n1; ++c)
            {
                double const t = (grid.zeta1(i) - grid.zeta1(grid.index(c, ir))) / cell;
                g(a, c) = std::exp(-t * t);
            }
        }
        Eigen::VectorXd const m = g * wr;
        Eigen::MatrixXd A = g * wr.asDiagonal();
        A.diagonal() += m;
        Eigen::VectorXd const u = A.partialPivLu().solve(rhs);
        for (int a = 0; a < n1; ++a)
            for (int c = 0; c < n1; ++c)
                K(static_cast<Eigen::Index>(grid.index(a, ir)),
                  static_cast<Eigen::Index>(grid.index(c, ir)))
                    += 0.5 * g(a, c) * (u[a] + u[c]);
    }

    LinearizedOperator raw(grid_ptr, model, nu, K, options.mode);
    raw.max_entry_error_ = worst;
    if (!options.conserve)
        return raw;

    // P L P with P the W-orthogonal projector off the invariants:
    // dK = -R E^T - E R^T + E (E^T W R) E^T, R = L E, E W-orthonormal.
    auto const invariants = collision_invariants(grid, options.mode);
    auto const ni = static_cast<Eigen::Index>(invariants.size());
    auto const nn = static_cast<Eigen::Index>(n);
    Eigen::Map<Eigen::VectorXd const> wv(w.data(), nn);
    Eigen::MatrixXd E(nn, ni);
    for (Eigen::Index c = 0; c < ni; ++c)
        E.col(c) = Eigen::Map<Eigen::VectorXd const>(invariants[c].second.data(), nn);
    // Gram-Schmidt in the W inner product (twice for stability).
    for (int pass = 0; pass < 2; ++pass)
    {
        for (Eigen::Index c = 0; c < ni; ++c)
        {
            for (Eigen::Index p = 0; p < c; ++p)
                E.col(c) -= E.col(p).dot(wv.asDiagonal() * E.col(c)) * E.col(p);
            E.col(c) /= std::sqrt(E.col(c).dot(wv.asDiagonal() * E.col(c)));
        }
    }
    Eigen::Map<Eigen::VectorXd const> nuv(nu.data(), nn);
    Eigen::MatrixXd R = raw.kernel_w_ * E - nuv.asDiagonal() * E;
    Eigen::MatrixXd const G = E.transpose() * wv.asDiagonal() * R;
    Eigen::MatrixXd dK = -R * E.transpose();
    dK -= E * R.transpose();
    dK += E * G * E.transpose();
    K += dK;
    // Exact symmetry after rounding.
    K = 0.5 * (K + K.transpose()).eval();

    LinearizedOperator out(grid_ptr, model, std::move(nu), std::move(K), options.mode);
    out.max_entry_error_ = worst;
    for (std::size_t c = 0; c < out.invariants_.size(); ++c)
        out.invariants_[c].raw = raw.invariants_[c].raw;
    return out;
}

std::vector<double> apply_K(LinearizedOperator const& op, std::span<double const> f)
{
    if (f.size() != op.size())
        throw DimensionError("apply_K: grid function has " + std::to_string(f.size())
                             + " entries, grid has " + std::to_string(op.size()));
    auto const n = static_cast<Eigen::Index>(f.size());
    Eigen::Map<Eigen::VectorXd const> fv(f.data(), n);
    Eigen::VectorXd const kf = op.apply_K_columns(fv);
    return {kf.data(), kf.data() + n};
}

std::vector<double> apply_L(LinearizedOperator const& op, std::span<double const> f)
{
    auto out = apply_K(op, f);
    auto const nu = op.nu();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] -= nu[i] * f[i];
    return out;
}

double grid_inner(VelocityGrid const& grid,
                  std::span<double const> f,
                  std::span<double const> g)
{
    if (f.size() != grid.size() || g.size() != grid.size())
        throw DimensionError("grid_inner: size mismatch");
    auto const w = grid.weights();
    double sum = 0;
    for (std::size_t i = 0; i < f.size(); ++i)
        sum += w[i] * f[i] * g[i];
    return sum;
}

double norm_star(std::span<double const> f, LinearizedOperator const& op)
{
    if (f.size() != op.size())
        throw DimensionError("norm_star: size mismatch");
    auto const w = op.grid().weights();
    auto const nu = op.nu();
    double sum = 0;
    for (std::size_t i = 0; i < f.size(); ++i)
        sum += w[i] * nu[i] * f[i] * f[i];
    return std::sqrt(sum);
}

double norm_Linf_weighted(std::span<double const> f, double a, VelocityGrid const& grid)
{
    if (f.size() != grid.size())
        throw DimensionError("norm_Linf_weighted: size mismatch");
    if (!(a >= 0))
        throw DomainError("norm_Linf_weighted: a must be non-negative");
    double m = 0;
    for (std::size_t i = 0; i < f.size(); ++i)
        m = std::max(m, std::pow(1 + grid.speed(i), a) * std::abs(f[i]));
    return m;
}

double norm_L2(std::span<double const> f, VelocityGrid const& grid)
{
    return std::sqrt(grid_inner(grid, f, f));
}

SmoothingReport smoothing_report(LinearizedOperator const& op,
                                 std::uint64_t seed,
                                 int n_samples,
                                 std::vector<double> const& a_values)
{
    VelocityGrid const& grid = op.grid();
    double const gamma = op.model().gamma();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> width(0.25, 1.0);

    SmoothingReport rep;
    for (double a : a_values)
        rep.c2.emplace_back(a, 0.0);
    std::vector<double> f(grid.size());
    for (int s = 0; s < n_samples; ++s)
    {
        double const tau = width(rng);
        std::array<double, 4> c{};
        for (auto& v : c)
            v = normal(rng);
        for (std::size_t i = 0; i < grid.size(); ++i)
        {
            double const z1 = grid.zeta1(i);
            double const zr = grid.zeta_r(i);
            double const sp = grid.speed(i);
            f[i] = std::exp(-tau * sp * sp)
                   * (c[0] + c[1] * z1 + c[2] * zr * zr + c[3] * z1 * z1);
        }
        double const l2 = norm_L2(f, grid);
        if (!(l2 > 0))
            continue;
        auto const kf = apply_K(op, f);
        rep.c1 = std::max(rep.c1, norm_Linf_weighted(kf, 1.5 - gamma, grid) / l2);
        for (auto& [a, c2] : rep.c2)
        {
            double const den = norm_Linf_weighted(f, a, grid);
            if (den > 0)
                c2 = std::max(c2, norm_Linf_weighted(kf, std::max(0.0, 2 + a - gamma), grid)
                                      / den);
        }
        ++rep.samples;
    }
    return rep;
}

// --------------------------------------------------------------------------
// Cache

namespace
{
constexpr char op_magic[8] = {'S', 'L', 'K', 'O', 'P', '0', '0', '1'};

template <class T>
void put(std::ofstream& out, T v)
{
    out.write(reinterpret_cast<char const*>(&v), sizeof v);
}

template <class T>
bool get(std::ifstream& in, T& v)
{
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
}
}  // namespace

void save_operator(LinearizedOperator const& op, std::filesystem::path const& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("save_operator: cannot open " + path.string());
    out.write(op_magic, sizeof op_magic);
    put<std::uint64_t>(out, op.cache_key());
    put<std::uint64_t>(out, op.size());
    put<std::uint64_t>(out, static_cast<std::uint64_t>(op.mode()));
    for (double v : op.nu())
        put(out, v);
    auto const& K = op.kernel();
    for (Eigen::Index i = 0; i < K.rows(); ++i)
        for (Eigen::Index j = 0; j < K.cols(); ++j)
            put(out, K(i, j));
    put(out, op.max_entry_error());
    put<std::uint64_t>(out, op.invariant_residuals().size());
    for (auto const& r : op.invariant_residuals())
        put(out, r.raw);
    if (!out)
        throw IoError("save_operator: write failed for " + path.string());
}

std::optional<LinearizedOperator> load_operator(std::filesystem::path const& path,
                                                CrossSectionModel const& model,
                                                std::shared_ptr<VelocityGrid const> grid,
                                                int mode)
{
    std::ifstream in(path, std::ios::binary);
    if (!in || !grid)
        return std::nullopt;
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, op_magic, 8) != 0)
        return std::nullopt;
    std::uint64_t key = 0, n = 0, m = 0;
    if (!get(in, key) || !get(in, n) || !get(in, m))
        return std::nullopt;
    if (key != operator_cache_key(model, *grid, mode) || n != grid->size()
        || m != static_cast<std::uint64_t>(mode))
        return std::nullopt;
    std::vector<double> nu(n);
    for (auto& v : nu)
        if (!get(in, v))
            return std::nullopt;
    Eigen::MatrixXd K(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < K.rows(); ++i)
        for (Eigen::Index j = 0; j < K.cols(); ++j)
            if (!get(in, K(i, j)))
                return std::nullopt;
    double entry_error = 0;
    std::uint64_t count = 0;
    if (!get(in, entry_error) || !get(in, count))
        return std::nullopt;
    std::vector<double> raw(count);
    for (auto& v : raw)
        if (!get(in, v))
            return std::nullopt;

    LinearizedOperator op(std::move(grid), model, std::move(nu), std::move(K), mode);
    op.max_entry_error_ = entry_error;
    for (std::size_t c = 0; c < op.invariants_.size() && c < raw.size(); ++c)
        op.invariants_[c].raw = raw[c];
    return op;
}

}  // namespace slabkin

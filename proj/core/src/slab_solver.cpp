#include "slabkin/slab_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "slabkin/errors.hpp"

namespace slabkin
{
namespace
{
double sqrt_maxwellian(double z1, double zr)
{
    return std::exp(-0.5 * (z1 * z1 + zr * zr)) * std::pow(std::numbers::pi, -0.75);
}

/// Per-node streaming coefficients: for every velocity node and x cell, the
/// attenuation e^{-lambda h} and the weights of K f at the upstream and
/// downstream ends of the cell (already divided by |zeta_1|).
struct Streaming
{
    Eigen::MatrixXd decay, up, down;
};

Streaming streaming_coefficients(LinearizedOperator const& op,
                                 std::vector<double> const& x)
{
    VelocityGrid const& grid = op.grid();
    auto const n = static_cast<Eigen::Index>(grid.size());
    auto const cells = static_cast<Eigen::Index>(x.size() - 1);
    Streaming s{Eigen::MatrixXd(n, cells), Eigen::MatrixXd(n, cells),
                Eigen::MatrixXd(n, cells)};
    auto const nu = op.nu();
    for (Eigen::Index i = 0; i < n; ++i)
    {
        double const mu = std::abs(grid.zeta1(static_cast<std::size_t>(i)));
        double const lambda = nu[static_cast<std::size_t>(i)] / mu;
        for (Eigen::Index c = 0; c < cells; ++c)
        {
            double const h = x[static_cast<std::size_t>(c) + 1] - x[static_cast<std::size_t>(c)];
            auto [a, b] = exp_linear_weights(lambda, h);
            s.decay(i, c) = std::exp(-lambda * h);
            s.up(i, c) = a / mu;
            s.down(i, c) = b / mu;
        }
    }
    return s;
}

/// One sweep of the mild form for given K f (columns per x node).
Eigen::MatrixXd sweep(VelocityGrid const& grid,
                      Streaming const& s,
                      std::vector<double> const& incoming,
                      Eigen::MatrixXd const* kf,
                      std::size_t n_x)
{
    auto const n = static_cast<Eigen::Index>(grid.size());
    auto const nx = static_cast<Eigen::Index>(n_x);
    Eigen::MatrixXd out(n, nx);
    for (Eigen::Index i = 0; i < n; ++i)
    {
        double v = incoming[static_cast<std::size_t>(i)];
        if (grid.zeta1(static_cast<std::size_t>(i)) > 0)
        {
            out(i, 0) = v;
            for (Eigen::Index c = 0; c + 1 < nx; ++c)
            {
                v *= s.decay(i, c);
                if (kf)
                    v += s.up(i, c) * (*kf)(i, c) + s.down(i, c) * (*kf)(i, c + 1);
                out(i, c + 1) = v;
            }
        }
        else
        {
            out(i, nx - 1) = v;
            for (Eigen::Index c = nx - 2; c >= 0; --c)
            {
                v *= s.decay(i, c);
                if (kf)
                    v += s.up(i, c) * (*kf)(i, c + 1) + s.down(i, c) * (*kf)(i, c);
                out(i, c) = v;
            }
        }
    }
    return out;
}

double column_star(Eigen::MatrixXd const& m, Eigen::Index c, LinearizedOperator const& op)
{
    auto const w = op.grid().weights();
    auto const nu = op.nu();
    double sum = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
    {
        double const v = m(i, c);
        sum += w[static_cast<std::size_t>(i)] * nu[static_cast<std::size_t>(i)] * v * v;
    }
    return std::sqrt(sum);
}

double sup_star(Eigen::MatrixXd const& m, LinearizedOperator const& op)
{
    double best = 0;
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        best = std::max(best, column_star(m, c, op));
    return best;
}

void check_field(DistributionField const& f, LinearizedOperator const& op)
{
    if (static_cast<std::size_t>(f.values.rows()) != op.size()
        || static_cast<std::size_t>(f.values.cols()) != f.x_nodes.size())
        throw DimensionError("distribution field does not match the operator grid");
}

/// Cell c with x_c <= x <= x_{c+1}.
std::size_t cell_of(std::vector<double> const& xs, double x)
{
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t c = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
    return std::min(c, xs.size() - 2);
}

// Rectilinear "zeta1 zeta_r value" table with bilinear interpolation.
struct Table2
{
    std::vector<double> a, b, v;

    double operator()(double x, double y) const
    {
        auto locate = [](std::vector<double> const& g, double t, std::size_t& k, double& s) {
            if (g.size() == 1)
            {
                k = 0;
                s = 0;
                return;
            }
            t = std::clamp(t, g.front(), g.back());
            auto it = std::upper_bound(g.begin(), g.end(), t);
            k = std::min<std::size_t>(it == g.begin() ? 0 : it - g.begin() - 1, g.size() - 2);
            s = (t - g[k]) / (g[k + 1] - g[k]);
        };
        std::size_t i, j;
        double s, t;
        locate(a, x, i, s);
        locate(b, y, j, t);
        auto at = [&](std::size_t p, std::size_t q) {
            p = std::min(p, a.size() - 1);
            q = std::min(q, b.size() - 1);
            return v[p * b.size() + q];
        };
        return (1 - s) * (1 - t) * at(i, j) + s * (1 - t) * at(i + 1, j)
               + (1 - s) * t * at(i, j + 1) + s * t * at(i + 1, j + 1);
    }
};

Table2 read_table2(std::string const& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("boundary table: cannot open " + path);
    std::map<std::pair<double, double>, double> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        double z1, zr, val;
        if (!(ls >> z1))
            continue;
        if (!(ls >> zr >> val))
            throw ConfigError(path + ":" + std::to_string(line_no)
                              + ": expected 'zeta1 zeta_r value'");
        entries[{z1, zr}] = val;
    }
    Table2 t;
    for (auto const& [key, val] : entries)
    {
        t.a.push_back(key.first);
        t.b.push_back(key.second);
    }
    auto uniq = [](std::vector<double>& g) {
        std::sort(g.begin(), g.end());
        g.erase(std::unique(g.begin(), g.end()), g.end());
    };
    uniq(t.a);
    uniq(t.b);
    if (t.a.empty() || entries.size() != t.a.size() * t.b.size())
        throw ConfigError("boundary table " + path + " is not a complete rectilinear grid");
    t.v.resize(entries.size());
    for (std::size_t i = 0; i < t.a.size(); ++i)
        for (std::size_t j = 0; j < t.b.size(); ++j)
            t.v[i * t.b.size() + j] = entries.at({t.a[i], t.b[j]});
    return t;
}
}  // namespace

// --------------------------------------------------------------------------

void SlabConfig::validate() const
{
    std::string problems;
    if (!(l > 0))
        problems += " l must be positive;";
    if (x_nodes.size() < 2)
        problems += " need at least two x nodes;";
    else
    {
        if (x_nodes.front() != 0.0)
            problems += " first x node must be 0;";
        if (std::abs(x_nodes.back() - l) > 1e-14 * l)
            problems += " last x node must be l;";
        if (std::adjacent_find(x_nodes.begin(), x_nodes.end(), std::greater_equal<>())
            != x_nodes.end())
            problems += " x nodes must be strictly increasing;";
        if (min_wall_depth > 0 && x_nodes.size() > 2)
        {
            double const limit = std::ldexp(1.0, -min_wall_depth) * (1 + 1e-12);
            if (x_nodes[1] > limit || l - x_nodes[x_nodes.size() - 2] > limit)
                problems += " x grid lacks dyadic refinement to depth "
                            + std::to_string(min_wall_depth) + " at a wall;";
        }
    }
    if (!(tol > 0))
        problems += " tol must be positive;";
    if (max_iter < 1)
        problems += " max_iter must be positive;";
    if (!(relaxation > 0 && relaxation <= 1))
        problems += " relaxation must lie in (0, 1];";
    if (!problems.empty())
        throw DomainError("slab config:" + problems);
}

std::vector<double> make_x_nodes(double l, int n_uniform, int k_min, int k_max, int per_octave)
{
    if (!(l > 0) || n_uniform < 2 || k_min > k_max || per_octave < 1)
        throw DomainError("make_x_nodes: need l > 0, n_uniform >= 2, k_min <= k_max, "
                          "per_octave >= 1");
    std::vector<double> xs;
    for (int k = 0; k < n_uniform; ++k)
        xs.push_back(l * k / (n_uniform - 1));
    for (int k = k_min; k <= k_max; ++k)
    {
        for (int j = 0; j < per_octave; ++j)
        {
            double const x = std::ldexp(std::exp2(-static_cast<double>(j) / per_octave), -k);
            if (x < 0.5 * l)
            {
                xs.push_back(x);
                xs.push_back(l - x);
            }
        }
    }
    std::sort(xs.begin(), xs.end());
    std::vector<double> out;
    for (double x : xs)
        if (out.empty() || x - out.back() > 1e-13 * l)
            out.push_back(x);
    out.front() = 0;
    out.back() = l;
    return out;
}

// --------------------------------------------------------------------------

BoundaryData::BoundaryData(Profile f_in, Profile f_out, std::string name)
    : f_in_(std::move(f_in)), f_out_(std::move(f_out)), name_(std::move(name))
{
    if (!f_in_ || !f_out_)
        throw DomainError("BoundaryData: empty profile");
}

BoundaryData BoundaryData::equilibrium()
{
    return {sqrt_maxwellian, sqrt_maxwellian, "equilibrium"};
}

BoundaryData BoundaryData::zero()
{
    auto z = [](double, double) { return 0.0; };
    return {z, z, "zero"};
}

BoundaryData BoundaryData::temperature_jump(double amplitude)
{
    auto in = [amplitude](double z1, double zr) {
        return amplitude * (z1 * z1 + zr * zr - 1.5) * sqrt_maxwellian(z1, zr);
    };
    return {in, [](double, double) { return 0.0; }, "temperature_jump"};
}

BoundaryData BoundaryData::mixed(double amplitude)
{
    auto in = [amplitude](double z1, double zr) {
        return amplitude * (1 + z1 - 0.5 * (z1 * z1 + zr * zr)) * sqrt_maxwellian(z1, zr);
    };
    auto out = [amplitude](double z1, double zr) {
        return -0.5 * amplitude * sqrt_maxwellian(z1, zr);
    };
    return {in, out, "mixed"};
}

BoundaryData BoundaryData::from_table_files(std::string const& in_path,
                                            std::string const& out_path)
{
    auto tin = read_table2(in_path);
    auto tout = read_table2(out_path);
    return {[tin](double z1, double zr) { return tin(z1, zr); },
            [tout](double z1, double zr) { return tout(z1, zr); },
            "tabulated"};
}

std::vector<double> BoundaryData::sample_incoming(VelocityGrid const& grid) const
{
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        double const z1 = grid.zeta1(i);
        double const zr = grid.zeta_r(i);
        out[i] = z1 > 0 ? f_in_(z1, zr) : f_out_(z1, zr);
    }
    return out;
}

BoundaryData::Regularity BoundaryData::regularity(VelocityGrid const& grid, double p) const
{
    if (!(p > 1))
        throw DomainError("regularity: p must exceed 1");
    Regularity r;
    r.p = p;
    double acc = 0;
    constexpr double step = 1e-5;
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        double const z1 = grid.zeta1(i);
        double const zr = grid.zeta_r(i);
        if (z1 > 0)
        {
            r.sup_in = std::max(r.sup_in, std::abs(f_in_(z1, zr)));
            double const g1 = (f_in_(z1 + step, zr) - f_in_(z1 - step, zr)) / (2 * step);
            double const g2 = (f_in_(z1, zr + step) - f_in_(z1, zr - step)) / (2 * step);
            acc += grid.weight(i) * std::pow(std::hypot(g1, g2), p);
        }
        else
        {
            r.sup_out = std::max(r.sup_out, std::abs(f_out_(z1, zr)));
        }
    }
    r.grad_in_lp = std::pow(acc, 1 / p);
    if (!std::isfinite(r.sup_in) || !std::isfinite(r.sup_out) || !std::isfinite(r.grad_in_lp))
        throw DomainError("boundary data '" + name_ + "' has a non-finite norm");
    return r;
}

// --------------------------------------------------------------------------

std::optional<std::size_t> DistributionField::node_index(double x) const
{
    double const scale = std::max(1.0, std::abs(l()));
    for (std::size_t k = 0; k < x_nodes.size(); ++k)
        if (std::abs(x_nodes[k] - x) <= 1e-14 * scale)
            return k;
    return std::nullopt;
}

std::pair<double, double> exp_linear_weights(double lambda, double h)
{
    if (!(lambda >= 0) || !(h >= 0))
        throw DomainError("exp_linear_weights: lambda and h must be non-negative");
    double const z = lambda * h;
    double phi1, psi;
    if (z < 0.5)
    {
        // psi = sum_{n>=2} (-1)^n (n-1)/n! z^{n-2}; phi1 = sum_{n>=1} (-z)^{n-1}/n!
        psi = 0;
        phi1 = 0;
        double fact = 1;  // n!
        double zp = 1;    // (-z)^{n-2} for psi, (-z)^{n-1} for phi1
        double zq = 1;
        for (int n = 1; n < 30; ++n)
        {
            fact *= n;
            phi1 += zq / fact;
            zq *= -z;
            if (n >= 2)
            {
                psi += (n - 1) * zp / fact;
                zp *= -z;
            }
        }
    }
    else
    {
        double const e = std::exp(-z);
        phi1 = -std::expm1(-z) / z;
        psi = (1 - e * (1 + z)) / (z * z);
    }
    return {h * psi, h * (phi1 - psi)};
}

DistributionField free_streaming(BoundaryData const& bc,
                                 LinearizedOperator const& op,
                                 SlabConfig const& cfg)
{
    cfg.validate();
    auto const s = streaming_coefficients(op, cfg.x_nodes);
    DistributionField f;
    f.grid = op.grid_ptr();
    f.x_nodes = cfg.x_nodes;
    f.values = sweep(op.grid(), s, bc.sample_incoming(op.grid()), nullptr, cfg.x_nodes.size());
    return f;
}

DistributionField mild_step(DistributionField const& f,
                            BoundaryData const& bc,
                            LinearizedOperator const& op,
                            SlabConfig const& cfg)
{
    check_field(f, op);
    if (f.x_nodes != cfg.x_nodes)
        throw DimensionError("mild_step: field and config use different x nodes");
    auto const s = streaming_coefficients(op, cfg.x_nodes);
    Eigen::MatrixXd const kf = f.kf.size() == f.values.size() ? f.kf
                                                               : op.apply_K_columns(f.values);
    DistributionField out;
    out.grid = op.grid_ptr();
    out.x_nodes = cfg.x_nodes;
    out.values = sweep(op.grid(), s, bc.sample_incoming(op.grid()), &kf, cfg.x_nodes.size());
    return out;
}

DistributionField solve(BoundaryData const& bc,
                        LinearizedOperator const& op,
                        SlabConfig const& cfg,
                        DistributionField const* initial)
{
    cfg.validate();
    auto const s = streaming_coefficients(op, cfg.x_nodes);
    auto const incoming = bc.sample_incoming(op.grid());
    std::size_t const nx = cfg.x_nodes.size();

    DistributionField f;
    f.grid = op.grid_ptr();
    f.x_nodes = cfg.x_nodes;
    if (initial)
    {
        check_field(*initial, op);
        if (initial->x_nodes != cfg.x_nodes)
            throw DimensionError("solve: initial field uses different x nodes");
        f.values = initial->values;
    }
    else
    {
        f.values = sweep(op.grid(), s, incoming, nullptr, nx);
    }

    double const r = cfg.relaxation;
    for (int it = 0; it < cfg.max_iter; ++it)
    {
        f.kf = op.apply_K_columns(f.values);
        Eigen::MatrixXd next = sweep(op.grid(), s, incoming, &f.kf, nx);
        if (r != 1.0)
            next = (1 - r) * f.values + r * next;
        double const res = sup_star(next - f.values, op);
        f.values = std::move(next);
        f.residual_history.push_back(res);
        std::size_t const n_hist = f.residual_history.size();
        if (n_hist > 4 && res > f.residual_history[n_hist - 2])
            f.monotonicity_flag = true;
        if (!std::isfinite(res))
            break;
        if (res <= cfg.tol)
        {
            f.converged = true;
            break;
        }
    }
    f.kf = op.apply_K_columns(f.values);
    return f;
}

DistributionField solve_dense(BoundaryData const& bc,
                              LinearizedOperator const& op,
                              SlabConfig const& cfg)
{
    cfg.validate();
    auto const s = streaming_coefficients(op, cfg.x_nodes);
    std::size_t const nx = cfg.x_nodes.size();
    auto const n = static_cast<Eigen::Index>(op.size());
    Eigen::Index const dim = n * static_cast<Eigen::Index>(nx);
    if (dim > 20000)
        throw DomainError("solve_dense: system too large for a dense solve");

    std::vector<double> const zero_in(op.size(), 0.0);
    Eigen::MatrixXd const source = sweep(op.grid(), s, bc.sample_incoming(op.grid()),
                                         nullptr, nx);
    Eigen::MatrixXd A(dim, dim);
    Eigen::MatrixXd unit = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(nx));
    for (Eigen::Index col = 0; col < dim; ++col)
    {
        unit(col % n, col / n) = 1;
        Eigen::MatrixXd const kf = op.apply_K_columns(unit);
        Eigen::MatrixXd const t = sweep(op.grid(), s, zero_in, &kf, nx);
        A.col(col) = Eigen::Map<Eigen::VectorXd const>(t.data(), dim);
        unit(col % n, col / n) = 0;
    }
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(dim, dim) - A;
    Eigen::VectorXd const rhs = Eigen::Map<Eigen::VectorXd const>(source.data(), dim);
    Eigen::VectorXd const sol = system.partialPivLu().solve(rhs);

    DistributionField f;
    f.grid = op.grid_ptr();
    f.x_nodes = cfg.x_nodes;
    f.values = Eigen::Map<Eigen::MatrixXd const>(sol.data(), n, static_cast<Eigen::Index>(nx));
    f.kf = op.apply_K_columns(f.values);
    f.converged = true;
    return f;
}

double sup_star_distance(DistributionField const& f,
                         DistributionField const& g,
                         LinearizedOperator const& op)
{
    check_field(f, op);
    check_field(g, op);
    if (f.values.cols() != g.values.cols())
        throw DimensionError("sup_star_distance: fields have different x grids");
    return sup_star(f.values - g.values, op);
}

double triple_norm(DistributionField const& f, LinearizedOperator const& op)
{
    check_field(f, op);
    return sup_star(f.values, op);
}

double sup_norm(DistributionField const& f) { return f.values.cwiseAbs().maxCoeff(); }

std::vector<double> kf_at(DistributionField const& f, double x)
{
    if (f.kf.size() != f.values.size())
        throw DomainError("kf_at: field carries no K f");
    if (!(x >= 0 && x <= f.l()))
        throw DomainError("kf_at: x outside [0, l]");
    std::size_t const c = cell_of(f.x_nodes, x);
    double const t = (x - f.x_nodes[c]) / (f.x_nodes[c + 1] - f.x_nodes[c]);
    Eigen::VectorXd const v = (1 - t) * f.kf.col(static_cast<Eigen::Index>(c))
                              + t * f.kf.col(static_cast<Eigen::Index>(c) + 1);
    return {v.data(), v.data() + v.size()};
}

std::vector<double> evaluate_at(DistributionField const& f,
                                BoundaryData const& bc,
                                LinearizedOperator const& op,
                                double x)
{
    check_field(f, op);
    (void)bc;
    if (f.kf.size() != f.values.size())
        throw DomainError("evaluate_at: field carries no K f");
    if (!(x >= 0 && x <= f.l()))
        throw DomainError("evaluate_at: x outside [0, l]");
    VelocityGrid const& grid = op.grid();
    auto const nu = op.nu();
    std::size_t const c = cell_of(f.x_nodes, x);
    double const x0 = f.x_nodes[c];
    double const x1 = f.x_nodes[c + 1];
    auto const kx = kf_at(f, x);
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        double const mu = std::abs(grid.zeta1(i));
        double const lambda = nu[i] / mu;
        auto const ii = static_cast<Eigen::Index>(i);
        if (grid.zeta1(i) > 0)
        {
            double const h = x - x0;
            auto [a, b] = exp_linear_weights(lambda, h);
            out[i] = std::exp(-lambda * h) * f.values(ii, static_cast<Eigen::Index>(c))
                     + (a * f.kf(ii, static_cast<Eigen::Index>(c)) + b * kx[i]) / mu;
        }
        else
        {
            double const h = x1 - x;
            auto [a, b] = exp_linear_weights(lambda, h);
            out[i] = std::exp(-lambda * h) * f.values(ii, static_cast<Eigen::Index>(c) + 1)
                     + (a * f.kf(ii, static_cast<Eigen::Index>(c) + 1) + b * kx[i]) / mu;
        }
    }
    return out;
}

HolderReport holder_probe(DistributionField const& f,
                          std::vector<std::pair<double, double>> const& pairs,
                          double beta)
{
    HolderReport rep;
    rep.beta = beta;
    double scale = f.kf.size() ? f.kf.cwiseAbs().maxCoeff() : 0.0;
    std::vector<double> lx, ly;
    for (auto const& [x, s] : pairs)
    {
        auto const a = kf_at(f, x);
        auto const b = kf_at(f, s);
        double diff = 0;
        for (std::size_t i = 0; i < a.size(); ++i)
            diff = std::max(diff, std::abs(a[i] - b[i]));
        rep.separations.push_back(std::abs(x - s));
        rep.differences.push_back(diff);
        if (diff > 1e-12 * scale && x != s)
        {
            lx.push_back(std::log(std::abs(x - s)));
            ly.push_back(std::log(diff));
        }
    }
    if (lx.size() < 2)
    {
        rep.exact_constant = true;
        rep.meets_beta = true;
        return rep;
    }
    double const n = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < lx.size(); ++k)
    {
        mx += lx[k] / n;
        my += ly[k] / n;
    }
    double sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < lx.size(); ++k)
    {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
    }
    rep.slope = sxy / sxx;
    rep.constant = std::exp(my - rep.slope * mx);
    rep.meets_beta = rep.slope >= beta;
    return rep;
}

double lemma_theta_ratio(DistributionField const& f,
                         LinearizedOperator const& op,
                         std::size_t ix,
                         double theta)
{
    check_field(f, op);
    if (ix >= f.n_x())
        throw DomainError("lemma_theta_ratio: x index out of range");
    VelocityGrid const& grid = op.grid();
    auto const col = f.at(ix);
    auto const kf = apply_K(op, col);
    auto const nu = op.nu();
    double sum = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        double const z1 = std::abs(grid.zeta1(i));
        sum += grid.weight(i) * std::pow(z1, -(2 - 2 * theta)) * std::pow(nu[i], -2 * theta)
               * kf[i] * kf[i];
    }
    double const den = norm_star(col, op);
    return den > 0 ? sum / (den * den) : 0.0;
}

// --------------------------------------------------------------------------

namespace
{
constexpr char ck_magic[8] = {'S', 'L', 'K', 'C', 'K', '0', '0', '1'};
}

void save_checkpoint(DistributionField const& f, std::filesystem::path const& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("save_checkpoint: cannot open " + path.string());
    auto put = [&out](auto v) { out.write(reinterpret_cast<char const*>(&v), sizeof v); };
    out.write(ck_magic, 8);
    put(static_cast<std::uint64_t>(f.grid->hash()));
    put(static_cast<std::uint64_t>(f.n_x()));
    put(static_cast<std::uint64_t>(f.values.rows()));
    for (double x : f.x_nodes)
        put(x);
    out.write(reinterpret_cast<char const*>(f.values.data()),
              static_cast<std::streamsize>(sizeof(double) * f.values.size()));
    if (!out)
        throw IoError("save_checkpoint: write failed for " + path.string());
}

std::optional<DistributionField> load_checkpoint(std::filesystem::path const& path,
                                                 std::shared_ptr<VelocityGrid const> grid)
{
    std::ifstream in(path, std::ios::binary);
    if (!in || !grid)
        return std::nullopt;
    char magic[8];
    std::uint64_t hash = 0, nx = 0, nv = 0;
    auto get = [&in](auto& v) {
        return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
    };
    if (!in.read(magic, 8) || std::memcmp(magic, ck_magic, 8) != 0 || !get(hash) || !get(nx)
        || !get(nv))
        return std::nullopt;
    if (hash != grid->hash() || nv != grid->size() || nx < 2)
        return std::nullopt;
    DistributionField f;
    f.grid = std::move(grid);
    f.x_nodes.resize(nx);
    for (auto& x : f.x_nodes)
        if (!get(x))
            return std::nullopt;
    f.values.resize(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(nx));
    if (!in.read(reinterpret_cast<char*>(f.values.data()),
                 static_cast<std::streamsize>(sizeof(double) * f.values.size())))
        return std::nullopt;
    return f;
}

}  // namespace slabkin

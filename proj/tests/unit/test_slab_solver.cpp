#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "slabkin/errors.hpp"
#include "slabkin/slab_solver.hpp"

using namespace slabkin;

namespace
{
std::shared_ptr<VelocityGrid const> grid()
{
    VelocityGridParams p;
    p.n_zeta1 = 16;
    p.n_zeta_r = 8;
    p.zeta_max = 5;
    p.zeta1_min = 1e-2;
    p.eps_grid = 1e-2;
    return std::make_shared<VelocityGrid const>(p);
}

LinearizedOperator const& op()
{
    static LinearizedOperator const o = assemble_operator(CrossSectionModel::hard_sphere(), grid());
    return o;
}

SlabConfig slab(int n_uniform = 12)
{
    SlabConfig c;
    c.l = 1;
    c.x_nodes = make_x_nodes(1.0, n_uniform, 3, 8);
    c.tol = 1e-12;
    c.max_iter = 2000;
    c.min_wall_depth = 0;
    return c;
}
}  // namespace

TEST(ExpLinearWeights, AgainstQuadrature)
{
    using boost::math::quadrature::gauss_kronrod;
    for (double h : {1e-3, 0.1, 1.0})
        for (double z : {0.0, 1e-12, 1e-6, 0.3, 0.49, 0.51, 2.0, 40.0, 900.0})
        {
            double const lambda = z / h;
            auto [a, b] = exp_linear_weights(lambda, h);
            auto fa = [&](double t) { return std::exp(-lambda * (h - t)) * (1 - t / h); };
            auto fb = [&](double t) { return std::exp(-lambda * (h - t)) * t / h; };
            double const ra = gauss_kronrod<double, 61>::integrate(fa, 0, h, 20, 1e-15);
            double const rb = gauss_kronrod<double, 61>::integrate(fb, 0, h, 20, 1e-15);
            EXPECT_NEAR(a, ra, 1e-14 * h + 1e-12 * ra) << "z=" << z << " h=" << h;
            EXPECT_NEAR(b, rb, 1e-14 * h + 1e-12 * rb) << "z=" << z << " h=" << h;
        }
    EXPECT_THROW(exp_linear_weights(-1, 1), DomainError);
}

TEST(XNodes, DyadicUnion)
{
    auto const x = make_x_nodes(1.0, 5, 2, 6);
    EXPECT_EQ(x.front(), 0.0);
    EXPECT_EQ(x.back(), 1.0);
    for (std::size_t k = 1; k < x.size(); ++k)
        EXPECT_LT(x[k - 1], x[k]);
    for (int k = 2; k <= 6; ++k)
    {
        double const d = std::ldexp(1.0, -k);
        EXPECT_TRUE(std::find(x.begin(), x.end(), d) != x.end()) << k;
        EXPECT_TRUE(std::find(x.begin(), x.end(), 1.0 - d) != x.end()) << k;
    }
    EXPECT_GT(make_x_nodes(1.0, 5, 2, 6, 3).size(), x.size());
}

TEST(SlabConfig, Validation)
{
    auto c = slab();
    EXPECT_NO_THROW(c.validate());
    c.min_wall_depth = 12;
    EXPECT_THROW(c.validate(), DomainError);
    c = slab();
    c.relaxation = 0;
    EXPECT_THROW(c.validate(), DomainError);
    c = slab();
    c.x_nodes = {0.0, 0.5, 0.4, 1.0};
    EXPECT_THROW(c.validate(), DomainError);
}

TEST(Boundary, Presets)
{
    auto const eq = BoundaryData::equilibrium();
    double const m = std::pow(std::numbers::pi, -0.75) * std::exp(-0.5 * (0.25 + 1.0));
    EXPECT_NEAR(eq.f_in(0.5, 1.0), m, 1e-15);
    EXPECT_NEAR(eq.f_out(-0.5, 1.0), m, 1e-15);
    auto const tj = BoundaryData::temperature_jump(2.0);
    EXPECT_NEAR(tj.f_in(0.5, 1.0), 2.0 * (1.25 - 1.5) * m, 1e-15);
    EXPECT_EQ(tj.f_out(-0.5, 1.0), 0.0);
    auto const mx = BoundaryData::mixed(1.0);
    EXPECT_NEAR(mx.f_in(0.5, 1.0), (1 + 0.5 - 0.625) * m, 1e-15);
    EXPECT_NEAR(mx.f_out(-0.5, 1.0), -0.5 * m, 1e-15);
    auto const r = BoundaryData::zero().regularity(*grid());
    EXPECT_EQ(r.sup_in, 0.0);
    EXPECT_EQ(r.grad_in_lp, 0.0);
    EXPECT_GT(tj.regularity(*grid()).grad_in_lp, 0.0);
}

TEST(Boundary, TableFiles)
{
    auto const dir = std::filesystem::temp_directory_path();
    auto const pin = dir / "slabkin_in.tbl", pout = dir / "slabkin_out.tbl";
    {
        std::ofstream a(pin), b(pout);
        for (double z1 : {-6.0, 0.0, 6.0})
            for (double zr : {0.0, 6.0})
            {
                a << z1 << " " << zr << " " << z1 + 2 * zr << "\n";
                b << z1 << " " << zr << " " << 1.0 << "\n";
            }
    }
    auto const bc = BoundaryData::from_table_files(pin.string(), pout.string());
    EXPECT_NEAR(bc.f_in(0.5, 1.5), 3.5, 1e-14);
    EXPECT_NEAR(bc.f_out(-1.0, 2.0), 1.0, 1e-14);
    std::filesystem::remove(pin);
    std::filesystem::remove(pout);
    EXPECT_THROW(BoundaryData::from_table_files(pin.string(), pout.string()), IoError);
}

TEST(Solver, FreeStreamingIsExact)
{
    auto const bc = BoundaryData::temperature_jump();
    auto const cfg = slab();
    auto const f = free_streaming(bc, op(), cfg);
    auto const& g = op().grid();
    for (std::size_t i = 0; i < g.size(); i += 7)
        for (std::size_t k = 0; k < f.n_x(); ++k)
        {
            double const z1 = g.zeta1(i);
            double const x = f.x_nodes[k];
            double const dist = z1 > 0 ? x : 1 - x;
            double const in = z1 > 0 ? bc.f_in(z1, g.zeta_r(i)) : bc.f_out(z1, g.zeta_r(i));
            double const ref = std::exp(-op().nu()[i] * dist / std::abs(z1)) * in;
            EXPECT_NEAR(f.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)), ref,
                        1e-13);
        }
}

TEST(Solver, EquilibriumIsFixedPoint)
{
    auto const f = solve(BoundaryData::equilibrium(), op(), slab());
    ASSERT_TRUE(f.converged);
    auto const w12 = sample_sqrt_maxwellian(op().grid());
    double dev = 0;
    for (std::size_t k = 0; k < f.n_x(); ++k)
        for (std::size_t i = 0; i < w12.size(); ++i)
            dev = std::max(dev, std::abs(f.values(static_cast<Eigen::Index>(i),
                                                  static_cast<Eigen::Index>(k))
                                         - w12[i]));
    EXPECT_LT(dev, 1e-10);
}

TEST(Solver, MatchesDenseSolve)
{
    auto const bc = BoundaryData::mixed();
    auto cfg = slab(6);
    auto const a = solve(bc, op(), cfg);
    auto const b = solve_dense(bc, op(), cfg);
    ASSERT_TRUE(a.converged);
    EXPECT_LT(sup_star_distance(a, b, op()), 1e-10);
    EXPECT_FALSE(a.monotonicity_flag);
}

TEST(Solver, ConvergedFieldIsFixedPointOfMildStep)
{
    auto const bc = BoundaryData::temperature_jump();
    auto const cfg = slab();
    auto const f = solve(bc, op(), cfg);
    auto const t = mild_step(f, bc, op(), cfg);
    EXPECT_LT(sup_star_distance(f, t, op()), 1e-10);
}

TEST(Solver, MildStepAgainstAdaptiveCellIntegral)
{
    // T(f) at every node from the Duhamel integral with K f linear in x,
    // integrated by Gauss-Kronrod instead of the closed-form cell weights.
    using boost::math::quadrature::gauss_kronrod;
    auto const bc = BoundaryData::mixed();
    auto const cfg = slab();
    auto f = free_streaming(bc, op(), cfg);
    f.kf = op().apply_K_columns(f.values);
    auto const t = mild_step(f, bc, op(), cfg);
    auto const& g = op().grid();
    for (std::size_t i = 3; i < g.size(); i += 11)
    {
        double const z1 = g.zeta1(i);
        double const mu = std::abs(z1);
        double const lam = op().nu()[i] / mu;
        for (std::size_t k : {std::size_t{2}, f.n_x() / 2, f.n_x() - 3})
        {
            double const x = f.x_nodes[k];
            double ref;
            if (z1 > 0)
            {
                auto integrand = [&](double s) { return std::exp(-lam * (x - s)) * kf_at(f, s)[i]; };
                ref = std::exp(-lam * x) * bc.f_in(z1, g.zeta_r(i));
                for (std::size_t c = 0; c < k; ++c)
                    ref += gauss_kronrod<double, 31>::integrate(integrand, f.x_nodes[c],
                                                                f.x_nodes[c + 1], 10, 1e-14)
                           / mu;
            }
            else
            {
                auto integrand = [&](double s) { return std::exp(-lam * (s - x)) * kf_at(f, s)[i]; };
                ref = std::exp(-lam * (1 - x)) * bc.f_out(z1, g.zeta_r(i));
                for (std::size_t c = k; c + 1 < f.n_x(); ++c)
                    ref += gauss_kronrod<double, 31>::integrate(integrand, f.x_nodes[c],
                                                                f.x_nodes[c + 1], 10, 1e-14)
                           / mu;
            }
            EXPECT_NEAR(t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)), ref,
                        1e-11 * std::max(1.0, std::abs(ref)));
        }
    }
}

TEST(Solver, NonConvergenceIsReported)
{
    auto cfg = slab();
    cfg.max_iter = 3;
    auto const f = solve(BoundaryData::temperature_jump(), op(), cfg);
    EXPECT_FALSE(f.converged);
    EXPECT_EQ(f.residual_history.size(), 3u);
}

TEST(Solver, EvaluateAtNodeMatchesStoredValue)
{
    auto const bc = BoundaryData::temperature_jump();
    auto const cfg = slab();
    auto const f = solve(bc, op(), cfg);
    for (std::size_t k : {std::size_t{1}, f.n_x() / 2})
    {
        auto const v = evaluate_at(f, bc, op(), f.x_nodes[k]);
        for (std::size_t i = 0; i < v.size(); ++i)
            EXPECT_NEAR(v[i], f.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)),
                        1e-9);
    }
    EXPECT_THROW(evaluate_at(f, bc, op(), 1.5), DomainError);
}

TEST(Holder, SyntheticSquareRoot)
{
    DistributionField f;
    f.grid = grid();
    for (int k = 0; k <= 40; ++k)
        f.x_nodes.push_back(k == 0 ? 0.0 : std::ldexp(1.0, -40 + k));
    f.values = Eigen::MatrixXd::Zero(2, static_cast<Eigen::Index>(f.x_nodes.size()));
    f.kf = f.values;
    for (std::size_t k = 0; k < f.x_nodes.size(); ++k)
        f.kf(0, static_cast<Eigen::Index>(k)) = std::sqrt(f.x_nodes[k]);
    std::vector<std::pair<double, double>> pairs;
    for (int k = 2; k <= 12; ++k)
        pairs.emplace_back(0.0, std::ldexp(1.0, -k));
    auto const rep = holder_probe(f, pairs, 0.3);
    EXPECT_NEAR(rep.slope, 0.5, 1e-12);
    EXPECT_TRUE(rep.meets_beta);

    f.kf.setConstant(2.0);
    auto const flat = holder_probe(f, pairs, 0.3);
    EXPECT_TRUE(flat.exact_constant);
}

TEST(Solver, LemmaRatioFinite)
{
    auto const f = solve(BoundaryData::temperature_jump(), op(), slab());
    double const r = lemma_theta_ratio(f, op(), f.n_x() / 2, 0.8);
    EXPECT_TRUE(std::isfinite(r));
    EXPECT_GT(r, 0.0);
}

TEST(Checkpoint, RoundTrip)
{
    auto const f = solve(BoundaryData::mixed(), op(), slab());
    auto const path = std::filesystem::temp_directory_path() / "slabkin_ck.bin";
    save_checkpoint(f, path);
    auto const back = load_checkpoint(path, op().grid_ptr());
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(back->x_nodes, f.x_nodes);
    EXPECT_EQ((back->values - f.values).cwiseAbs().maxCoeff(), 0.0);
    VelocityGridParams p = op().grid().params();
    p.n_zeta_r = 6;
    EXPECT_FALSE(load_checkpoint(path, std::make_shared<VelocityGrid const>(p)).has_value());
    std::filesystem::remove(path);
}

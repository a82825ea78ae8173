#include "slabkin/cross_section.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "slabkin/errors.hpp"
#include "slabkin/quadrature.hpp"

namespace slabkin
{
namespace
{
constexpr double half_pi = std::numbers::pi / 2;

double cos_sin(double theta) { return std::cos(theta) * std::sin(theta); }

double integrate_beta(CrossSectionModel::AngularFactor const& beta)
{
    // beta may be a piecewise-linear table, so use many panels.
    constexpr int panels = 64;
    auto rule = gauss_legendre(10, 0.0, 1.0);
    double sum = 0;
    double const h = half_pi / panels;
    for (int p = 0; p < panels; ++p)
    {
        for (std::size_t k = 0; k < rule.nodes.size(); ++k)
        {
            sum += h * rule.weights[k] * beta((p + rule.nodes[k]) * h);
        }
    }
    return sum;
}
}  // namespace

CrossSectionModel CrossSectionModel::hard_sphere()
{
    return CrossSectionModel(1.0, cos_sin, 1.0, "hard_sphere");
}

CrossSectionModel::CrossSectionModel(double gamma,
                                     AngularFactor beta,
                                     double cutoff_const,
                                     std::string name)
    : gamma_(gamma)
    , beta_(std::move(beta))
    , cutoff_const_(cutoff_const)
    , name_(std::move(name))
{
    if (!(gamma_ > 0 && gamma_ <= 1))
    {
        throw DomainError("cross section: gamma must lie in (0, 1], got "
                          + std::to_string(gamma_));
    }
    if (!(cutoff_const_ > 0))
    {
        throw DomainError("cross section: cutoff constant must be positive");
    }
    if (!beta_)
    {
        throw DomainError("cross section: empty angular factor");
    }
    beta_integral_ = integrate_beta(beta_);
}

CrossSectionModel CrossSectionModel::tabulated(double gamma,
                                               std::vector<double> theta,
                                               std::vector<double> beta,
                                               double cutoff_const)
{
    if (theta.size() != beta.size() || theta.size() < 2)
    {
        throw DomainError("beta table: need at least two (theta, beta) rows");
    }
    if (!std::is_sorted(theta.begin(), theta.end())
        || std::adjacent_find(theta.begin(), theta.end()) != theta.end())
    {
        throw DomainError("beta table: theta must be strictly increasing");
    }
    if (theta.front() > 1e-12 || theta.back() < half_pi - 1e-9)
    {
        throw DomainError("beta table: theta must cover [0, pi/2]");
    }
    if (std::any_of(beta.begin(), beta.end(), [](double b) { return b < 0; }))
    {
        throw DomainError("beta table: negative beta value");
    }
    auto interp = [theta = std::move(theta), beta = std::move(beta)](double t) {
        if (t <= theta.front())
            return beta.front();
        if (t >= theta.back())
            return beta.back();
        auto it = std::upper_bound(theta.begin(), theta.end(), t);
        auto k = static_cast<std::size_t>(it - theta.begin()) - 1;
        double const s = (t - theta[k]) / (theta[k + 1] - theta[k]);
        return (1 - s) * beta[k] + s * beta[k + 1];
    };
    return CrossSectionModel(gamma, interp, cutoff_const, "tabulated");
}

CrossSectionModel CrossSectionModel::from_table_file(std::string const& path,
                                                     double gamma,
                                                     double cutoff_const)
{
    std::ifstream in(path);
    if (!in)
    {
        throw IoError("cannot open beta table '" + path + "'");
    }
    std::vector<double> theta, beta;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ss(line);
        double t, b;
        if (!(ss >> t))
            continue;
        if (!(ss >> b))
        {
            throw DomainError("beta table '" + path + "' line "
                              + std::to_string(line_no)
                              + ": expected two columns");
        }
        theta.push_back(t);
        beta.push_back(b);
    }
    return tabulated(gamma, std::move(theta), std::move(beta), cutoff_const);
}

double CrossSectionModel::beta_per_solid_angle(double theta) const
{
    constexpr double theta_floor = 1e-8;
    double const t = std::max(theta, theta_floor);
    return beta_(t) / std::sin(t);
}

void CrossSectionModel::validate() const
{
    auto report = check_grad_cutoff(*this);
    if (!report.satisfied)
    {
        throw DomainError("cross section '" + name_
                          + "' violates beta <= C cos sin (max ratio "
                          + std::to_string(report.max_ratio) + " at theta "
                          + std::to_string(report.worst_theta) + ")");
    }
}

std::vector<double> CrossSectionModel::fingerprint(int n) const
{
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n) + 2);
    out.push_back(gamma_);
    out.push_back(cutoff_const_);
    for (int k = 0; k < n; ++k)
    {
        out.push_back(beta_(half_pi * (k + 0.5) / n));
    }
    return out;
}

double evaluate_B(CrossSectionModel const& model, double v_rel, double theta)
{
    if (!(v_rel >= 0))
    {
        throw DomainError("evaluate_B: relative speed must be >= 0");
    }
    if (!(theta >= 0 && theta <= half_pi))
    {
        throw DomainError("evaluate_B: theta must lie in [0, pi/2]");
    }
    if (v_rel == 0)
        return 0;
    return std::pow(v_rel, model.gamma()) * model.beta(theta);
}

CutoffReport check_grad_cutoff(CrossSectionModel const& model, int n_samples)
{
    if (n_samples < 2)
    {
        throw DomainError("check_grad_cutoff: need at least two samples");
    }
    CutoffReport report;
    report.satisfied = true;
    double const c = model.cutoff_const();
    for (int k = 0; k < n_samples; ++k)
    {
        double const theta = half_pi * k / (n_samples - 1);
        double const b = model.beta(theta);
        // Rounding slack: equality is allowed, and cos(pi/2) is not 0.
        double const bound = c * cos_sin(theta) * (1 + 1e-12) + 1e-14;
        if (b < 0 || b > bound)
            report.satisfied = false;
        if (k > 0 && k < n_samples - 1)
        {
            double const ratio = b / cos_sin(theta);
            if (ratio > report.max_ratio)
            {
                report.max_ratio = ratio;
                report.worst_theta = theta;
            }
        }
    }
    return report;
}

}  // namespace slabkin

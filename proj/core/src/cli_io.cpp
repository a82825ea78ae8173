#include "slabkin/cli_io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "slabkin/errors.hpp"
#include "slabkin/special_functions.hpp"

namespace slabkin
{
namespace
{
using json = nlohmann::ordered_json;

std::string trim(std::string s)
{
    auto const b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    auto const e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(std::string const& v)
{
    std::size_t used = 0;
    double const d = std::stod(v, &used);
    if (used != v.size())
        throw std::invalid_argument("trailing characters");
    return d;
}

long long to_integer(std::string const& v)
{
    std::size_t used = 0;
    long long const n = std::stoll(v, &used);
    if (used != v.size())
        throw std::invalid_argument("trailing characters");
    return n;
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

using Setter = std::function<void(RunConfig&, std::string const&)>;

std::map<std::string, Setter> const& setters()
{
    static std::map<std::string, Setter> const table = [] {
        std::map<std::string, Setter> m;
        auto real = [&m](char const* key, double RunConfig::*field) {
            m[key] = [field](RunConfig& c, std::string const& v) { c.*field = to_double(v); };
        };
        auto integer = [&m](char const* key, int RunConfig::*field) {
            m[key] = [field](RunConfig& c, std::string const& v) {
                c.*field = static_cast<int>(to_integer(v));
            };
        };
        auto text = [&m](char const* key, std::string RunConfig::*field) {
            m[key] = [field](RunConfig& c, std::string const& v) { c.*field = v; };
        };
        text("cross_section", &RunConfig::cross_section);
        text("beta_table", &RunConfig::beta_table);
        real("gamma", &RunConfig::gamma);
        real("cutoff_const", &RunConfig::cutoff_const);
        m["n_zeta1"] = [](RunConfig& c, std::string const& v) {
            c.grid.n_zeta1 = static_cast<int>(to_integer(v));
        };
        m["n_zeta_r"] = [](RunConfig& c, std::string const& v) {
            c.grid.n_zeta_r = static_cast<int>(to_integer(v));
        };
        m["azimuth_order"] = [](RunConfig& c, std::string const& v) {
            c.grid.azimuth_order = static_cast<int>(to_integer(v));
        };
        m["zeta_max"] = [](RunConfig& c, std::string const& v) { c.grid.zeta_max = to_double(v); };
        m["zeta1_min"] = [](RunConfig& c, std::string const& v) { c.grid.zeta1_min = to_double(v); };
        m["zeta1_scale"] = [](RunConfig& c, std::string const& v) {
            c.grid.zeta1_scale = to_double(v);
        };
        m["eps_grid"] = [](RunConfig& c, std::string const& v) { c.grid.eps_grid = to_double(v); };
        real("assembly_tol", &RunConfig::assembly_tol);
        real("l", &RunConfig::l);
        integer("n_x_uniform", &RunConfig::n_x_uniform);
        integer("dyadic_k_min", &RunConfig::dyadic_k_min);
        integer("dyadic_k_max", &RunConfig::dyadic_k_max);
        integer("dyadic_per_octave", &RunConfig::dyadic_per_octave);
        integer("min_wall_depth", &RunConfig::min_wall_depth);
        real("tol", &RunConfig::tol);
        integer("max_iter", &RunConfig::max_iter);
        real("relaxation", &RunConfig::relaxation);
        text("boundary", &RunConfig::boundary);
        real("boundary_amplitude", &RunConfig::boundary_amplitude);
        text("boundary_in_table", &RunConfig::boundary_in_table);
        text("boundary_out_table", &RunConfig::boundary_out_table);
        m["moments"] = [](RunConfig& c, std::string const& v) { c.moments = parse_moment_list(v); };
        integer("fit_k_min", &RunConfig::fit_k_min);
        integer("fit_k_max", &RunConfig::fit_k_max);
        real("lp_exponent", &RunConfig::lp_exponent);
        real("holder_beta", &RunConfig::holder_beta);
        m["seed"] = [](RunConfig& c, std::string const& v) {
            long long const n = to_integer(v);
            if (n < 0)
                throw std::invalid_argument("negative seed");
            c.seed = static_cast<std::uint64_t>(n);
        };
        text("output_dir", &RunConfig::output_dir);
        return m;
    }();
    return table;
}

std::vector<std::string> violations(RunConfig const& c)
{
    std::vector<std::string> v;
    auto need = [&v](bool ok, std::string const& msg) {
        if (!ok)
            v.push_back(msg);
    };
    need(c.cross_section == "hard_sphere" || c.cross_section == "tabulated",
         "cross_section must be 'hard_sphere' or 'tabulated'");
    need(c.cross_section != "tabulated" || !c.beta_table.empty(),
         "cross_section = tabulated needs beta_table");
    need(c.gamma > 0 && c.gamma <= 1, "gamma must lie in (0, 1]");
    need(c.cutoff_const > 0, "cutoff_const must be positive");
    need(c.grid.n_zeta1 >= 6 && c.grid.n_zeta1 % 2 == 0, "n_zeta1 must be even and at least 6");
    need(c.grid.n_zeta_r > 0, "n_zeta_r must be positive");
    need(c.grid.azimuth_order > 0, "azimuth_order must be positive");
    need(c.grid.zeta_max > 0, "zeta_max must be positive");
    need(c.grid.zeta1_min > 0 && c.grid.zeta1_min < c.grid.zeta_max,
         "zeta1_min must lie in (0, zeta_max)");
    need(c.grid.zeta1_scale > 0, "zeta1_scale must be positive");
    need(c.grid.eps_grid > 0, "eps_grid must be positive");
    need(c.assembly_tol > 0, "assembly_tol must be positive");
    need(c.l > 0, "l must be positive");
    need(c.n_x_uniform >= 2, "n_x_uniform must be at least 2");
    need(c.dyadic_k_min > 0 && c.dyadic_k_min <= c.dyadic_k_max,
         "dyadic_k_min must be positive and not above dyadic_k_max");
    need(c.dyadic_per_octave > 0, "dyadic_per_octave must be positive");
    need(c.min_wall_depth >= 0, "min_wall_depth must be non-negative");
    need(c.tol > 0, "tol must be positive");
    need(c.max_iter > 0, "max_iter must be positive");
    need(c.relaxation > 0 && c.relaxation <= 1, "relaxation must lie in (0, 1]");
    static std::vector<std::string> const presets{"temperature_jump", "mixed", "equilibrium",
                                                  "zero", "tabulated"};
    need(std::find(presets.begin(), presets.end(), c.boundary) != presets.end(),
         "boundary must be one of temperature_jump, mixed, equilibrium, zero, tabulated");
    need(c.boundary != "tabulated"
             || (!c.boundary_in_table.empty() && !c.boundary_out_table.empty()),
         "boundary = tabulated needs boundary_in_table and boundary_out_table");
    for (auto const& m : c.moments)
        need(m.transverse_even(),
             "moment (" + m.label()
                 + ") has odd alpha_2 + alpha_3; it vanishes for axisymmetric data");
    need(c.fit_k_min > 0 && c.fit_k_min < c.fit_k_max, "fit_k_min must be below fit_k_max");
    need(c.fit_k_max - c.fit_k_min >= 5, "the fit window needs at least six dyadic points");
    need(c.lp_exponent > 1, "lp_exponent must exceed 1");
    need(c.holder_beta > 0, "holder_beta must be positive");
    need(!c.output_dir.empty(), "output_dir must not be empty");
    return v;
}

std::string hex(std::uint64_t v)
{
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

json number_list(std::vector<double> const& v)
{
    json a = json::array();
    for (double x : v)
        a.push_back(x);
    return a;
}
}  // namespace

// --------------------------------------------------------------------------

std::vector<MomentIndex> parse_moment_list(std::string const& text)
{
    std::vector<MomentIndex> out;
    std::string cleaned = text;
    std::replace(cleaned.begin(), cleaned.end(), ';', ' ');
    std::istringstream in(cleaned);
    std::string tok;
    while (in >> tok)
    {
        std::vector<int> digits;
        if (tok.find(',') != std::string::npos)
        {
            std::istringstream parts(tok);
            std::string p;
            while (std::getline(parts, p, ','))
                digits.push_back(static_cast<int>(to_integer(trim(p))));
        }
        else
        {
            for (char ch : tok)
            {
                if (ch < '0' || ch > '9')
                    throw std::invalid_argument("bad moment index '" + tok + "'");
                digits.push_back(ch - '0');
            }
        }
        if (digits.size() != 3)
            throw std::invalid_argument("moment index '" + tok + "' needs three entries");
        out.emplace_back(digits[0], digits[1], digits[2]);
    }
    return out;
}

RunConfig parse_config(std::string const& text)
{
    RunConfig cfg;
    std::vector<std::string> errors;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        auto const eq = line.find('=');
        std::string const where = "line " + std::to_string(line_no) + ": ";
        if (eq == std::string::npos)
        {
            errors.push_back(where + "expected 'key = value'");
            continue;
        }
        std::string const key = trim(line.substr(0, eq));
        std::string const value = trim(line.substr(eq + 1));
        auto const it = setters().find(key);
        if (it == setters().end())
        {
            errors.push_back(where + "unknown key '" + key + "'");
            continue;
        }
        if (!seen.insert(key).second)
        {
            errors.push_back(where + "duplicate key '" + key + "'");
            continue;
        }
        try
        {
            it->second(cfg, value);
            cfg.echo.emplace_back(key, value);
        }
        catch (std::exception const& e)
        {
            errors.push_back(where + "bad value '" + value + "' for '" + key + "' (" + e.what()
                             + ")");
        }
    }
    if (errors.empty())
        for (auto const& v : violations(cfg))
            errors.push_back(v);
    if (!errors.empty())
    {
        std::string msg = "invalid configuration:";
        for (auto const& e : errors)
            msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return cfg;
}

RunConfig load_config(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    try
    {
        return parse_config(s.str());
    }
    catch (ConfigError const& e)
    {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

CrossSectionModel RunConfig::make_model() const
{
    if (cross_section == "hard_sphere")
        return CrossSectionModel::hard_sphere();
    return CrossSectionModel::from_table_file(beta_table, gamma, cutoff_const);
}

SlabConfig RunConfig::make_slab() const
{
    SlabConfig s;
    s.l = l;
    s.x_nodes = make_x_nodes(l, n_x_uniform, dyadic_k_min, dyadic_k_max, dyadic_per_octave);
    s.tol = tol;
    s.max_iter = max_iter;
    s.relaxation = relaxation;
    s.min_wall_depth = min_wall_depth;
    return s;
}

BoundaryData RunConfig::make_boundary() const
{
    if (boundary == "temperature_jump")
        return BoundaryData::temperature_jump(boundary_amplitude);
    if (boundary == "mixed")
        return BoundaryData::mixed(boundary_amplitude);
    if (boundary == "equilibrium")
        return BoundaryData::equilibrium();
    if (boundary == "zero")
        return BoundaryData::zero();
    return BoundaryData::from_table_files(boundary_in_table, boundary_out_table);
}

// --------------------------------------------------------------------------

RunResults run_experiment(RunConfig const& cfg)
{
    RunResults res;
    res.config = cfg;
    auto fail = [&res](std::string code, std::string const& msg) {
        res.status = code == "config_error" ? "config_error" : "failed";
        res.error_code = std::move(code);
        res.error_message = msg;
        return res;
    };

    std::shared_ptr<VelocityGrid const> grid;
    std::optional<CrossSectionModel> model;
    std::optional<BoundaryData> bc;
    SlabConfig slab;
    try
    {
        grid = std::make_shared<VelocityGrid const>(cfg.grid);
        model.emplace(cfg.make_model());
        model->validate();
        bc.emplace(cfg.make_boundary());
        slab = cfg.make_slab();
        slab.validate();
        res.regularity = bc->regularity(*grid, cfg.lp_exponent);
    }
    catch (std::exception const& e)
    {
        return fail("config_error", e.what());
    }
    res.grid_hash = grid->hash();

    std::optional<LinearizedOperator> op;
    std::filesystem::path cache_file;
    if (char const* dir = std::getenv("SLABKIN_CACHE_DIR"); dir && *dir)
    {
        cache_file = std::filesystem::path(dir)
                     / ("operator_" + hex(operator_cache_key(*model, *grid, 0)) + ".bin");
        op = load_operator(cache_file, *model, grid, 0);
        res.operator_from_cache = op.has_value();
    }
    try
    {
        if (!op)
        {
            AssemblyOptions opts;
            opts.assembly_tol = cfg.assembly_tol;
            op.emplace(assemble_operator(*model, grid, opts));
            if (!cache_file.empty())
            {
                std::error_code ec;
                std::filesystem::create_directories(cache_file.parent_path(), ec);
                try
                {
                    save_operator(*op, cache_file);
                }
                catch (IoError const&)
                {
                    // A cache that cannot be written is not fatal.
                }
            }
        }
    }
    catch (QuadratureError const& e)
    {
        return fail("assembly_failure", e.what());
    }
    res.nu0_fit = op->nu0_fit();
    res.nu1_fit = op->nu1_fit();
    res.max_entry_error = op->max_entry_error();
    res.invariants = op->invariant_residuals();
    res.smoothing = smoothing_report(*op, cfg.seed);

    auto const f = solve(*bc, *op, slab);
    res.converged = f.converged;
    res.residual_history = f.residual_history;
    res.monotonicity_flag = f.monotonicity_flag;
    res.fixed_point_residual = sup_star_distance(f, mild_step(f, *bc, *op, slab), *op);
    res.triple_norm = triple_norm(f, *op);
    res.sup_norm = sup_norm(f);
    double const data = res.regularity.sup_in + res.regularity.sup_out + res.triple_norm;
    res.boundedness_constant = data > 0 ? res.sup_norm / data : 0.0;
    if (!f.converged)
    {
        fail("solver_nonconvergence",
             "source iteration did not reach tol = " + fmt(cfg.tol) + " in "
                 + std::to_string(cfg.max_iter) + " iterations (last residual "
                 + fmt(f.residual_history.empty() ? 0.0 : f.residual_history.back()) + ")");
        res.status = "not_converged";
        return res;
    }

    for (std::size_t k = 1; k + 1 < f.n_x(); ++k)
        res.x_rows.push_back(f.x_nodes[k]);
    for (auto const& alpha : cfg.moments)
    {
        MomentProfile prof;
        prof.alpha = alpha;
        for (std::size_t k = 1; k + 1 < f.n_x(); ++k)
        {
            prof.sigma.push_back(moment(f, alpha, k));
            prof.dsigma.push_back(d_moment_dx(f, *bc, *op, alpha, f.x_nodes[k]).total());
        }
        res.profiles.push_back(std::move(prof));

        res.singularities.push_back(
            analyze_singularity(f, *bc, *op, alpha, cfg.fit_k_min, cfg.fit_k_max));

        GradientBound gb;
        gb.alpha = alpha;
        for (int k = cfg.dyadic_k_min; k <= cfg.dyadic_k_max; ++k)
        {
            double const h = std::ldexp(1.0, -k);
            if (h >= 0.5 * cfg.l)
                continue;
            double const d0 = d_moment_dx(f, *bc, *op, alpha, h).total();
            double const dl = d_moment_dx(f, *bc, *op, alpha, cfg.l - h).total();
            gb.near_zero = std::max(gb.near_zero, std::abs(d0) / (std::abs(std::log(h)) + 1));
            gb.near_l = std::max(gb.near_l, std::abs(dl) / (std::abs(std::log(h)) + 1));
        }
        res.gradient_bounds.push_back(gb);
    }

    std::vector<std::pair<double, double>> pairs;
    double const base = f.x_nodes[1];
    // Ten log-spaced separations from 1e-4 to 1e-1, anchored at the first
    // interior node.
    for (int m = 0; m < 10; ++m)
    {
        double const s = base + std::pow(10.0, -4.0 + m / 3.0);
        if (s < cfg.l)
            pairs.emplace_back(base, s);
    }
    res.holder = holder_probe(f, pairs, cfg.holder_beta);
    res.lemma_theta_ratio = lemma_theta_ratio(f, *op, f.n_x() / 2, 0.8);
    return res;
}

int exit_code_for(RunResults const& results)
{
    if (results.status == "ok")
        return exit_ok;
    if (results.status == "config_error")
        return exit_config_error;
    return exit_failure;
}

// --------------------------------------------------------------------------

std::string moments_csv(RunResults const& results)
{
    std::ostringstream out;
    out << "x";
    auto tag = [](MomentIndex const& m) {
        auto const& a = m.alpha();
        return std::to_string(a[0]) + "_" + std::to_string(a[1]) + "_" + std::to_string(a[2]);
    };
    for (auto const& m : results.config.moments)
        out << ",sigma_" << tag(m) << ",dsigma_" << tag(m);
    out << "\n";
    for (std::size_t r = 0; r < results.x_rows.size(); ++r)
    {
        out << fmt(results.x_rows[r]);
        for (auto const& p : results.profiles)
            out << "," << fmt(p.sigma[r]) << "," << fmt(p.dsigma[r]);
        out << "\n";
    }
    return out.str();
}

std::string report_json(RunResults const& results, bool include_timestamp)
{
    json j;
    j["version"] = version_string;
    j["status"] = results.status;
    j["error_code"] = results.error_code;
    j["error_message"] = results.error_message;
    if (include_timestamp)
    {
        auto const now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        j["timestamp"] = buf;
    }
    json echo = json::object();
    for (auto const& [k, v] : results.config.echo)
        echo[k] = v;
    j["config"] = echo;

    json op;
    op["grid_hash"] = hex(results.grid_hash);
    op["nu0_fit"] = results.nu0_fit;
    op["nu1_fit"] = results.nu1_fit;
    op["nu_ratio"] = results.nu0_fit > 0 ? results.nu1_fit / results.nu0_fit : 0.0;
    op["max_entry_error"] = results.max_entry_error;
    json inv = json::array();
    for (auto const& r : results.invariants)
        inv.push_back({{"name", r.name}, {"raw", r.raw}, {"corrected", r.corrected}});
    op["invariants"] = inv;
    json c2 = json::array();
    for (auto const& [a, v] : results.smoothing.c2)
        c2.push_back({{"a", a}, {"c2", v}});
    op["smoothing"] = {{"c1", results.smoothing.c1},
                       {"c2", c2},
                       {"samples", results.smoothing.samples}};
    j["operator"] = op;

    json sol;
    sol["converged"] = results.converged;
    sol["iterations"] = results.residual_history.size();
    sol["residual_history"] = number_list(results.residual_history);
    sol["monotonicity_flag"] = results.monotonicity_flag;
    sol["fixed_point_residual"] = results.fixed_point_residual;
    sol["triple_norm"] = results.triple_norm;
    sol["sup_norm"] = results.sup_norm;
    sol["boundedness_constant"] = results.boundedness_constant;
    sol["boundary_regularity"] = {{"sup_in", results.regularity.sup_in},
                                  {"sup_out", results.regularity.sup_out},
                                  {"grad_in_lp", results.regularity.grad_in_lp},
                                  {"p", results.regularity.p}};
    j["solver"] = sol;

    json sing = json::array();
    for (auto const& s : results.singularities)
    {
        json e;
        e["alpha"] = s.alpha.label();
        e["a_alpha"] = s.alpha.a_alpha();
        e["c_theory"] = s.c_theory;
        e["b_fit"] = s.b_fit;
        e["a_fit"] = s.a_fit;
        e["fit_residual"] = s.fit_residual;
        e["b_fit_abs"] = s.b_fit_abs;
        e["a_fit_abs"] = s.a_fit_abs;
        e["fit_residual_abs"] = s.fit_residual_abs;
        e["i_limit"] = s.i_limit;
        e["i_ratios"] = number_list(s.i_ratios);
        e["extrapolation_unstable"] = s.extrapolation_unstable;
        e["x_range"] = {s.x_range.first, s.x_range.second};
        e["rho0_values"] = number_list(s.rho0_values);
        json samples = json::array();
        for (auto const& [x, d] : s.samples)
            samples.push_back({x, d});
        e["samples"] = samples;
        sing.push_back(e);
    }
    j["singularities"] = sing;

    json gb = json::array();
    for (auto const& g : results.gradient_bounds)
        gb.push_back({{"alpha", g.alpha.label()}, {"near_zero", g.near_zero}, {"near_l", g.near_l}});
    j["gradient_bounds"] = gb;

    auto const& h = results.holder;
    j["holder"] = {{"slope", h.slope},
                   {"constant", h.constant},
                   {"beta", h.beta},
                   {"meets_beta", h.meets_beta},
                   {"exact_constant", h.exact_constant},
                   {"separations", number_list(h.separations)},
                   {"differences", number_list(h.differences)}};
    j["lemma_theta_ratio"] = results.lemma_theta_ratio;
    return j.dump(2) + "\n";
}

std::vector<E1ValidationRow> e1_table(int n, double x_min, double x_max)
{
    if (n < 2 || !(x_min > 0) || !(x_max > x_min))
        throw DomainError("e1_table: need n >= 2 and 0 < x_min < x_max");
    std::vector<E1ValidationRow> rows;
    double const step = std::log(x_max / x_min) / (n - 1);
    for (int k = 0; k < n; ++k)
    {
        double const x = x_min * std::exp(step * k);
        auto const r = exp_integral_E1(x);
        auto const b = e1_bounds(x);
        rows.push_back({x, r.value, r.branch == E1Branch::series ? "series" : "continued_fraction",
                        r.est_error, b.lower, b.upper});
    }
    return rows;
}

std::string e1_validation_csv(std::vector<E1ValidationRow> const& rows)
{
    std::ostringstream out;
    out << "x,e1,branch,est_error,lower_bound,upper_bound\n";
    for (auto const& r : rows)
        out << fmt(r.x) << "," << fmt(r.value) << "," << r.branch << "," << fmt(r.est_error)
            << "," << fmt(r.lower) << "," << fmt(r.upper) << "\n";
    return out.str();
}

void export_results(RunResults const& results, std::filesystem::path const& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    auto write = [&dir](char const* name, std::string const& content) {
        auto const path = dir / name;
        std::ofstream out(path, std::ios::binary);
        out << content;
        if (!out)
            throw IoError("cannot write " + path.string());
    };
    write("moments.csv", moments_csv(results));
    write("report.json", report_json(results));
    write("e1_validation.csv", e1_validation_csv(e1_table()));
}

}  // namespace slabkin

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "slabkin/cli_io.hpp"
#include "slabkin/errors.hpp"
#include "slabkin/special_functions.hpp"

namespace fs = std::filesystem;
using namespace slabkin;

namespace
{

int cmd_solve(std::string const& config_path, std::string const& out_override)
{
    RunConfig cfg;
    try
    {
        cfg = load_config(config_path);
    }
    catch (ConfigError const& e)
    {
        std::cerr << e.what() << "\n";
        return exit_config_error;
    }
    if (!out_override.empty())
        cfg.output_dir = out_override;

    auto const res = run_experiment(cfg);
    if (res.status == "config_error")
    {
        std::cerr << "config error: " << res.error_message << "\n";
        return exit_config_error;
    }
    try
    {
        export_results(res, cfg.output_dir);
    }
    catch (IoError const& e)
    {
        std::cerr << e.what() << "\n";
        return exit_failure;
    }
    if (res.status != "ok")
    {
        std::cerr << res.error_code << ": " << res.error_message << "\n";
        return exit_code_for(res);
    }
    std::printf("converged in %zu iterations, |||f||| = %.6g\n", res.residual_history.size(),
                res.triple_norm);
    for (auto const& s : res.singularities)
        std::printf("alpha (%s): b_fit = %.6g  c = %.6g  I-limit = %.6g\n", s.alpha.label().c_str(),
                    s.b_fit, s.c_theory, s.i_limit);
    std::printf("results in %s\n", cfg.output_dir.c_str());
    return exit_ok;
}

int cmd_validate_e1(std::string const& out)
{
    auto const rows = e1_table();
    std::size_t bound_violations = 0;
    for (auto const& r : rows)
        if (!(r.lower < r.value && r.value < r.upper))
            ++bound_violations;
    double const x = 1e-6;
    double const ratio = e1(x) / -std::log(x);
    if (out.empty())
        std::cout << e1_validation_csv(rows);
    else
    {
        std::ofstream f(out);
        f << e1_validation_csv(rows);
        if (!f)
        {
            std::cerr << "cannot write " << out << "\n";
            return exit_failure;
        }
    }
    std::fprintf(stderr, "%zu samples, %zu bound violations, E1(1e-6)/(-ln 1e-6) = %.6f\n",
                 rows.size(), bound_violations, ratio);
    return bound_violations == 0 ? exit_ok : exit_failure;
}

int cmd_validate_operator(std::string const& config_path)
{
    RunConfig cfg;
    std::shared_ptr<VelocityGrid const> grid;
    std::optional<CrossSectionModel> model;
    try
    {
        cfg = load_config(config_path);
        grid = std::make_shared<VelocityGrid const>(cfg.grid);
        model.emplace(cfg.make_model());
        model->validate();
    }
    catch (std::exception const& e)
    {
        std::cerr << e.what() << "\n";
        return exit_config_error;
    }
    AssemblyOptions opts;
    opts.assembly_tol = cfg.assembly_tol;
    std::optional<LinearizedOperator> op;
    try
    {
        op.emplace(assemble_operator(*model, grid, opts));
    }
    catch (QuadratureError const& e)
    {
        std::cerr << e.what() << "\n";
        return exit_failure;
    }

    // Symmetric form of L in the weighted inner product.
    auto const n = static_cast<Eigen::Index>(op->size());
    Eigen::VectorXd sw(n);
    for (Eigen::Index i = 0; i < n; ++i)
        sw[i] = std::sqrt(grid->weight(static_cast<std::size_t>(i)));
    Eigen::MatrixXd s = sw.asDiagonal() * op->kernel() * sw.asDiagonal();
    for (Eigen::Index i = 0; i < n; ++i)
        s(i, i) -= op->nu()[static_cast<std::size_t>(i)];
    double const asym = (s - s.transpose()).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);

    nlohmann::ordered_json j;
    j["grid_hash"] = grid->hash();
    j["maxwellian_mass"] = grid->maxwellian_mass();
    j["max_entry_error"] = op->max_entry_error();
    j["nu0_fit"] = op->nu0_fit();
    j["nu1_fit"] = op->nu1_fit();
    j["max_asymmetry"] = asym;
    j["max_eigenvalue"] = eig.eigenvalues().maxCoeff();
    for (auto const& r : op->invariant_residuals())
        j["invariants"].push_back({{"name", r.name}, {"raw", r.raw}, {"corrected", r.corrected}});
    auto const sm = smoothing_report(*op, cfg.seed);
    j["smoothing_c1"] = sm.c1;
    std::cout << j.dump(2) << "\n";
    return exit_ok;
}

int cmd_report(std::string const& dir)
{
    auto const path = fs::path(dir) / "report.json";
    std::ifstream in(path);
    if (!in)
    {
        std::cerr << "no report.json in " << dir << "\n";
        return exit_config_error;
    }
    nlohmann::ordered_json j;
    try
    {
        in >> j;
    }
    catch (nlohmann::json::exception const& e)
    {
        std::cerr << path.string() << ": " << e.what() << "\n";
        return exit_config_error;
    }
    std::cout << "status        " << j.value("status", "?") << "\n";
    if (j.contains("solver"))
    {
        auto const& s = j["solver"];
        std::cout << "converged     " << s.value("converged", false) << " after "
                  << s.value("iterations", 0) << " iterations\n";
        std::cout << "triple norm   " << s.value("triple_norm", 0.0) << "\n";
        std::cout << "C-hat         " << s.value("boundedness_constant", 0.0) << "\n";
    }
    if (j.contains("operator"))
        std::cout << "nu0, nu1      " << j["operator"].value("nu0_fit", 0.0) << ", "
                  << j["operator"].value("nu1_fit", 0.0) << "\n";
    for (auto const& s : j.value("singularities", nlohmann::ordered_json::array()))
    {
        double const b = s.value("b_fit", 0.0);
        double const c = s.value("c_theory", 0.0);
        std::printf("alpha (%s)  b_fit %.6g  c %.6g  I-limit %.6g  rel %.3g\n",
                    s.value("alpha", "").c_str(), b, c, s.value("i_limit", 0.0),
                    std::abs(b - c) / std::max(std::abs(c), 1e-8));
    }
    if (j.contains("holder"))
        std::cout << "holder slope  " << j["holder"].value("slope", 0.0) << "\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stationary linearized Boltzmann slab solver"};
    app.set_version_flag("--version", std::string(version_string));
    app.require_subcommand(1);

    std::string config, out, dir;
    auto* solve_cmd = app.add_subcommand("solve", "Solve a slab problem and export results");
    solve_cmd->add_option("config", config, "Configuration file")->required();
    solve_cmd->add_option("-o,--output", out, "Override output_dir");

    auto* e1_cmd = app.add_subcommand("validate-e1", "Tabulate E1 with its bounds");
    e1_cmd->add_option("-o,--output", out, "CSV file (default stdout)");

    auto* op_cmd = app.add_subcommand("validate-operator", "Assemble L and print diagnostics");
    op_cmd->add_option("config", config, "Configuration file")->required();

    auto* rep_cmd = app.add_subcommand("report", "Summarise an output directory");
    rep_cmd->add_option("dir", dir, "Directory holding report.json")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        int const rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_config_error;
    }

    try
    {
        if (*solve_cmd)
            return cmd_solve(config, out);
        if (*e1_cmd)
            return cmd_validate_e1(out);
        if (*op_cmd)
            return cmd_validate_operator(config);
        return cmd_report(dir);
    }
    catch (std::exception const& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return exit_failure;
    }
}

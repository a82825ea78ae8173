#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>
#include <sys/wait.h>

#include "slabkin/cli_io.hpp"
#include "slabkin/errors.hpp"

using namespace slabkin;
namespace fs = std::filesystem;

namespace
{
std::string const toy = R"(# toy run
cross_section = hard_sphere
n_zeta1 = 16
n_zeta_r = 8
zeta_max = 5
zeta1_min = 1e-2
eps_grid = 1e-2
n_x_uniform = 12
dyadic_k_min = 3
dyadic_k_max = 14
min_wall_depth = 8
boundary = mixed
moments = 000 200 020 220
fit_k_min = 6
fit_k_max = 12
seed = 99
)";

fs::path scratch(std::string const& name)
{
    auto const p = fs::temp_directory_path() / ("slabkin_test_" + name);
    fs::remove_all(p);
    return p;
}

RunResults const& toy_results()
{
    static RunResults const r = run_experiment(parse_config(toy));
    return r;
}

std::string slurp(fs::path const& p)
{
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}
}  // namespace

TEST(Config, DefaultsForOmittedKeys)
{
    auto const c = parse_config("# nothing\n\n   \n");
    RunConfig const d;
    EXPECT_EQ(c.grid.n_zeta1, d.grid.n_zeta1);
    EXPECT_EQ(c.fit_k_min, 8);
    EXPECT_EQ(c.fit_k_max, 14);
    EXPECT_EQ(c.moments.size(), 3u);
    EXPECT_TRUE(c.echo.empty());
}

TEST(Config, ValuesAndEcho)
{
    auto const c = parse_config(toy);
    EXPECT_EQ(c.grid.n_zeta1, 16);
    EXPECT_EQ(c.grid.zeta1_min, 1e-2);
    EXPECT_EQ(c.boundary, "mixed");
    EXPECT_EQ(c.seed, 99u);
    ASSERT_EQ(c.moments.size(), 4u);
    EXPECT_EQ(c.moments[3], MomentIndex(2, 2, 0));
    ASSERT_FALSE(c.echo.empty());
    EXPECT_EQ(c.echo.front().first, "cross_section");
    EXPECT_EQ(c.echo[4].second, "1e-2");
}

TEST(Config, OddTransverseIndexRejected)
{
    try
    {
        parse_config("moments = 110\n");
        FAIL();
    }
    catch (ConfigError const& e)
    {
        EXPECT_NE(std::string(e.what()).find("1,1,0"), std::string::npos);
    }
}

TEST(Config, ReversedFitWindowRejected)
{
    EXPECT_THROW(parse_config("fit_k_min = 14\nfit_k_max = 8\n"), ConfigError);
}

TEST(Config, AllViolationsReportedTogether)
{
    try
    {
        parse_config("n_zeta_r = 0\nl = -1\nrelaxation = 2\n");
        FAIL();
    }
    catch (ConfigError const& e)
    {
        std::string const m = e.what();
        EXPECT_NE(m.find("n_zeta_r"), std::string::npos);
        EXPECT_NE(m.find("l must"), std::string::npos);
        EXPECT_NE(m.find("relaxation"), std::string::npos);
    }
}

TEST(Config, SyntaxErrorsCarryLineNumbers)
{
    try
    {
        parse_config("l = 1\n\nthis is not valid\nbogus_key = 3\nl = 2\ntol = abc\n");
        FAIL();
    }
    catch (ConfigError const& e)
    {
        std::string const m = e.what();
        EXPECT_NE(m.find("line 3"), std::string::npos);
        EXPECT_NE(m.find("line 4: unknown key 'bogus_key'"), std::string::npos);
        EXPECT_NE(m.find("line 5: duplicate key 'l'"), std::string::npos);
        EXPECT_NE(m.find("line 6"), std::string::npos);
    }
    EXPECT_THROW(load_config("/nonexistent/slabkin.cfg"), ConfigError);
}

TEST(Config, MomentListForms)
{
    auto const a = parse_moment_list("0,0,0; 2,0,0");
    auto const b = parse_moment_list("000 200");
    EXPECT_EQ(a, b);
    EXPECT_TRUE(parse_moment_list("").empty());
    EXPECT_THROW(parse_moment_list("00"), std::invalid_argument);
}

TEST(Run, ToyPipeline)
{
    auto const& r = toy_results();
    ASSERT_EQ(r.status, "ok") << r.error_message;
    EXPECT_EQ(exit_code_for(r), exit_ok);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.profiles.size(), 4u);
    EXPECT_EQ(r.singularities.size(), 4u);
    EXPECT_EQ(r.gradient_bounds.size(), 4u);
    EXPECT_LT(r.fixed_point_residual, 1e-8);
    EXPECT_GT(r.nu1_fit, r.nu0_fit);
    for (auto const& p : r.profiles)
        EXPECT_EQ(p.sigma.size(), r.x_rows.size());
}

TEST(Export, CsvShape)
{
    auto const& r = toy_results();
    std::istringstream in(moments_csv(r));
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(std::count(header.begin(), header.end(), ',') + 1, 1 + 2 * 4);
    EXPECT_EQ(header.substr(0, 16), "x,sigma_0_0_0,ds");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);)
    {
        ++rows;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 8);
    }
    EXPECT_EQ(rows, r.x_rows.size());

    std::string text = toy;
    text.replace(text.find("moments = 000 200 020 220"), 25, "moments =");
    auto cfg = parse_config(text);
    RunResults empty;
    empty.config = cfg;
    empty.x_rows = {0.5};
    EXPECT_EQ(moments_csv(empty).substr(0, 2), "x\n");
}

TEST(Export, ReportRoundTripAndDeterminism)
{
    auto const& r = toy_results();
    auto const text = report_json(r, false);
    auto const j = nlohmann::json::parse(text);
    EXPECT_EQ(j["status"], "ok");
    EXPECT_EQ(j["operator"]["nu0_fit"].get<double>(), r.nu0_fit);
    EXPECT_EQ(j["solver"]["residual_history"].size(), r.residual_history.size());
    EXPECT_EQ(j["solver"]["residual_history"].back().get<double>(), r.residual_history.back());
    EXPECT_EQ(j["singularities"][0]["b_fit"].get<double>(), r.singularities[0].b_fit);
    EXPECT_FALSE(j.contains("timestamp"));
    EXPECT_TRUE(nlohmann::json::parse(report_json(r, true)).contains("timestamp"));
    // Config echo matches the input exactly.
    EXPECT_EQ(j["config"]["zeta1_min"], "1e-2");
    EXPECT_EQ(j["config"]["moments"], "000 200 020 220");

    auto const again = run_experiment(parse_config(toy));
    EXPECT_EQ(report_json(again, false), text);
}

TEST(Export, FilesWritten)
{
    auto const dir = scratch("export");
    export_results(toy_results(), dir);
    for (char const* name : {"moments.csv", "report.json", "e1_validation.csv"})
        EXPECT_TRUE(fs::exists(dir / name)) << name;
    EXPECT_EQ(slurp(dir / "e1_validation.csv").substr(0, 44),
              "x,e1,branch,est_error,lower_bound,upper_boun");
    fs::remove_all(dir);
    EXPECT_THROW(export_results(toy_results(), "/proc/slabkin_cannot_write"), IoError);
}

TEST(Export, E1Table)
{
    auto const rows = e1_table();
    ASSERT_EQ(rows.size(), 1000u);
    EXPECT_NEAR(rows.front().x, 1e-6, 1e-20);
    EXPECT_NEAR(rows.back().x, 50.0, 1e-12);
    for (auto const& r : rows)
    {
        EXPECT_LT(r.lower, r.value);
        EXPECT_LT(r.value, r.upper);
    }
    EXPECT_THROW(e1_table(1), DomainError);
}

TEST(Run, OperatorCache)
{
    auto const dir = scratch("cache");
    fs::create_directories(dir);
    ::setenv("SLABKIN_CACHE_DIR", dir.c_str(), 1);
    auto const a = run_experiment(parse_config(toy));
    auto const b = run_experiment(parse_config(toy));
    ::unsetenv("SLABKIN_CACHE_DIR");
    EXPECT_FALSE(a.operator_from_cache);
    EXPECT_TRUE(b.operator_from_cache);
    EXPECT_EQ(report_json(a, false), report_json(b, false));
    fs::remove_all(dir);
}

TEST(Run, NonConvergenceStatus)
{
    auto const r = run_experiment(parse_config(toy + "max_iter = 2\n"));
    EXPECT_EQ(r.status, "not_converged");
    EXPECT_EQ(r.error_code, "solver_nonconvergence");
    EXPECT_EQ(exit_code_for(r), exit_failure);
}

#ifdef SLABKIN_EXE
namespace
{
int run_tool(std::string const& args)
{
    int const rc = std::system((std::string(SLABKIN_EXE) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path write_config(std::string const& name, std::string const& text)
{
    auto const p = fs::temp_directory_path() / name;
    std::ofstream(p) << text;
    return p;
}
}  // namespace

TEST(Tool, ExitCodes)
{
    auto const out = scratch("tool_out");
    auto const good = write_config("slabkin_good.cfg", toy + "output_dir = " + out.string() + "\n");
    EXPECT_EQ(run_tool("solve " + good.string()), 0);
    EXPECT_TRUE(fs::exists(out / "report.json"));
    EXPECT_EQ(run_tool("report " + out.string()), 0);

    auto const bad_out = scratch("tool_bad");
    auto const bad = write_config("slabkin_bad.cfg",
                                  "moments = 110\noutput_dir = " + bad_out.string() + "\n");
    EXPECT_EQ(run_tool("solve " + bad.string()), 2);
    EXPECT_FALSE(fs::exists(bad_out));

    auto const stuck_out = scratch("tool_stuck");
    auto const stuck = write_config(
        "slabkin_stuck.cfg", toy + "max_iter = 2\noutput_dir = " + stuck_out.string() + "\n");
    EXPECT_EQ(run_tool("solve " + stuck.string()), 1);

    EXPECT_EQ(run_tool("validate-e1 -o " + (out / "e1.csv").string()), 0);
    EXPECT_EQ(run_tool("validate-operator " + good.string()), 0);
    EXPECT_EQ(run_tool("report /nonexistent/dir"), 2);
    EXPECT_EQ(run_tool("solve /nonexistent.cfg"), 2);
    EXPECT_EQ(run_tool("frobnicate"), 2);
    for (auto const& p : {out, stuck_out})
        fs::remove_all(p);
    for (auto const& p : {good, bad, stuck})
        fs::remove(p);
}
#endif

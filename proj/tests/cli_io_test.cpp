#include "test_support.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace stfermat;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
  TempDir()
  {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("stfermat_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

std::string slurp(const fs::path& file)
{
  std::ifstream in(file, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text)
{
  std::ofstream(dir / name) << text;
  return dir / name;
}

int run(const std::string& command, const fs::path& file, const fs::path& out)
{
  RunContext ctx;
  ctx.out_dir = out;
  ctx.quiet = true;
  std::ostringstream sink;
  ctx.err = &sink;
  return run_command(command, file, ctx);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& file)
{
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(file);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

const std::string flat_scenario = "[model]\nspec = flat\n[problem]\np = 0, 0\nq = 3, 4\nkappa = 0\n";

int run_cli(const std::string& args)
{
  const int status = std::system((std::string(STFERMAT_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(PathTable, RoundTripPreservesFunctionals)
{
  std::mt19937_64 rng(41);
  TempDir tmp;
  for (const auto& m : testkit::builtin_models()) {
    const DiscretePath z = testkit::random_smooth_path(m, rng, 50);
    write_path_table(tmp.path() / "z.txt", z);
    const DiscretePath back = read_path_table(tmp.path() / "z.txt");
    ASSERT_EQ(back.segments(), z.segments());
    EXPECT_EQ(back.periods, z.periods);
    for (std::size_t i = 0; i < z.nodes.size(); ++i) {
      EXPECT_EQ(back.nodes[i].y, z.nodes[i].y);
      EXPECT_EQ(back.nodes[i].t, z.nodes[i].t);
    }
    EXPECT_LE(std::abs(action(m, back) - action(m, z)), 1e-15 * std::abs(action(m, z)));
    EXPECT_LE(std::abs(energy_integral(m, back) - energy_integral(m, z)), 1e-15 * std::abs(energy_integral(m, z)));
  }
}

TEST(PathTable, MalformedInput)
{
  std::istringstream bad_number("# s y1 y2 t\n0 0 0 x\n1 1 1 1\n");
  try {
    read_path_table(bad_number);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  std::istringstream ragged("0 0 0 0\n1 1 1\n");
  EXPECT_THROW(read_path_table(ragged), ParseError);
  std::istringstream single("0 0 0 0\n");
  EXPECT_THROW(read_path_table(single), ParseError);
}

TEST(Records, JsonCarriesSeventeenDigitScalars)
{
  SolverOptions o;
  o.segments = 20;
  const SolutionRecord r =
      minimize_arrival(make_flat(), make_point({0, 0}, 0), make_point({3, 4}, 0), -0.5, SeedSpec{}, o);
  const std::string text = record_json(r, "flat", -0.5, "p.txt", "g.txt");
  const auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j["model"], "flat");
  EXPECT_EQ(j["branch"], "plus");
  EXPECT_EQ(j["t_plus"].get<double>(), r.arrival.t_plus);
  EXPECT_EQ(j["winding"], (std::vector<long>{0, 0}));
  EXPECT_EQ(j["path_file"], "p.txt");
  EXPECT_NE(text.find("\"t_plus\": " + format_double(r.arrival.t_plus)), std::string::npos);
}

TEST(Records, SummaryRowFormat)
{
  SolutionRecord r;
  r.arrival.t_plus = 0.1;
  r.winding = {0, -1};
  r.iters = 3;
  r.seed_label = "wind-1";
  const std::string row = summary_row(r, 0.0);
  EXPECT_EQ(row.substr(0, 30), "0,plus,0.10000000000000001,0,0");
  EXPECT_NE(row.find(",0;-1,"), std::string::npos);
  const std::string header = summary_header();
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), std::count(header.begin(), header.end(), ','));
}

TEST(Scenario, ParsesEveryShippedFile)
{
  for (const auto& entry : fs::directory_iterator(STFERMAT_SCENARIO_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    EXPECT_NO_THROW(load_scenario(entry.path())) << entry.path();
  }
}

TEST(Scenario, FieldsAndDefaults)
{
  const Scenario sc = parse_scenario_text(
      "[model]\nspec = cylinder(1)\n[problem]\np = 0, 0\nq = 1, 1\nq_t = 2\nkappa = 0, -1\n"
      "[solver]\nsegments = 64\nseed = 5\nbranch = minus\n[seeds]\nwindings = -1, 1\nrandom = 2\n");
  EXPECT_EQ(sc.get_model().name(), "cylinder(1)");
  EXPECT_EQ(sc.q.t, 2.0);
  EXPECT_EQ(sc.kappas, (std::vector<double>{0, -1}));
  EXPECT_EQ(sc.solver.segments, 64);
  EXPECT_EQ(sc.solver.rng_seed, 5u);
  EXPECT_EQ(sc.solver.branch, Branch::Minus);
  EXPECT_EQ(sc.solver.max_iters, 5000);
  EXPECT_EQ(sc.seeds().size(), 4u);
  EXPECT_EQ(parse_scenario_text(flat_scenario + "[seeds]\nrandom = 3\n").seeds().size(), 4u);
  const Box b = sc.validation_region();
  EXPECT_EQ(b.lo, make_vec({-1, -1}));
  EXPECT_EQ(b.hi, make_vec({2, 2}));
}

TEST(Scenario, CustomPolynomialModel)
{
  const Scenario sc = parse_scenario_text(
      "[model]\nname = aniso\nL0 = 0.5*nu1^2 + nu2^2\nomega = -0.1*y2; 0.1*y1\nd = 0.5\nperiods = 0, 6\n"
      "[problem]\np = 0, 0\nq = 1, 1\n");
  const StationaryModel& m = sc.get_model();
  EXPECT_EQ(m.name(), "aniso");
  EXPECT_TRUE(m.homogeneous());
  EXPECT_FALSE(m.linear_charge());
  EXPECT_EQ(m.topology().periods, (std::vector<double>{0, 6}));
  EXPECT_DOUBLE_EQ(m.omega(make_vec({1, 2}), make_vec({1, 1})), -0.2 + 0.1);
}

TEST(Scenario, ParseErrors)
{
  EXPECT_THROW(parse_scenario_text("[problem]\np = 0, 0\nq = 1, 1\n"), ParseError);
  EXPECT_THROW(parse_scenario_text("[model]\nspec = flat\n[problem]\np = 0\nq = 1, 1\n"), ParseError);
  EXPECT_THROW(parse_scenario_text("[model]\nspec = flat\n[problem]\np = 0, 0\nq = 1, 1\nkappa =\n"), ParseError);
  EXPECT_THROW(parse_scenario_text(flat_scenario + "[solver]\nsegments = 1\n"), ParseError);
  EXPECT_THROW(parse_scenario_text(flat_scenario + "[solver]\nbranch = sideways\n"), ParseError);
  EXPECT_THROW(parse_scenario_text(flat_scenario + "[seeds]\nwindings = 1\n"), ParseError);
  EXPECT_THROW(parse_scenario_text("[model\nspec = flat\n"), ParseError);
  EXPECT_THROW(parse_scenario_text("[model]\nL0 = nu1^^2\n[problem]\np = 0, 0\nq = 1, 1\n"), ParseError);
}

TEST(Commands, ValidateGate)
{
  TempDir tmp;
  EXPECT_EQ(run("validate", write_file(tmp.path(), "a.ini", flat_scenario), tmp.path()), kExitOk);
  const auto report = nlohmann::json::parse(slurp(tmp.path() / "validation.json"));
  EXPECT_EQ(report["kappa_admissible_bound"].get<double>(), 0.0);

  const std::string hot = "[model]\nspec = flat\n[problem]\np = 0, 0\nq = 3, 4\nkappa = 0.1\n";
  EXPECT_EQ(run("validate", write_file(tmp.path(), "b.ini", hot), tmp.path()), kExitValidation);
  EXPECT_EQ(run("solve", write_file(tmp.path(), "b.ini", hot), tmp.path()), kExitValidation);

  const std::string pot = "[model]\nL0 = 3 + 0.5*nu1^2 + 0.5*nu2^2\n[problem]\np = 0, 0\nq = 1, 1\nkappa = -2\n";
  EXPECT_EQ(run("validate", write_file(tmp.path(), "c.ini", pot), tmp.path()), kExitValidation);
}

TEST(Commands, ParseErrorExitCode)
{
  TempDir tmp;
  EXPECT_EQ(run("solve", write_file(tmp.path(), "a.ini", "[model]\nspec = nothing\n"), tmp.path()), kExitParse);
  EXPECT_EQ(run("solve", tmp.path() / "missing.ini", tmp.path()), kExitParse);
  const std::string two = "[model]\nspec = flat\n[problem]\np = 0, 0\nq = 3, 4\nkappa = 0, -1\n";
  EXPECT_EQ(run("solve", write_file(tmp.path(), "b.ini", two), tmp.path()), kExitParse);
}

TEST(Commands, SolveFlat)
{
  TempDir tmp;
  ASSERT_EQ(run("solve", write_file(tmp.path(), "a.ini", flat_scenario), tmp.path()), kExitOk);
  const auto rows = read_csv(tmp.path() / "summary.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][2], "t_plus");
  EXPECT_NEAR(std::stod(rows[1][2]), 5.0, 1e-6);
  EXPECT_TRUE(fs::exists(tmp.path() / "record_0.json"));
  const DiscretePath g = read_path_table(tmp.path() / "record_0_geodesic.txt");
  EXPECT_NEAR(g.end().t, 5.0, 1e-6);
}

TEST(Commands, SolveCylinderRowsSorted)
{
  TempDir tmp;
  const std::string sc = "[model]\nspec = cylinder(1)\n[problem]\np = 0, 0\nq = 1, 1\n"
                         "[solver]\nsegments = 100\n[seeds]\nwindings = -2, -1, 0, 1, 2\n";
  ASSERT_EQ(run("solve", write_file(tmp.path(), "a.ini", sc), tmp.path()), kExitOk);
  const auto rows = read_csv(tmp.path() / "summary.csv");
  ASSERT_GE(rows.size(), 4u);
  for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_LT(std::stod(rows[i - 1][2]), std::stod(rows[i][2]));
}

TEST(Commands, NoConvergenceExitCode)
{
  TempDir tmp;
  const std::string sc = "[model]\nspec = randers-rot(0.3)\n[problem]\np = 1, 0\nq = 0, 1\n"
                         "[solver]\nmax_iters = 1\n";
  EXPECT_EQ(run("solve", write_file(tmp.path(), "a.ini", sc), tmp.path()), kExitNoConvergence);
}

TEST(Commands, AffineZeroOffsetReproducesBaseTable)
{
  TempDir a, b;
  const std::string tail = "[problem]\np = 1, 0\nq = 0, 1\nkappa = -0.2\n[seeds]\nrandom = 2\n";
  ASSERT_EQ(run("solve", write_file(a.path(), "s.ini", "[model]\nspec = randers-rot(0.3)\n" + tail), a.path()),
            kExitOk);
  ASSERT_EQ(run("solve", write_file(b.path(), "s.ini", "[model]\nspec = affine(randers-rot(0.3), 0)\n" + tail),
                b.path()),
            kExitOk);
  const auto ra = read_csv(a.path() / "summary.csv"), rb = read_csv(b.path() / "summary.csv");
  ASSERT_EQ(ra.size(), rb.size());
  for (std::size_t i = 1; i < ra.size(); ++i)
    for (std::size_t c : {2u, 3u, 5u, 6u})
      EXPECT_NEAR(std::stod(ra[i][c]), std::stod(rb[i][c]), 1e-9) << ra[0][c];
}

TEST(Commands, SweepFlat)
{
  TempDir tmp;
  const std::string sc = "[model]\nspec = flat\n[problem]\np = 0, 0\nq = 3, 4\nkappa = 0, -0.5, -2\n";
  ASSERT_EQ(run("sweep", write_file(tmp.path(), "a.ini", sc), tmp.path()), kExitOk);
  const auto rows = read_csv(tmp.path() / "sweep.csv");
  ASSERT_EQ(rows.size(), 4u);
  std::map<double, double> t;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    t[std::stod(rows[i][0])] = std::stod(rows[i][2]);
    EXPECT_EQ(rows[i].back(), "0");
  }
  EXPECT_NEAR(t[0.0], 5.0, 1e-6);
  EXPECT_NEAR(t[-0.5], std::sqrt(26.0), 1e-6);
  EXPECT_NEAR(t[-2.0], std::sqrt(29.0), 1e-6);
}

TEST(Commands, DeterministicCsv)
{
  TempDir a, b;
  const std::string sc = "[model]\nspec = randers-rot(0.3)\n[problem]\np = 1, 0\nq = 0, 1\n"
                         "[solver]\nseed = 3\n[seeds]\nrandom = 4\n";
  ASSERT_EQ(run("solve", write_file(a.path(), "s.ini", sc), a.path()), kExitOk);
  ASSERT_EQ(run("solve", write_file(b.path(), "s.ini", sc), b.path()), kExitOk);
  EXPECT_EQ(slurp(a.path() / "summary.csv"), slurp(b.path() / "summary.csv"));
  EXPECT_EQ(slurp(a.path() / "record_0.json"), slurp(b.path() / "record_0.json"));
}

TEST(Cli, ExitCodesAndOutputDirectory)
{
  TempDir tmp;
  const fs::path ok = write_file(tmp.path(), "ok.ini", flat_scenario);
  const fs::path hot =
      write_file(tmp.path(), "hot.ini", "[model]\nspec = flat\n[problem]\np = 0, 0\nq = 3, 4\nkappa = 0.1\n");
  const fs::path out = tmp.path() / "out";
  EXPECT_EQ(run_cli("solve " + ok.string() + " --out " + out.string() + " --segments 50 --seed 2 --quiet"), 0);
  EXPECT_TRUE(fs::exists(out / "summary.csv"));
  EXPECT_EQ(run_cli("validate " + hot.string() + " --out " + out.string()), 3);
  EXPECT_EQ(run_cli("solve " + ok.string() + " --segments 1 --out " + out.string()), 2);
  EXPECT_EQ(run_cli("frobnicate " + ok.string()), 2);
  const fs::path env_out = tmp.path() / "env";
  const std::string with_env = "STFERMAT_OUT=" + env_out.string() + " " + std::string(STFERMAT_CLI_PATH) +
                               " validate " + ok.string() + " --quiet > /dev/null 2>&1";
  EXPECT_EQ(std::system(with_env.c_str()), 0);
  EXPECT_TRUE(fs::exists(env_out / "validation.json"));
}

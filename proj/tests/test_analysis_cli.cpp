#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "separapde/analysis.hpp"
#include "separapde/cli.hpp"
#include "separapde/config.hpp"

using namespace separapde;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "separapde");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("separapde-test-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Problems, SinSinLoadIsMinusLaplacian) {
  for (std::size_t d : {2u, 3u}) {
    const auto p = sinsin_problem(d);
    const double x[3] = {0.3, 0.65, 0.2};
    const std::span<const double> xs(x, d);
    const double h = 1e-4;
    double lap = 0;
    for (std::size_t k = 0; k < d; ++k) {
      double xp[3] = {x[0], x[1], x[2]}, xm[3] = {x[0], x[1], x[2]};
      xp[k] += h;
      xm[k] -= h;
      lap += (p.exact->value(std::span<const double>(xp, d)) - 2 * p.exact->value(xs) +
              p.exact->value(std::span<const double>(xm, d))) /
             (h * h);
    }
    EXPECT_NEAR(p.source(xs), -lap, 1e-5 * std::abs(lap));
  }
}

TEST(Problems, QuarterRingLoadIsMinusLaplacian) {
  const QuarterRingProblem qr;
  const auto u = qr.solution();
  const auto b = qr.source();
  const double h = 1e-4;
  for (auto [r, th] : {std::pair{1.3, 0.4}, std::pair{1.75, 1.1}}) {
    const double x0 = r * std::cos(th), y0 = r * std::sin(th);
    auto at = [&](double x, double y) {
      const double p[2] = {x, y};
      return u.value(std::span<const double>(p, 2));
    };
    const double lap = (at(x0 + h, y0) + at(x0 - h, y0) + at(x0, y0 + h) + at(x0, y0 - h) - 4 * at(x0, y0)) / (h * h);
    const double p[2] = {x0, y0};
    EXPECT_NEAR(b(std::span<const double>(p, 2)), -lap, 1e-5 * std::max(1.0, std::abs(lap)));
  }
}

TEST(Problems, MakeProblemIds) {
  EXPECT_EQ(make_problem("sinsin").id, "sinsin");
  EXPECT_TRUE(make_problem("pointload").needs_reference());
  EXPECT_TRUE(make_problem("quarterring").mapped);
  EXPECT_THROW(make_problem("nope"), Error);
}

TEST(ParseMesh, Examples) {
  EXPECT_EQ(parse_mesh("41x41"), (std::vector<std::size_t>{41, 41}));
  EXPECT_EQ(parse_mesh("5x6x7"), (std::vector<std::size_t>{5, 6, 7}));
  EXPECT_EQ(mesh_label({5, 6, 7}), "5x6x7");
  EXPECT_THROW(parse_mesh("41"), Error);
  EXPECT_THROW(parse_mesh("2x5"), Error);
  EXPECT_THROW(parse_mesh("4x4x4x4"), Error);
  EXPECT_THROW(parse_mesh("ax5"), Error);
}

TEST(ConvergenceSlope, ExactPowerLaw) {
  const std::vector<double> h{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> e;
  for (double v : h) e.push_back(3 * std::pow(v, 1.5));
  EXPECT_NEAR(convergence_slope(h, e), 1.5, 1e-12);
}

TEST(ConvergenceSlope, RejectsDegenerateData) {
  const std::vector<double> h{0.1, 0.05, 0.025};
  EXPECT_THROW(convergence_slope(h, std::vector<double>{1, 0, 1}), Error);
  EXPECT_THROW(convergence_slope(std::vector<double>{0.1, 0.1, 0.1}, std::vector<double>{1, 2, 3}), Error);
  EXPECT_THROW(convergence_slope(std::vector<double>{0.1, 0.05}, std::vector<double>{1, 2}), Error);
}

TEST(StudySpec, Validation) {
  StudySpec s;
  s.problem = "pointload";
  s.methods = {Method::fem};
  s.meshes = {{41, 41}};
  EXPECT_NO_THROW(s.validate());
  s.meshes = {{42, 42}};
  EXPECT_THROW(s.validate(), Error);
  s.meshes = {{41, 41}};
  s.methods = {Method::pgd};
  s.modes = {0};
  EXPECT_THROW(s.validate(), Error);
  s.modes = {1};
  s.methods = {Method::hidenn_free};
  EXPECT_THROW(s.validate(), Error);
  s.methods = {Method::pgd_mapped};
  EXPECT_THROW(s.validate(), Error);
  s.problem = "sinsin";
  EXPECT_NO_THROW(s.validate());
  s.problem = "quarterring";
  s.methods = {Method::fem};
  EXPECT_THROW(s.validate(), Error);
}

TEST(StudyCells, OrderedAndDeduplicated) {
  StudySpec s;
  s.methods = {Method::pgd, Method::fem, Method::pgd};
  s.meshes = {{11, 11}, {5, 5}};
  s.modes = {2, 1};
  const auto cells = study_cells(s);
  ASSERT_EQ(cells.size(), 2u + 4u);
  EXPECT_EQ(cells[0].method, Method::fem);
  EXPECT_EQ(cells[0].q, 0u);
  EXPECT_EQ(cells[0].mesh, (std::vector<std::size_t>{5, 5}));
  EXPECT_EQ(cells[2].method, Method::pgd);
  EXPECT_EQ(cells[2].q, 1u);
  EXPECT_EQ(cells[3].q, 2u);
}

TEST(RunStudy, SinSinRowsAgreeAcrossMethods) {
  StudySpec s;
  s.methods = {Method::fem, Method::pgd, Method::cd, Method::pgd_mapped};
  s.meshes = {{11, 11}, {21, 21}};
  s.jobs = 2;
  s.optimizer.max_iterations = 500;
  const auto rows = run_study(s);
  ASSERT_EQ(rows.size(), 8u);
  for (const auto& r : rows) {
    ASSERT_TRUE(r.ok()) << r.failure;
    const double fem = energy_norm_error(solve_fem(unit_mesh(r.mesh), sinsin_problem().source), *sinsin_problem().exact);
    EXPECT_NEAR(r.rel_energy_err, fem, 0.01 * fem) << to_string(r.method);
    EXPECT_EQ(r.wall_ms, 0.0);
  }
}

TEST(RunStudy, DeterministicAcrossJobCounts) {
  StudySpec s;
  s.problem = "pointload";
  s.methods = {Method::pgd, Method::hidenn_pgd};
  s.meshes = {{9, 9}};
  s.modes = {1, 2};
  s.reference = 161;
  s.optimizer.max_iterations = 30;
  s.jobs = 1;
  const auto a = run_study(s);
  s.jobs = 3;
  const auto b = run_study(s);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(csv_row(a[k]), csv_row(b[k]));
}

TEST(RunCell, FailureIsRecorded) {
  const auto p = sinsin_problem();
  auto opt = OptimizerConfig{};
  opt.learning_rate = -1;
  const auto r = run_cell(p, make_reference(p), {Method::hidenn, {5, 5}, 0}, opt, {}, false);
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(r.converged);
  EXPECT_TRUE(std::isnan(r.rel_energy_err));
  EXPECT_EQ(check_csv_row(csv_row(r)), "");
}

TEST(Csv, RowsFollowSchema) {
  StudySpec s;
  s.methods = {Method::fem, Method::hidenn, Method::cd};
  s.meshes = {{7, 7}};
  s.modes = {2};
  s.optimizer.max_iterations = 10;
  s.timing = true;
  std::ostringstream out;
  write_csv(out, run_study(s));
  const auto ls = lines(out.str());
  ASSERT_EQ(ls.size(), 4u);
  EXPECT_EQ(ls[0], kCsvHeader);
  for (std::size_t k = 1; k < ls.size(); ++k) EXPECT_EQ(check_csv_row(ls[k]), "") << ls[k];
  EXPECT_NE(ls[1].find("fem,7x7,0,25,"), std::string::npos);
  EXPECT_NE(ls[2].find("cd,7x7,2,20,"), std::string::npos);
  EXPECT_NE(ls[3].find("hidenn,7x7,0,"), std::string::npos);
}

TEST(Csv, CheckerCatchesBadRows) {
  EXPECT_NE(check_csv_row("fem,7x7,0,25,0.1,0.2,0"), "");
  EXPECT_NE(check_csv_row("foo,7x7,0,25,0.1,0.2,0,true"), "");
  EXPECT_NE(check_csv_row("fem,7x7,1,25,0.1,0.2,0,true"), "");
  EXPECT_NE(check_csv_row("pgd,7x7,0,10,0.1,0.2,0,true"), "");
  EXPECT_NE(check_csv_row("fem,7x7,0,26,0.1,0.2,0,true"), "");
  EXPECT_NE(check_csv_row("fem,7x7,0,25,x,0.2,0,true"), "");
  EXPECT_NE(check_csv_row("fem,7x7,0,25,0.1,0.2,0,maybe"), "");
  EXPECT_EQ(check_csv_row("fem,7x7,0,25,nan,nan,0,false"), "");
  EXPECT_EQ(check_csv_row("pgd,7x7,2,20,0.1,-0.2,3.5,true"), "");
}

TEST(Decomposition, PythagoreanSplit) {
  const auto p = pointload_problem();
  const auto ref = reference_field(p, 161);
  for (std::size_t q : {1u, 3u}) {
    const auto d = decomposition_check(TensorMesh::unit_square(21, 21), p.source, q, *ref);
    EXPECT_LE(d.residual, 1e-6);
    EXPECT_LE(d.galerkin, 1e-8);
    EXPECT_GT(d.mode, 0);
    EXPECT_LT(d.fem, d.total);
  }
}

TEST(ModeDecay, SeparableLoadIsExact) {
  const auto decay = mode_decay_study({{9, 9}, {17, 17}}, 1, 3, sinsin_problem());
  for (const auto& d : decay) {
    EXPECT_TRUE(d.exact);
    EXPECT_TRUE(std::isnan(d.slope));
    for (double e : d.errors) EXPECT_LE(e, kExactModeError);
  }
}

TEST(ModeDecay, FullRankRecoversFem) {
  const auto curve = mode_error_curve(TensorMesh::unit_square(9, 9), pointload_problem().source, 9);
  EXPECT_LE(curve.back(), 1e-8);
  for (std::size_t k = 1; k < curve.size(); ++k) EXPECT_LE(curve[k], curve[k - 1] * (1 + 1e-12));
  const auto decay = mode_decay_study({{17, 17}}, 1, 5, pointload_problem());
  EXPECT_FALSE(decay[0].exact);
  EXPECT_LT(decay[0].slope, 0);
  EXPECT_THROW(mode_decay_study({{9, 9}}, 3, 2, pointload_problem()), Error);
}

TEST(SuggestModeCount, MatchesIndependentSweep) {
  const auto p = pointload_problem();
  const auto mesh = TensorMesh::unit_square(9, 9);
  const auto disc = discretize(mesh, p.source);
  const auto fem = solve_fem(disc);
  const double norm = std::sqrt(energy_form(disc.op, fem));
  for (double target : {0.2, 1e-2, 1e-3}) {
    std::size_t expected = 9;
    for (std::size_t q = 1; q <= 9; ++q) {
      const auto u = expand_to_nodal(solve_pgd(disc, q).solution);
      const NodalField v(mesh, u.values - fem.values);
      if (std::sqrt(std::max(0.0, energy_form(disc.op, v))) / norm <= target) {
        expected = q;
        break;
      }
    }
    EXPECT_EQ(suggest_mode_count({9, 9}, p.source, target).q, expected) << target;
  }
}

TEST(SuggestModeCount, EdgeCases) {
  const auto p = pointload_problem();
  EXPECT_EQ(suggest_mode_count({9, 7}, p.source, 0.0).q, 7u);
  EXPECT_EQ(suggest_mode_count({9, 9}, sinsin_problem().source, 1e-6).q, 1u);
  EXPECT_THROW(suggest_mode_count({9, 9}, p.source, 1.0), Error);
  EXPECT_THROW(suggest_mode_count({9, 9}, p.source, -0.1), Error);
}

TEST(Config, ParsesKeyValues) {
  std::istringstream in("# study\nproblem = pointload  # trailing\n\nmeshes=41x41, 81x81\nmodes = 1-3,5\n");
  const auto c = Config::parse(in);
  EXPECT_EQ(*c.get("problem"), "pointload");
  EXPECT_EQ(parse_word_list(*c.get("meshes")), (std::vector<std::string>{"41x41", "81x81"}));
  EXPECT_EQ(parse_size_list(*c.get("modes")), (std::vector<std::size_t>{1, 2, 3, 5}));
  EXPECT_FALSE(c.has("output"));
  EXPECT_THROW(c.reject_unknown({"problem", "meshes"}), Error);
  EXPECT_NO_THROW(c.reject_unknown({"problem", "meshes", "modes"}));
  EXPECT_THROW(c.require({"output"}), Error);
}

TEST(Config, RejectsMalformed) {
  std::istringstream dup("a = 1\na = 2\n");
  EXPECT_THROW(Config::parse(dup), Error);
  std::istringstream noeq("just words\n");
  EXPECT_THROW(Config::parse(noeq), Error);
  Config c;
  c.set("n", "-3");
  EXPECT_THROW(c.get_uint("n", 0), Error);
  c.set("x", "1e-3z");
  EXPECT_THROW(c.get_double("x", 0), Error);
  c.set("b", "perhaps");
  EXPECT_THROW(c.get_bool("b", false), Error);
  EXPECT_THROW(parse_size_list("3-1"), Error);
  EXPECT_THROW(parse_size_list("1,,2"), Error);
}

TEST(Cli, SolveWritesCsvAndModes) {
  TempDir dir;
  const auto r = run_cli({"solve", "--method", "pgd", "--mesh", "11x11", "--modes", "2", "--problem", "sinsin",
                          "--out", dir.file("run.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(slurp(dir.file("run.csv")));
  ASSERT_EQ(ls.size(), 2u);
  EXPECT_EQ(ls[0], kCsvHeader);
  EXPECT_EQ(check_csv_row(ls[1]), "");
  std::ifstream modes(dir.file("run.modes"));
  ASSERT_TRUE(modes.good());
  const auto s = read_separated(modes);
  EXPECT_EQ(s.mesh(), TensorMesh::unit_square(11, 11));
}

TEST(Cli, SolveFemWritesField) {
  TempDir dir;
  const auto r = run_cli({"solve", "--method", "fem", "--mesh", "6x7", "--problem", "sinsin", "--out",
                          dir.file("a.csv"), "--solution", dir.file("u.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(dir.file("u.txt"));
  const auto u = read_nodal(in);
  EXPECT_EQ(u.mesh, TensorMesh::unit_square(6, 7));
  const auto fem = solve_fem(u.mesh, sinsin_problem().source);
  EXPECT_EQ(u.values, fem.values);
}

TEST(Cli, ZeroModesIsUsageError) {
  TempDir dir;
  const auto r = run_cli({"solve", "--method", "pgd", "--mesh", "11x11", "--modes", "0", "--problem", "sinsin",
                          "--out", dir.file("x.csv")});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_FALSE(fs::exists(dir.file("x.csv")));
}

TEST(Cli, UsageErrors) {
  TempDir dir;
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"solve", "--method", "pgd", "--problem", "sinsin"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"solve", "--method", "magic", "--mesh", "5x5", "--problem", "sinsin", "--out", dir.file("a")})
                .code,
            cli::kExitUsage);
  EXPECT_EQ(run_cli({"solve", "--method", "fem", "--mesh", "5x5", "--problem", "nope", "--out", dir.file("a")}).code,
            cli::kExitUsage);
  EXPECT_EQ(run_cli({"study", "--spec", dir.file("missing.cfg")}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"modes", "--problem", "pointload", "--coarse", "9x9", "--target", "1.5"}).code,
            cli::kExitUsage);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
}

TEST(Cli, TinyBudgetIsSolverFailure) {
  TempDir dir;
  const auto r = run_cli({"solve", "--method", "hidenn-pgd", "--mesh", "9x9", "--modes", "2", "--problem",
                          "pointload", "--reference", "161", "--max-iterations", "1", "--out", dir.file("h.csv")});
  EXPECT_EQ(r.code, cli::kExitSolver);
  EXPECT_TRUE(fs::exists(dir.file("h.modes")));
  const auto ls = lines(slurp(dir.file("h.csv")));
  ASSERT_EQ(ls.size(), 2u);
  EXPECT_NE(ls[1].find(",false"), std::string::npos);
}

TEST(Cli, StudyFromSpec) {
  TempDir dir;
  write(dir.file("s.cfg"), "problem = sinsin\nmethods = fem, pgd\nmeshes = 5x5, 9x9, 17x17\nmodes = 1\noutput = " +
                               dir.file("s.csv") + "\n");
  const auto r = run_cli({"study", "--spec", dir.file("s.cfg"), "--jobs", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("slope fem Q=0"), std::string::npos);
  const auto ls = lines(slurp(dir.file("s.csv")));
  ASSERT_EQ(ls.size(), 7u);
  for (std::size_t k = 1; k < ls.size(); ++k) EXPECT_EQ(check_csv_row(ls[k]), "");
}

TEST(Cli, StudyUnknownKeyIsUsageError) {
  TempDir dir;
  write(dir.file("s.cfg"), "problem = sinsin\nmethods = fem\nmeshes = 5x5\ncolour = blue\n");
  EXPECT_EQ(run_cli({"study", "--spec", dir.file("s.cfg")}).code, cli::kExitUsage);
}

TEST(Cli, StudyIsReproducible) {
  TempDir dir;
  write(dir.file("s.cfg"),
        "problem = pointload\nmethods = pgd, hidenn-pgd\nmeshes = 9x9\nmodes = 1-2\nreference = 161\n"
        "max_iterations = 20\n");
  const auto a = run_cli({"study", "--spec", dir.file("s.cfg"), "--seed", "7"});
  const auto b = run_cli({"study", "--spec", dir.file("s.cfg"), "--seed", "7"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, ModesCommand) {
  const auto r = run_cli({"modes", "--problem", "pointload", "--coarse", "9x9", "--target", "1e-2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_GE(ls.size(), 3u);
  EXPECT_EQ(ls[0], "Q=" + std::to_string(suggest_mode_count({9, 9}, pointload_problem().source, 1e-2).q));
  EXPECT_EQ(ls[1], "Q,mode_err");
  EXPECT_EQ(ls.size(), 2u + 9u);
}

TEST(Cli, ProblemFile) {
  TempDir dir;
  write(dir.file("p.txt"), "kind = pointload\npoint = 0.25,0.5\nmagnitude = 2\n");
  const auto r = run_cli({"solve", "--method", "fem", "--mesh", "9x9", "--problem", dir.file("p.txt"), "--reference",
                          "33", "--out", dir.file("p.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(dir.file("p.field"));
  const auto u = read_nodal(in);
  const double at[2] = {0.25, 0.5};
  const auto expected = solve_fem(u.mesh, SourceTerm::point_load(2.0, at));
  EXPECT_EQ(u.values, expected.values);
}

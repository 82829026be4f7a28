#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "pwfbm/cli.hpp"

using namespace pwfbm;
using namespace pwfbm::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pwfbm_cli_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

// Runs the built executable; stdout goes to `stdout_file` when given.
int run_cli(const std::string& args, const fs::path& stdout_file = {}) {
  std::string cmd = std::string("\"") + PWFBM_CLI_PATH + "\" " + args;
  cmd += stdout_file.empty() ? " > /dev/null" : " > \"" + stdout_file.string() + "\"";
  cmd += " 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig golden_real() {
  RunConfig c;
  c.hurst = 0.7;
  c.horizon = 1.0;
  c.grid_points = 9;
  c.terms = 32;
  c.paths = 2;
  c.seed = 42;
  return c;
}

RunConfig golden_complex() {
  RunConfig c;
  c.hurst = 0.3;
  c.horizon = 2.0;
  c.grid_points = 5;
  c.terms = 16;
  c.paths = 2;
  c.seed = 7;
  c.mode = Mode::complex;
  return c;
}

std::vector<std::vector<double>> parse_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string line;
  std::getline(ss, line);
  while (std::getline(ss, line)) {
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Cli, GoldenRealInProcess) {
  std::ostringstream out, err;
  ASSERT_EQ(cmd_generate(golden_real(), out, err), kExitOk);
  EXPECT_EQ(out.str(), slurp(fs::path(PWFBM_GOLDEN_DIR) / "generate_real.csv"));
}

TEST(Cli, GoldenComplexInProcess) {
  std::ostringstream out, err;
  ASSERT_EQ(cmd_generate(golden_complex(), out, err), kExitOk);
  EXPECT_EQ(out.str(), slurp(fs::path(PWFBM_GOLDEN_DIR) / "generate_complex.csv"));
}

TEST(Cli, GoldenThroughExecutable) {
  const fs::path a = scratch("real.csv"), b = scratch("complex.csv");
  ASSERT_EQ(run_cli("generate --hurst 0.7 --horizon 1 --grid-points 9 --terms 32 --paths 2 --seed 42 --out \"" +
                    a.string() + "\""),
            kExitOk);
  EXPECT_EQ(slurp(a), slurp(fs::path(PWFBM_GOLDEN_DIR) / "generate_real.csv"));
  ASSERT_EQ(run_cli("generate --hurst 0.3 --horizon 2 --grid-points 5 --terms 16 --paths 2 --seed 7 --mode complex",
                    b),
            kExitOk);
  EXPECT_EQ(slurp(b), slurp(fs::path(PWFBM_GOLDEN_DIR) / "generate_complex.csv"));
}

TEST(Cli, PathsAgreeWithLibrarySampler) {
  const RunConfig c = golden_real();
  std::ostringstream out, err;
  ASSERT_EQ(cmd_generate(c, out, err), kExitOk);
  const auto rows = parse_csv(out.str());
  ASSERT_EQ(rows.size(), 18u);
  const ExpansionSpec spec(HurstModel(c.hurst, c.horizon), static_cast<std::size_t>(c.terms));
  const auto grid = cli::detail::uniform_grid(c.horizon, 9);
  for (std::uint64_t p = 0; p < 2; ++p) {
    const auto path = sample_real_path(spec, grid, c.seed, p);
    for (std::size_t j = 0; j < 9; ++j) {
      const auto& r = rows[p * 9 + j];
      EXPECT_EQ(r[0], double(p));
      EXPECT_EQ(r[1], grid[j]);
      EXPECT_EQ(r[2], path.values[j].real());
    }
  }
}

TEST(Cli, OutputIndependentOfThreadBatching) {
  RunConfig c = golden_real();
  c.paths = 37;
  std::ostringstream a, b, err;
  ASSERT_EQ(cmd_generate(c, a, err), kExitOk);
  ASSERT_EQ(cmd_generate(c, b, err), kExitOk);
  EXPECT_EQ(a.str(), b.str());
  c.paths = 5;
  std::ostringstream head;
  ASSERT_EQ(cmd_generate(c, head, err), kExitOk);
  EXPECT_EQ(a.str().substr(0, head.str().size()), head.str());
}

TEST(Cli, JsonSchema) {
  RunConfig c = golden_complex();
  c.format = Format::json;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_generate(c, out, err), kExitOk);
  const auto j = nlohmann::json::parse(out.str());
  for (const char* key : {"hurst", "horizon", "terms", "seed", "mode", "grid", "paths"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["mode"], "complex");
  ASSERT_EQ(j["paths"].size(), 2u);
  EXPECT_EQ(j["grid"].size(), 5u);
  EXPECT_EQ(j["paths"][1]["path_id"], 1);
  EXPECT_EQ(j["paths"][1]["re"].size(), 5u);
  EXPECT_EQ(j["paths"][1]["im"].size(), 5u);
  // Values round-trip to the CSV ones.
  std::ostringstream csv;
  c.format = Format::csv;
  ASSERT_EQ(cmd_generate(c, csv, err), kExitOk);
  const auto rows = parse_csv(csv.str());
  EXPECT_EQ(j["paths"][1]["re"][3].get<double>(), rows[8][2]);
  EXPECT_EQ(j["paths"][1]["im"][3].get<double>(), rows[8][3]);
}

TEST(Cli, InvalidConfigurationExitsTwo) {
  std::ostringstream out, err;
  RunConfig c = golden_real();
  c.hurst = 1.0;
  EXPECT_EQ(cmd_generate(c, out, err), kExitInvalid);
  EXPECT_NE(err.str().find("hurst"), std::string::npos);
  c = golden_real();
  c.grid_points = 1;
  EXPECT_EQ(cmd_generate(c, out, err), kExitInvalid);
  c = golden_real();
  c.terms = 0;
  EXPECT_EQ(cmd_generate(c, out, err), kExitInvalid);
  EXPECT_EQ(run_cli("generate --hurst 0"), kExitInvalid);
  EXPECT_EQ(run_cli("generate --mode sideways"), kExitInvalid);
  EXPECT_EQ(run_cli("generate --bogus 1"), kExitInvalid);
  EXPECT_EQ(run_cli("kernel --what nothing"), kExitInvalid);
  EXPECT_EQ(run_cli("selftest --level slow"), kExitInvalid);
  EXPECT_EQ(run_cli("convergence --n-list 64,64"), kExitInvalid);
  EXPECT_EQ(run_cli("convergence --grid-points 100"), kExitInvalid);
}

TEST(Cli, IoFailureExitsThree) {
  std::ostringstream out, err;
  RunConfig c = golden_real();
  c.output = "/nonexistent-dir/x.csv";
  EXPECT_EQ(cmd_generate(c, out, err), kExitIo);
  EXPECT_EQ(run_cli("generate --out /nonexistent-dir/x.csv"), kExitIo);
}

TEST(Cli, TooFewReplicationsExitsFour) {
  EXPECT_EQ(run_cli("convergence --reps 1 --n-list 64,128 --grid-points 1025"), kExitInsufficientReps);
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
  const fs::path cfg = scratch("cfg.json"), out = scratch("cfg_out.csv");
  {
    std::ofstream f(cfg);
    f << R"({"hurst": 0.2, "horizon": 1.0, "grid_points": 9, "terms": 32, "paths": 2, "seed": 42})";
  }
  ASSERT_EQ(run_cli("generate --config \"" + cfg.string() + "\" --hurst 0.7", out), kExitOk);
  EXPECT_EQ(slurp(out), slurp(fs::path(PWFBM_GOLDEN_DIR) / "generate_real.csv"));

  RunConfig c = load_config_file(cfg.string());
  EXPECT_EQ(c.hurst, 0.2);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.mode, Mode::real);

  {
    std::ofstream f(cfg);
    f << R"({"hurst": 0.2, "colour": "red"})";
  }
  EXPECT_THROW(load_config_file(cfg.string()), ConfigError);
  EXPECT_EQ(run_cli("generate --config \"" + cfg.string() + "\""), kExitInvalid);
  {
    std::ofstream f(cfg);
    f << R"({"terms": "many"})";
  }
  try {
    load_config_file(cfg.string());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "terms");
  }
  EXPECT_THROW(load_config_file(scratch("missing.json").string()), ConfigError);
}

TEST(Cli, NListParsing) {
  EXPECT_EQ(parse_n_list("64..1024"), (std::vector<std::size_t>{64, 128, 256, 512, 1024}));
  EXPECT_EQ(parse_n_list("10,20,40"), (std::vector<std::size_t>{10, 20, 40}));
  EXPECT_THROW(parse_n_list("10,x"), ConfigError);
  EXPECT_THROW(parse_n_list("0,5"), ConfigError);
  EXPECT_THROW(parse_n_list("100..10"), ConfigError);
}

TEST(Cli, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(Cli, KernelTables) {
  KernelConfig k;
  k.what = "phi";
  k.min = 0.0;
  k.max = 4.0;
  k.grid_points = 5;
  std::ostringstream out, err;
  ASSERT_EQ(cmd_kernel_eval(k, out, err), kExitOk);
  auto rows = parse_csv(out.str());
  ASSERT_EQ(rows.size(), 5u);
  for (const auto& r : rows) {
    EXPECT_NEAR(r[1], std::cos(r[0]), 1e-13);
    EXPECT_NEAR(r[2], std::sin(r[0]), 1e-13);
  }

  k.what = "sigma2";
  k.horizon = 2.0;
  k.min = -3;
  k.max = 3;
  std::ostringstream s2;
  ASSERT_EQ(cmd_kernel_eval(k, s2, err), kExitOk);
  rows = parse_csv(s2.str());
  ASSERT_EQ(rows.size(), 7u);
  for (const auto& r : rows) EXPECT_NEAR(r[2], 0.5, 1e-12);

  k = {};
  k.hurst = 0.3;
  k.what = "S_T";
  k.min = 0.0;
  k.max = 2.0;
  k.grid_points = 3;
  std::ostringstream st;
  ASSERT_EQ(cmd_kernel_eval(k, st, err), kExitOk);
  rows = parse_csv(st.str());
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_NEAR(rows[0][2], HurstModel(0.3, 1.0).VT(), 1e-12);

  k.what = "mhat";
  std::ostringstream mh;
  ASSERT_EQ(cmd_kernel_eval(k, mh, err), kExitOk);
  rows = parse_csv(mh.str());
  ASSERT_EQ(rows.size(), 3u);
  const HurstModel m(0.3, 1.0);
  for (const auto& r : rows) {
    const cplx want = mhat(1.0, r[0], m);
    EXPECT_NEAR(r[1], want.real(), 1e-14);
    EXPECT_NEAR(r[2], want.imag(), 1e-14);
  }
}

TEST(Cli, ConvergenceReportSchema) {
  ConvergenceConfig c;
  c.hurst = 0.5;
  c.n_list = {64, 128, 256};
  c.reps = 100;
  c.grid_points = 1025;
  c.seed = 3;
  std::ostringstream out, err;
  const int code = cmd_convergence(c, out, err);
  EXPECT_TRUE(code == kExitOk || code == kExitCheckFailed);
  const auto j = nlohmann::json::parse(out.str());
  for (const char* key : {"hurst", "horizon", "n_list", "errors", "stderrs", "slope", "slope_ci", "expected_slope"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["errors"].size(), 3u);
  EXPECT_EQ(j["expected_slope"].get<double>(), -0.5);
  EXPECT_EQ(code == kExitOk, std::fabs(j["slope"].get<double>() + 0.5) <= 0.15);
}

TEST(Cli, SelftestFastPasses) {
  std::ostringstream out;
  EXPECT_EQ(cmd_selftest({}, out), kExitOk);
  EXPECT_NE(out.str().find("all checks passed"), std::string::npos);
  EXPECT_EQ(run_cli("selftest --level fast"), kExitOk);
}

TEST(Cli, SelftestDetectsCorruption) {
  SelftestOptions opt;
  opt.corrupt_zero_table = true;
  std::ostringstream out;
  EXPECT_EQ(cmd_selftest(opt, out), kExitCheckFailed);
  EXPECT_NE(out.str().find("zero_table"), std::string::npos);
  EXPECT_NE(out.str().find("FAIL"), std::string::npos);
  const fs::path log = scratch("selftest.txt");
  EXPECT_EQ(run_cli("selftest --corrupt-zero-table", log), kExitCheckFailed);
  EXPECT_NE(slurp(log).find("zero_table"), std::string::npos);
}

// pwfbm: sample fBm paths, tabulate kernels, run convergence studies and self-tests.
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pwfbm/cli.hpp"

namespace {

using namespace pwfbm;
using namespace pwfbm::cli;

struct Flags {
  double hurst = 0.5;
  double horizon = 1.0;
  std::int64_t grid_points = 0;
  std::int64_t terms = 0;
  std::int64_t paths = 0;
  std::uint64_t seed = 0;
  std::string mode, out, format, config, n_list, level = "fast", what = "phi";
  std::int64_t reps = 500;
  double min = 0.0, max = 10.0;
  bool corrupt = false;
};

template <class T>
void take(const CLI::App& app, const char* name, const T& from, T& to) {
  if (app.count(name) > 0) to = from;
}

int run_generate(const CLI::App& sub, const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) c = load_config_file(f.config);
  take(sub, "--hurst", f.hurst, c.hurst);
  take(sub, "--horizon", f.horizon, c.horizon);
  take(sub, "--grid-points", f.grid_points, c.grid_points);
  take(sub, "--terms", f.terms, c.terms);
  take(sub, "--paths", f.paths, c.paths);
  take(sub, "--seed", f.seed, c.seed);
  take(sub, "--out", f.out, c.output);
  if (sub.count("--mode") > 0) c.mode = parse_mode(f.mode);
  if (sub.count("--format") > 0) c.format = parse_format(f.format);
  return cmd_generate(c);
}

int run_kernel(const CLI::App& sub, const Flags& f) {
  KernelConfig k;
  k.hurst = f.hurst;
  k.horizon = f.horizon;
  k.what = f.what;
  k.min = f.min;
  k.max = f.max;
  take(sub, "--grid-points", f.grid_points, k.grid_points);
  k.output = f.out;
  return cmd_kernel_eval(k);
}

int run_convergence(const CLI::App& sub, const Flags& f) {
  ConvergenceConfig c;
  c.hurst = f.hurst;
  c.horizon = f.horizon;
  if (sub.count("--n-list") > 0) c.n_list = parse_n_list(f.n_list);
  c.reps = f.reps;
  c.seed = f.seed;
  take(sub, "--grid-points", f.grid_points, c.grid_points);
  c.output = f.out;
  return cmd_convergence(c);
}

int run_selftest(const Flags& f) {
  SelftestOptions opt;
  if (f.level == "full") opt.level = SelftestLevel::full;
  else if (f.level != "fast") throw ConfigError("level", "expected fast or full, got '" + f.level + "'");
  opt.corrupt_zero_table = f.corrupt;
  return cmd_selftest(opt);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Paley-Wiener series sampler and spectral toolkit for fractional Brownian motion"};
  app.require_subcommand(1);
  Flags f;

  auto* gen = app.add_subcommand("generate", "Write sample paths on a uniform grid of [0, T]");
  gen->add_option("--hurst", f.hurst, "Hurst index in (0, 1)");
  gen->add_option("--horizon", f.horizon, "Horizon T > 0");
  gen->add_option("--grid-points", f.grid_points, "Grid points including both endpoints (>= 2)");
  gen->add_option("--terms", f.terms, "Series terms N (>= 1)");
  gen->add_option("--paths", f.paths, "Number of paths (>= 1)");
  gen->add_option("--seed", f.seed, "64-bit seed");
  gen->add_option("--mode", f.mode, "real or complex");
  gen->add_option("--out", f.out, "Output file; '-' or absent writes to stdout");
  gen->add_option("--format", f.format, "csv or json");
  gen->add_option("--config", f.config, "JSON config file; flags take precedence");

  auto* ker = app.add_subcommand("kernel", "Tabulate phi, mhat_T, S_T or sigma^2 as CSV");
  ker->add_option("--hurst", f.hurst, "Hurst index in (0, 1)");
  ker->add_option("--horizon", f.horizon, "Horizon T > 0");
  ker->add_option("--what", f.what, "phi, mhat, S_T or sigma2");
  ker->add_option("--min", f.min, "Grid start (first index for sigma2)");
  ker->add_option("--max", f.max, "Grid end (last index for sigma2)");
  ker->add_option("--grid-points", f.grid_points, "Points per axis");
  ker->add_option("--out", f.out, "Output file; stdout when absent");

  auto* conv = app.add_subcommand("convergence", "Monte Carlo sup-error against truncation level");
  conv->add_option("--hurst", f.hurst, "Hurst index in (0, 1)");
  conv->add_option("--horizon", f.horizon, "Horizon T > 0");
  conv->add_option("--n-list", f.n_list, "Increasing truncation levels: a,b,c or a..b (doubling)");
  conv->add_option("--reps", f.reps, "Replications (>= 100)");
  conv->add_option("--seed", f.seed, "64-bit seed");
  conv->add_option("--grid-points", f.grid_points, "Grid points for the sup (>= 1025)");
  conv->add_option("--out", f.out, "Report file; stdout when absent");

  auto* st = app.add_subcommand("selftest", "Run the built-in invariant checks");
  st->add_option("--level", f.level, "fast or full");
  st->add_flag("--corrupt-zero-table", f.corrupt)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*gen) return run_generate(*gen, f);
    if (*ker) return run_kernel(*ker, f);
    if (*conv) return run_convergence(*conv, f);
    return run_selftest(f);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
}

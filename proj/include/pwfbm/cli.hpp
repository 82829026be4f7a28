// Command implementations behind the pwfbm executable. Each command reports
// through the streams it is given and returns the process exit code.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pwfbm/expansion.hpp"
#include "pwfbm/model.hpp"
#include "pwfbm/rkhs.hpp"
#include "pwfbm/selftest.hpp"
#include "pwfbm/specfun.hpp"
#include "pwfbm/spectral.hpp"

namespace pwfbm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitInsufficientReps = 4;

enum class Mode { real, complex };
enum class Format { csv, json };

/// Invalid user input; field() names the offending setting.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument("invalid " + field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct RunConfig {
  double hurst = 0.5;
  double horizon = 1.0;
  std::int64_t grid_points = 1001;
  std::int64_t terms = 1024;
  std::int64_t paths = 1;
  std::uint64_t seed = 0;
  Mode mode = Mode::real;
  std::string output;
  Format format = Format::csv;
};

struct KernelConfig {
  double hurst = 0.5;
  double horizon = 1.0;
  std::string what = "phi";
  double min = 0.0;
  double max = 10.0;
  std::int64_t grid_points = 11;
  std::string output;
};

struct ConvergenceConfig {
  double hurst = 0.5;
  double horizon = 1.0;
  std::vector<std::size_t> n_list = {64, 128, 256, 512, 1024};
  std::int64_t reps = 500;
  std::uint64_t seed = 0;
  std::int64_t grid_points = 4097;
  std::string output;
};

/// 17 significant digits, enough to round-trip any double.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline Mode parse_mode(const std::string& s) {
  if (s == "real") return Mode::real;
  if (s == "complex") return Mode::complex;
  throw ConfigError("mode", "expected real or complex, got '" + s + "'");
}

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw ConfigError("format", "expected csv or json, got '" + s + "'");
}

/// "64,128,256" or "64..1024" (doubling from the first to the last value).
inline std::vector<std::size_t> parse_n_list(const std::string& s) {
  auto to_size = [](const std::string& tok) -> std::size_t {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(tok, &used);
    } catch (const std::exception&) {
      throw ConfigError("n-list", "not an integer: '" + tok + "'");
    }
    if (used != tok.size() || v < 1) throw ConfigError("n-list", "entries must be positive integers, got '" + tok + "'");
    return static_cast<std::size_t>(v);
  };
  std::vector<std::size_t> out;
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const std::size_t lo = to_size(s.substr(0, dots)), hi = to_size(s.substr(dots + 2));
    if (hi < lo) throw ConfigError("n-list", "range end below start");
    for (std::size_t n = lo; n <= hi; n *= 2) out.push_back(n);
    return out;
  }
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(to_size(tok));
  if (out.empty()) throw ConfigError("n-list", "empty list");
  return out;
}

namespace detail {

inline void check_hurst(double h) {
  if (!(h > 0.0 && h < 1.0)) throw ConfigError("hurst", "must lie in (0, 1), got " + format_double(h));
}

inline void check_horizon(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("horizon", "must be positive, got " + format_double(t));
}

inline std::vector<double> uniform_grid(double horizon, std::size_t points) {
  std::vector<double> g(points);
  for (std::size_t j = 0; j < points; ++j) {
    g[j] = horizon * static_cast<double>(j) / static_cast<double>(points - 1);
  }
  g.back() = horizon;
  return g;
}

// Writes through a file when a path is given, else through the fallback.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      os_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) throw std::ios_base::failure("cannot open '" + path + "' for writing");
    os_ = file_.get();
  }
  std::ostream& stream() { return *os_; }
  void finish() {
    os_->flush();
    if (!*os_) throw std::ios_base::failure("write failed");
    if (file_) {
      file_->close();
      if (!*file_) throw std::ios_base::failure("close failed");
    }
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_ = nullptr;
};

// Samples replications in batches across worker threads and hands them to
// `emit` on the calling thread in path_id order.
template <class Emit>
void for_each_path(const PathSampler& sampler, const RunConfig& c, Emit&& emit) {
  const bool cx = c.mode == Mode::complex;
  const auto workers = static_cast<std::int64_t>(std::max(1u, std::thread::hardware_concurrency()));
  const std::int64_t batch = 4 * workers;
  for (std::int64_t first = 0; first < c.paths; first += batch) {
    const std::int64_t count = std::min(batch, c.paths - first);
    std::vector<SamplePath> out(static_cast<std::size_t>(count));
    auto work = [&](std::int64_t w) {
      for (std::int64_t k = w; k < count; k += workers) {
        const auto stream = static_cast<std::uint64_t>(first + k);
        out[static_cast<std::size_t>(k)] = cx ? sampler.sample_complex(c.seed, stream) : sampler.sample_real(c.seed, stream);
      }
    };
    if (workers == 1 || count == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (std::int64_t w = 0; w < std::min(workers, count); ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    for (std::int64_t k = 0; k < count; ++k) emit(first + k, out[static_cast<std::size_t>(k)]);
  }
}

}  // namespace detail

inline void validate(const RunConfig& c) {
  detail::check_hurst(c.hurst);
  detail::check_horizon(c.horizon);
  if (c.grid_points < 2) throw ConfigError("grid-points", "must be >= 2, got " + std::to_string(c.grid_points));
  if (c.terms < 1) throw ConfigError("terms", "must be >= 1, got " + std::to_string(c.terms));
  if (c.paths < 1) throw ConfigError("paths", "must be >= 1, got " + std::to_string(c.paths));
}

/// Applies the keys of a JSON object to a RunConfig; unknown keys are errors.
inline void apply_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.is_object()) throw ConfigError("config", "top level must be an object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "hurst") c.hurst = v.get<double>();
      else if (key == "horizon") c.horizon = v.get<double>();
      else if (key == "grid_points") c.grid_points = v.get<std::int64_t>();
      else if (key == "terms") c.terms = v.get<std::int64_t>();
      else if (key == "paths") c.paths = v.get<std::int64_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "mode") c.mode = parse_mode(v.get<std::string>());
      else if (key == "output") c.output = v.get<std::string>();
      else if (key == "format") c.format = parse_format(v.get<std::string>());
      else throw ConfigError("config", "unknown key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(key, std::string("wrong type in config: ") + e.what());
    }
  }
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  RunConfig c;
  apply_json(j, c);
  return c;
}

/// Writes paths of the series sampler on a uniform grid of [0, T].
inline int cmd_generate(const RunConfig& c, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    validate(c);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  const HurstModel model(c.hurst, c.horizon);
  const ExpansionSpec spec(model, static_cast<std::size_t>(c.terms));
  const PathSampler sampler(spec, detail::uniform_grid(c.horizon, static_cast<std::size_t>(c.grid_points)));
  const bool cx = c.mode == Mode::complex;
  try {
    detail::Sink sink(c.output, out);
    std::ostream& os = sink.stream();
    const auto& grid = sampler.grid();
    if (c.format == Format::csv) {
      os << (cx ? "path_id,t,re,im\n" : "path_id,t,value\n");
      detail::for_each_path(sampler, c, [&](std::int64_t p, const SamplePath& path) {
        for (std::size_t j = 0; j < grid.size(); ++j) {
          os << p << ',' << format_double(grid[j]) << ',' << format_double(path.values[j].real());
          if (cx) os << ',' << format_double(path.values[j].imag());
          os << '\n';
        }
      });
    } else {
      nlohmann::ordered_json doc;
      doc["hurst"] = c.hurst;
      doc["horizon"] = c.horizon;
      doc["terms"] = c.terms;
      doc["seed"] = c.seed;
      doc["mode"] = cx ? "complex" : "real";
      doc["grid"] = grid;
      doc["paths"] = nlohmann::ordered_json::array();
      detail::for_each_path(sampler, c, [&](std::int64_t p, const SamplePath& path) {
        nlohmann::ordered_json entry;
        entry["path_id"] = p;
        if (cx) {
          std::vector<double> re, im;
          for (const auto& v : path.values) {
            re.push_back(v.real());
            im.push_back(v.imag());
          }
          entry["re"] = re;
          entry["im"] = im;
        } else {
          std::vector<double> val;
          for (const auto& v : path.values) val.push_back(v.real());
          entry["value"] = val;
        }
        doc["paths"].push_back(std::move(entry));
      });
      os << doc.dump(1) << '\n';
    }
    sink.finish();
  } catch (const std::ios_base::failure& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}

/// Tabulates one of phi, mhat (at t = T), S_T or sigma2 as CSV.
inline int cmd_kernel_eval(const KernelConfig& k, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    detail::check_hurst(k.hurst);
    detail::check_horizon(k.horizon);
    if (k.what != "phi" && k.what != "mhat" && k.what != "S_T" && k.what != "sigma2") {
      throw ConfigError("what", "expected phi, mhat, S_T or sigma2, got '" + k.what + "'");
    }
    if (!(k.min <= k.max)) throw ConfigError("min", "must not exceed max");
    if (k.grid_points < 1) throw ConfigError("grid-points", "must be >= 1");
    if (k.what == "sigma2" && (k.min != std::floor(k.min) || k.max != std::floor(k.max))) {
      throw ConfigError("min", "sigma2 takes integer index bounds");
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  const HurstModel model(k.hurst, k.horizon);
  auto axis = [&] {
    std::vector<double> a;
    const auto n = static_cast<std::size_t>(k.grid_points);
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(n == 1 ? k.min : k.min + (k.max - k.min) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    if (n > 1) a.back() = k.max;
    return a;
  };
  try {
    detail::Sink sink(k.output, out);
    std::ostream& os = sink.stream();
    auto row = [&](std::initializer_list<double> v) {
      bool first = true;
      for (double x : v) {
        if (!first) os << ',';
        os << format_double(x);
        first = false;
      }
      os << '\n';
    };
    if (k.what == "phi") {
      os << "z,re,im\n";
      for (double z : axis()) {
        const cplx v = phi(z, model);
        row({z, v.real(), v.imag()});
      }
    } else if (k.what == "mhat") {
      os << "lambda,re,im\n";
      for (double l : axis()) {
        const cplx v = mhat(model.T(), l, model);
        row({l, v.real(), v.imag()});
      }
    } else if (k.what == "S_T") {
      os << "omega,lambda,re,im\n";
      const auto a = axis();
      for (double w : a) {
        for (double l : a) {
          const cplx v = S_T_closed(w, l, model);
          row({w, l, v.real(), v.imag()});
        }
      }
    } else {
      os << "n,omega_n,sigma2\n";
      const auto lo = static_cast<long>(k.min), hi = static_cast<long>(k.max);
      const long top = std::max(std::labs(lo), std::labs(hi));
      const ZeroTable z = bessel_zeros(BesselOrder(1.0 - k.hurst), static_cast<std::size_t>(std::max(1L, top)));
      for (long n = lo; n <= hi; ++n) {
        const BasisIndex b = basis_index(z, n, model);
        os << n << ',' << format_double(b.omega_n) << ',' << format_double(sigma_squared(b, model)) << '\n';
      }
    }
    sink.finish();
  } catch (const std::ios_base::failure& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitOk;
}

/// Runs the truncation study and writes its JSON report. Exit 0 when the
/// fitted slope lies within 0.15 of -H, 1 otherwise.
inline int cmd_convergence(const ConvergenceConfig& c, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    detail::check_hurst(c.hurst);
    detail::check_horizon(c.horizon);
    if (c.n_list.size() < 2) throw ConfigError("n-list", "needs at least two entries");
    for (std::size_t i = 0; i < c.n_list.size(); ++i) {
      if (c.n_list[i] < 2) throw ConfigError("n-list", "entries must be >= 2");
      if (i > 0 && c.n_list[i] <= c.n_list[i - 1]) throw ConfigError("n-list", "must be strictly increasing");
    }
    if (c.n_list.back() >= kDefaultReferenceTerms) {
      throw ConfigError("n-list", "entries must stay below " + std::to_string(kDefaultReferenceTerms));
    }
    if (c.reps < 1) throw ConfigError("reps", "must be >= 1");
    if (c.grid_points < 1025) throw ConfigError("grid-points", "the study needs >= 1025 grid points");
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  ConvergenceReport rep;
  try {
    rep = truncation_study(HurstModel(c.hurst, c.horizon), c.n_list, static_cast<std::size_t>(c.reps),
                           static_cast<std::size_t>(c.grid_points - 1), c.seed);
  } catch (const InsufficientReplicationsError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInsufficientReps;
  }
  nlohmann::ordered_json doc;
  doc["hurst"] = c.hurst;
  doc["horizon"] = c.horizon;
  doc["n_list"] = rep.n_list;
  doc["errors"] = rep.errors;
  doc["stderrs"] = rep.stderrs;
  doc["slope"] = rep.slope;
  doc["slope_ci"] = rep.slope_ci;
  doc["expected_slope"] = rep.expected_slope;
  try {
    detail::Sink sink(c.output, out);
    sink.stream() << doc.dump(2) << '\n';
    sink.finish();
  } catch (const std::ios_base::failure& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return std::fabs(rep.slope - rep.expected_slope) <= 0.15 ? kExitOk : kExitCheckFailed;
}

/// Prints one line per check; exit 0 iff all pass.
inline int cmd_selftest(const SelftestOptions& opt, std::ostream& out = std::cout) {
  const auto results = run_selftest(opt);
  bool all = true;
  char line[256];
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-30s %s  %7.2fs  %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL",
                  r.seconds, r.detail.c_str());
    out << line;
    all = all && r.passed;
  }
  out << (all ? "all checks passed\n" : "some checks FAILED\n");
  return all ? kExitOk : kExitCheckFailed;
}

}  // namespace pwfbm::cli

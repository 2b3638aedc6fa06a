#pragma once

// Command-line front end. Everything the lmoments executable does lives here
// so that tests can drive it in-process through main_entry.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lmoments/arith.hpp"
#include "lmoments/error.hpp"
#include "lmoments/hecke.hpp"
#include "lmoments/modforms.hpp"
#include "lmoments/moments.hpp"
#include "lmoments/parallel.hpp"
#include "lmoments/quadfamily.hpp"
#include "lmoments/specfun.hpp"

namespace lmoments::cli {

inline constexpr const char* kVersion = "lmoments 1.0.0";
inline constexpr const char* kCacheEnv = "LMOMENTS_CACHE_DIR";

struct ParamSpec {
  std::string name;
  std::string fallback;
  std::string help;
};

struct CommandSpec {
  std::string name;
  std::string help;
  std::vector<ParamSpec> params;
};

inline const std::vector<CommandSpec>& commands() {
  static const std::vector<CommandSpec> table = {
      {"hecke-table", "CSV of B_r(n) for n <= nmax", {{"r", "4", "tuple length"}, {"nmax", "1000", "last n"}}},
      {"petersson-check",
       "harmonic sums of lambda(t)lambda(u) against delta + Kloosterman tail",
       {{"k", "12", "weight, a multiple of 4"}, {"tmax", "20", "largest t and u"}}},
      {"charsum", "sum over odd squarefree d <= z of (8d/n)", {{"n", "9", "odd modulus"}, {"z", "1e5", "range"}}},
      {"afe-check", "central values of chi_8d: smoothed sum against Hurwitz zeta", {{"dmax", "500", "largest d"}}},
      {"qmoments",
       "Hoelder sums over the quadratic family",
       {{"X", "1e5", "family scale, d in (X/16, X/8]"},
        {"k", "2", "even moment"},
        {"budget", "1e9", "work budget for the central values"}}},
      {"omoments", "Hoelder sums over Hecke eigenforms of weight k", {{"k", "12", "weight, a multiple of 4"}, {"r", "2", "even moment"}}},
      {"slope",
       "least-squares growth exponent of a tuple sum in log z",
       {{"series", "b-partial", "b-partial or divisor-sum"},
        {"order", "2", "r for b-partial, k for divisor-sum"},
        {"grid", "1e2,1e3,1e4,1e5,1e6", "comma-separated scales"}}},
  };
  return table;
}

inline const CommandSpec* find_command(const std::string& name) {
  for (const auto& c : commands())
    if (c.name == name) return &c;
  return nullptr;
}

struct RunConfig {
  std::string command;
  std::map<std::string, std::string> parameters;
  unsigned threads = 1;
  std::filesystem::path output_path = ".";
  double epsilon = 1e-8;
  std::optional<std::filesystem::path> cache_dir;  // from the environment; default <out>/cache
};

/// Thrown by parse_config for --help and --version; carries the text to print.
struct HelpRequested {
  std::string text;
};

[[noreturn]] inline void usage_error(const std::string& message) { fail(ErrorKind::usage, message, "parse_config"); }

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) usage_error(key + ": '" + text + "' is not a number");
  return v;
}

inline std::uint64_t parse_count(const std::string& key, const std::string& text, double lo, double hi) {
  const double v = parse_real(key, text);
  if (v != std::floor(v) || v < lo || v > hi) {
    std::ostringstream os;
    os << key << ": '" << text << "' must be an integer in [" << lo << ", " << hi << "]";
    usage_error(os.str());
  }
  return static_cast<std::uint64_t>(v);
}

inline std::vector<double> parse_grid(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(key, trim(item)));
  if (out.size() < 4) usage_error(key + ": need at least 4 scales");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] > 1.0)) usage_error(key + ": scales must exceed 1");
    if (i > 0 && !(out[i] > out[i - 1])) usage_error(key + ": scales must be strictly increasing");
  }
  return out;
}

/// key=value lines, '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) usage_error("config: cannot read " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) usage_error("config: line " + std::to_string(lineno) + " of " + path.string() + " is not key=value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Checks ranges for every parameter of the chosen command. Throws a usage
/// error naming the key.
inline void validate(const RunConfig& cfg) {
  if (!find_command(cfg.command)) usage_error("unknown command '" + cfg.command + "'");
  if (cfg.threads < 1) usage_error("threads: must be >= 1");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 1e-4)) usage_error("epsilon: must lie in (0, 1e-4]");
  const auto& p = cfg.parameters;
  const auto& c = cfg.command;
  auto weight = [&](const std::string& key) {
    const auto k = detail::parse_count(key, p.at(key), 12, 200);
    if (k % 4) usage_error(key + ": weight must be a multiple of 4");
  };
  auto even = [&](const std::string& key, double lo, double hi) {
    if (detail::parse_count(key, p.at(key), lo, hi) % 2) usage_error(key + ": must be even");
  };
  if (c == "hecke-table") {
    detail::parse_count("r", p.at("r"), 1, 16);
    detail::parse_count("nmax", p.at("nmax"), 1, 1e7);
  } else if (c == "petersson-check") {
    weight("k");
    detail::parse_count("tmax", p.at("tmax"), 1, 100);
  } else if (c == "charsum") {
    if (detail::parse_count("n", p.at("n"), 1, 1e12) % 2 == 0) usage_error("n: must be odd");
    if (!(detail::parse_real("z", p.at("z")) >= 3.0)) usage_error("z: must be >= 3");
  } else if (c == "afe-check") {
    detail::parse_count("dmax", p.at("dmax"), 1, kOracleModulusCap / 8);
    if (cfg.epsilon > 1e-6) usage_error("epsilon: afe-check needs epsilon <= 1e-6");
  } else if (c == "qmoments") {
    const double X = detail::parse_real("X", p.at("X"));
    if (!(X >= 1e3 && X <= 1e10)) usage_error("X: must lie in [1e3, 1e10]");
    even("k", 2, 20);
    detail::parse_count("budget", p.at("budget"), 1, 1e15);
    if (cfg.epsilon > 1e-6) usage_error("epsilon: qmoments needs epsilon <= 1e-6");
  } else if (c == "omoments") {
    weight("k");
    even("r", 2, 8);
  } else if (c == "slope") {
    const auto& s = p.at("series");
    if (s != "b-partial" && s != "divisor-sum") usage_error("series: must be b-partial or divisor-sum");
    detail::parse_count("order", p.at("order"), 1, 8);
    detail::parse_grid("grid", p.at("grid"));
  }
}

/// Flags override config-file values, which override defaults. Unknown keys
/// in the file are rejected.
inline RunConfig parse_config(const std::vector<std::string>& args) {
  CLI::App app{"Numerical experiments on lower bounds for moments of L-functions", "lmoments"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", kVersion);

  std::map<std::string, std::string> global;
  std::map<std::string, CLI::Option*> global_opts;
  global_opts["threads"] = app.add_option("--threads", global["threads"], "worker threads (default 1)");
  global_opts["epsilon"] = app.add_option("--epsilon", global["epsilon"], "target accuracy (default 1e-8)");
  global_opts["out"] = app.add_option("--out", global["out"], "output directory (default .)");
  std::string config_path;
  app.add_option("--config", config_path, "key=value file; flags take precedence");

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::map<std::string, CLI::Option*>> opts;
  for (const auto& spec : commands()) {
    auto* sub = app.add_subcommand(spec.name, spec.help);
    sub->fallthrough();
    for (const auto& param : spec.params) {
      opts[spec.name][param.name] =
          sub->add_option("--" + param.name, values[spec.name][param.name], param.help + " (default " + param.fallback + ")");
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::CallForVersion&) {
    throw HelpRequested{std::string(kVersion) + "\n"};
  } catch (const CLI::ParseError& e) {
    usage_error(e.what());
  }

  RunConfig cfg;
  cfg.command = app.get_subcommands().front()->get_name();
  const auto& spec = *find_command(cfg.command);

  std::map<std::string, std::string> resolved;
  for (const auto& param : spec.params) resolved[param.name] = param.fallback;
  resolved["threads"] = "1";
  resolved["epsilon"] = "1e-8";
  resolved["out"] = ".";

  if (!config_path.empty()) {
    for (const auto& [key, value] : detail::read_config_file(config_path)) {
      if (key == "command") {
        if (value != cfg.command) usage_error("config: command '" + value + "' does not match '" + cfg.command + "'");
        continue;
      }
      if (!resolved.contains(key)) usage_error("config: unknown key '" + key + "' for " + cfg.command);
      resolved[key] = value;
    }
  }
  for (const auto& [key, opt] : global_opts)
    if (opt->count()) resolved[key] = global[key];
  for (const auto& [key, opt] : opts[cfg.command])
    if (opt->count()) resolved[key] = values[cfg.command][key];

  cfg.threads = static_cast<unsigned>(detail::parse_count("threads", resolved["threads"], 1, 1024));
  cfg.epsilon = detail::parse_real("epsilon", resolved["epsilon"]);
  cfg.output_path = resolved["out"];
  for (const auto& param : spec.params) cfg.parameters[param.name] = resolved[param.name];
  if (const char* env = std::getenv(kCacheEnv); env && *env) cfg.cache_dir = std::filesystem::path(env);
  validate(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// Running

namespace detail {

using Json = nlohmann::ordered_json;

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string(), "output");
  out << text;
  if (!out) fail(ErrorKind::io, "write failed for " + path.string(), "output");
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

class Csv {
 public:
  explicit Csv(std::string header) { text_ = std::move(header) + "\n"; }

  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((text_ += (first ? "" : ","), text_ += cell(cells), first = false), ...);
    text_ += "\n";
  }
  const std::string& text() const noexcept { return text_; }

 private:
  static std::string cell(double v) { return format_real(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }

  std::string text_;
};

inline std::filesystem::path cache_dir(const RunConfig& cfg) { return cfg.cache_dir.value_or(cfg.output_path / "cache"); }

inline void write_resolved_config(const RunConfig& cfg) {
  std::string text = std::string("# ") + kVersion + "\ncommand=" + cfg.command + "\n";
  text += "threads=" + std::to_string(cfg.threads) + "\n";
  text += "epsilon=" + format_real(cfg.epsilon) + "\n";
  text += "out=" + cfg.output_path.string() + "\n";
  for (const auto& [key, value] : cfg.parameters) text += key + "=" + value + "\n";
  write_text(cfg.output_path / "resolved_config.txt", text);
}

inline std::string run_hecke_table(const RunConfig& cfg) {
  const auto r = static_cast<unsigned>(parse_count("r", cfg.parameters.at("r"), 1, 16));
  const auto nmax = parse_count("nmax", cfg.parameters.at("nmax"), 1, 1e7);
  const auto table = big_B_table(r, nmax);
  Csv csv("r,n,B_r(n)");
  std::size_t nonzero = 0;
  for (std::uint64_t n = 1; n <= nmax; ++n) {
    csv.row(r, n, table[n]);
    nonzero += table[n] != 0;
  }
  write_text(cfg.output_path / "hecke_table.csv", csv.text());
  std::ostringstream os;
  os << "hecke-table r=" << r << " nmax=" << nmax << " nonzero=" << nonzero;
  if (nmax >= 4) os << " B_r(4)=" << table[4];
  return os.str();
}

inline std::string run_petersson_check(const RunConfig& cfg) {
  const int k = static_cast<int>(parse_count("k", cfg.parameters.at("k"), 12, 200));
  const auto tmax = parse_count("tmax", cfg.parameters.at("tmax"), 1, 100);
  const std::size_t N = std::max<std::size_t>(default_table_length(k), tmax);
  const auto forms = harmonic_weights(k, cached_eigenforms(k, N, cache_dir(cfg)), cfg.epsilon);

  std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
  for (std::uint64_t t = 1; t <= tmax; ++t)
    for (std::uint64_t u = t; u <= tmax; ++u) pairs.emplace_back(t, u);
  struct Row {
    double sum, tail, remainder;
  };
  const auto rows = parallel_map(pairs.size(), cfg.threads, [&](std::size_t i) {
    const auto [t, u] = pairs[i];
    CompensatedSum s;
    for (const auto& f : forms) s.add(f.lambda_at(t) * f.lambda_at(u) / f.omega);
    const auto tail = petersson_tail(t, u, k, cfg.epsilon);
    return Row{s.value(), tail.value, tail.certified_remainder};
  });

  Csv csv("t,u,harmonic_sum,delta,tail,tail_remainder,residual");
  double worst = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [t, u] = pairs[i];
    const double delta = t == u ? 1.0 : 0.0;
    const double residual = rows[i].sum - delta - rows[i].tail;
    worst = std::max(worst, std::abs(residual));
    csv.row(t, u, rows[i].sum, delta, rows[i].tail, rows[i].remainder, residual);
  }
  write_text(cfg.output_path / "petersson.csv", csv.text());
  return "petersson-check k=" + std::to_string(k) + " tmax=" + std::to_string(tmax) + " forms=" +
         std::to_string(forms.size()) + " max|residual|=" + format_real(worst);
}

inline std::string run_charsum(const RunConfig& cfg) {
  const auto n = parse_count("n", cfg.parameters.at("n"), 1, 1e12);
  const double z = parse_real("z", cfg.parameters.at("z"));
  const auto r = charsum(n, z);
  Csv csv("n,z,exact_sum,predicted_main,bound_used,square");
  csv.row(r.n, r.z, r.exact_sum, r.predicted_main, r.bound_used, r.square);
  write_text(cfg.output_path / "charsum.csv", csv.text());
  const double ratio = std::abs(static_cast<double>(r.exact_sum) - r.predicted_main) / r.bound_used;
  return "charsum n=" + std::to_string(n) + " z=" + format_real(z) + " exact=" + std::to_string(r.exact_sum) +
         " main=" + format_real(r.predicted_main) + " |exact-main|/bound=" + format_real(ratio);
}

inline std::string run_afe_check(const RunConfig& cfg) {
  const auto dmax = parse_count("dmax", cfg.parameters.at("dmax"), 1, kOracleModulusCap / 8);
  std::vector<std::uint64_t> ds;
  for (std::uint64_t d = 1; d <= dmax; d += 2) {
    const auto f = factor(d);
    if (f.is_squarefree()) ds.push_back(d);
  }
  const auto values = parallel_map(ds.size(), cfg.threads, [&](std::size_t i) {
    const QuadDiscriminant dq(ds[i]);
    return std::pair{central_value_chi(dq, cfg.epsilon), central_value_chi_oracle(dq)};
  });
  Csv csv("d,afe,oracle,abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double diff = std::abs(values[i].first - values[i].second);
    worst = std::max(worst, diff);
    csv.row(ds[i], values[i].first, values[i].second, diff);
  }
  write_text(cfg.output_path / "afe_check.csv", csv.text());
  return "afe-check dmax=" + std::to_string(dmax) + " count=" + std::to_string(ds.size()) + " max|diff|=" + format_real(worst);
}

inline Json report_json(const SymplecticRun& run) {
  const auto row = lower_bound_report(run);
  Json j;
  j["version"] = kVersion;
  j["family"] = "symplectic";
  j["X"] = run.X;
  j["k"] = run.k;
  j["epsilon"] = run.epsilon;
  j["x"] = run.x;
  j["family_size"] = run.family_size;
  j["S1"] = run.S1;
  j["S2"] = run.S2;
  j["S2_main"] = run.S2_main;
  j["S1_main_lb"] = run.S1_main_lb;
  j["lower_bound"] = run.lower_bound;
  j["direct_moment"] = run.direct_moment;
  j["normaliser"] = row.normaliser;
  j["ratio"] = row.ratio;
  return j;
}

inline Json report_json(const OrthogonalRun& run) {
  const auto row = lower_bound_report(run);
  Json j;
  j["version"] = kVersion;
  j["family"] = "orthogonal";
  j["k"] = run.k;
  j["r"] = run.r;
  j["epsilon"] = run.epsilon;
  j["x"] = run.x;
  j["family_size"] = run.family_size;
  j["S1"] = run.S1;
  j["S2"] = run.S2;
  j["S1_main"] = run.S1_main;
  j["S2_main"] = run.S2_main;
  j["lower_bound"] = run.lower_bound;
  j["direct_moment"] = run.direct_moment;
  j["normaliser"] = row.normaliser;
  j["ratio"] = row.ratio;
  return j;
}

inline std::string moment_summary(const Json& j) {
  std::ostringstream os;
  os << (j["family"] == "symplectic" ? "qmoments" : "omoments");
  for (const char* key : {"X", "k", "r", "family_size", "S1", "S2", "lower_bound", "direct_moment", "ratio"}) {
    if (j.contains(key)) os << " " << key << "=" << j[key].dump();
  }
  return os.str();
}

inline std::string run_qmoments(const RunConfig& cfg) {
  const double X = parse_real("X", cfg.parameters.at("X"));
  const auto k = static_cast<unsigned>(parse_count("k", cfg.parameters.at("k"), 2, 20));
  const auto budget = parse_count("budget", cfg.parameters.at("budget"), 1, 1e15);
  const auto cache_path = cache_dir(cfg) / "lvalues.csv";
  auto cache = LValueCache::load(cache_path);
  const auto run = run_symplectic(X, k, cfg.epsilon, {.threads = cfg.threads, .cache = &cache, .work_budget = budget});
  cache.save(cache_path);
  const auto j = report_json(run);
  write_json(cfg.output_path / "qmoments.json", j);
  return moment_summary(j);
}

inline std::string run_omoments(const RunConfig& cfg) {
  const int k = static_cast<int>(parse_count("k", cfg.parameters.at("k"), 12, 200));
  const auto r = static_cast<unsigned>(parse_count("r", cfg.parameters.at("r"), 2, 8));
  const auto run = run_orthogonal(k, r, cfg.epsilon, {.threads = cfg.threads, .cache_dir = cache_dir(cfg)});
  const auto j = report_json(run);
  write_json(cfg.output_path / "omoments.json", j);
  return moment_summary(j);
}

inline std::string run_slope(const RunConfig& cfg) {
  const auto& series = cfg.parameters.at("series");
  const auto order = static_cast<unsigned>(parse_count("order", cfg.parameters.at("order"), 1, 8));
  const auto grid = parse_grid("grid", cfg.parameters.at("grid"));
  const bool b_partial = series == "b-partial";
  const double expected = b_partial ? order * (order - 1) / 2.0 : order * (order + 1) / 2.0;

  const auto values = parallel_map(grid.size(), cfg.threads, [&](std::size_t i) {
    return b_partial ? B_partial_sum(order, grid[i]) : odd_square_divisor_sum(order, grid[i]);
  });
  std::vector<std::pair<double, double>> points;
  Csv csv("z,value");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    points.emplace_back(grid[i], values[i]);
    csv.row(grid[i], values[i]);
  }
  const auto fit = slope_fit(points, series + " order " + std::to_string(order) + " ~ (log z)^" + format_real(expected));
  write_text(cfg.output_path / "slope.csv", csv.text());

  Json j;
  j["version"] = kVersion;
  j["series"] = series;
  j["order"] = order;
  j["model"] = fit.model;
  j["expected_exponent"] = expected;
  j["fitted_exponent"] = fit.fitted_exponent;
  j["intercept"] = fit.intercept;
  Json g = Json::array();
  for (const auto& [z, v] : fit.grid) g.push_back({z, v});
  j["grid"] = g;
  write_json(cfg.output_path / "slope.json", j);
  return "slope series=" + series + " order=" + std::to_string(order) + " fitted_exponent=" + format_real(fit.fitted_exponent) +
         " expected=" + format_real(expected);
}

}  // namespace detail

/// Runs one validated configuration. Artifacts go to cfg.output_path; the
/// returned string is the one-line summary.
inline std::string run(const RunConfig& cfg) {
  validate(cfg);
  std::filesystem::create_directories(cfg.output_path);
  detail::write_resolved_config(cfg);
  const auto start = std::chrono::steady_clock::now();
  std::string summary;
  const auto& c = cfg.command;
  if (c == "hecke-table") summary = detail::run_hecke_table(cfg);
  else if (c == "petersson-check") summary = detail::run_petersson_check(cfg);
  else if (c == "charsum") summary = detail::run_charsum(cfg);
  else if (c == "afe-check") summary = detail::run_afe_check(cfg);
  else if (c == "qmoments") summary = detail::run_qmoments(cfg);
  else if (c == "omoments") summary = detail::run_omoments(cfg);
  else summary = detail::run_slope(cfg);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  // wall-clock time is kept apart so the other artifacts stay reproducible
  detail::Json t;
  t["command"] = cfg.command;
  t["threads"] = cfg.threads;
  t["seconds"] = elapsed.count();
  detail::write_json(cfg.output_path / "timings.json", t);
  return summary;
}

inline int exit_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return 2;
    case ErrorKind::budget:
    case ErrorKind::resource: return 3;
    default: return 1;
  }
}

inline std::string error_record(const std::string& kind, const std::string& stage, const std::string& message,
                                const std::string& command) {
  detail::Json j;
  j["error"] = {{"kind", kind}, {"stage", stage}, {"message", message}, {"command", command}};
  return j.dump() + "\n";
}

/// Parses, runs, and maps failures onto exit statuses: 0 success, 1 other
/// failure, 2 usage, 3 budget or resource. Errors are reported as a one-line
/// JSON record on err.
inline int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_config(args);
  } catch (const HelpRequested& h) {
    out << h.text;
    return 0;
  } catch (const Error& e) {
    if (args.empty()) {
      try {
        parse_config({"--help"});
      } catch (const HelpRequested& h) {
        err << h.text;
      }
    }
    err << error_record(std::string(to_string(e.kind())), e.stage(), e.what(), "");
    return 2;
  }
  try {
    out << run(cfg) << "\n";
    return 0;
  } catch (const Error& e) {
    err << error_record(std::string(to_string(e.kind())), e.stage(), e.what(), cfg.command);
    return exit_status(e.kind());
  } catch (const std::exception& e) {
    err << error_record("internal", "", e.what(), cfg.command);
    return 1;
  }
}

}  // namespace lmoments::cli

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdbench/enumeration.hpp"
#include "sdbench/errors.hpp"
#include "sdbench/metrics.hpp"
#include "sdbench/network.hpp"
#include "sdbench/powerflow.hpp"
#include "sdbench/solvers.hpp"

namespace sdbench {

namespace detail {

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Fixed-significance formatting for display strings (param cells, times).
inline std::string format_double(double v, int precision) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, precision);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

inline std::string values_digest(const std::vector<double>& values) {
  std::string joined;
  for (double v : values) {
    joined += format_double(v);
    joined += '\n';
  }
  return "fnv1a:" + hex64(fnv1a64(joined));
}

inline std::string sanitize_cell(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ' ';
  }
  return s;
}

inline std::string sanitize_filename(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_';
    out.push_back(ok ? c : '_');
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << content;
}

inline std::string environment_fingerprint() {
  std::string s = "cxx=";
#ifdef __VERSION__
  s += __VERSION__;
#else
  s += "unknown";
#endif
#if defined(__linux__)
  s += ";os=linux";
#elif defined(__APPLE__)
  s += ";os=darwin";
#elif defined(_WIN32)
  s += ";os=windows";
#else
  s += ";os=other";
#endif
  return s;
}

}  // namespace detail

struct StopSpec {
  int n_s = 20;
  double threshold = 0.0;
};

struct GridAxis {
  std::string name;
  double from = 0.0;
  double to = 0.0;
  double step = 0.0;

  std::vector<double> values() const {
    if (step <= 0) throw ParseError("experiment: grid axis '" + name + "' needs step > 0");
    if (to < from) throw ParseError("experiment: grid axis '" + name + "' needs to >= from");
    const int count = static_cast<int>(std::floor((to - from) / step + 1e-6)) + 1;
    std::vector<double> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) out.push_back(from + i * step);
    return out;
  }
};

struct SolverSpec {
  std::string label;
  std::string kind;  // "sa" | "ga" | "pso"
  int h_s = 100;
  std::uint64_t base_seed = 1;
  nlohmann::json params = nlohmann::json::object();
  std::vector<GridAxis> grid;
};

struct ExperimentConfig {
  std::string experiment_id;
  std::string network_path;  // absolute once loaded
  char mode = 'R';
  std::optional<double> y_g;
  std::optional<std::uint64_t> enumeration_budget;
  StopSpec stop;
  PowerFlowOptions pf;
  PenaltySpec penalties;
  std::optional<double> v_min_override;
  std::optional<double> v_max_override;
  double eps = 0.0;
  std::string output_dir;
  std::vector<SolverSpec> solvers;
};

// One archived run. Failed runs carry a "failed: ..." status and keep the
// experiment going.
struct SampleRow {
  std::string experiment_id;
  std::string solver;
  std::string param_cell;
  std::uint64_t seed = 0;
  int run_index = 0;
  double best_value = 0.0;
  std::vector<std::string> open_branches;
  long evaluations = 0;
  int iterations = 0;
  double wall_time_s = 0.0;
  std::string status = "ok";
};

struct RunArchive {
  std::string experiment_id;
  std::vector<SampleRow> rows;
  std::string environment_fingerprint;
};

namespace detail {

inline double json_opt_number(const nlohmann::json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number())
    throw ParseError(std::string("experiment: '") + key + "' must be a number");
  return obj[key].get<double>();
}

inline void check_known_keys(const nlohmann::json& obj,
                             std::initializer_list<std::string_view> known,
                             const std::string& ctx) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const auto& k : known) ok = ok || key == k;
    if (!ok) throw ParseError("experiment: unknown key '" + key + "' in " + ctx);
  }
}

}  // namespace detail

inline ExperimentConfig parse_experiment(const nlohmann::json& doc,
                                         const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ParseError("experiment: document must be a JSON object");
  detail::check_known_keys(doc,
                           {"experiment_id", "network", "mode", "y_g", "enumeration_budget",
                            "stop", "power_flow", "penalties", "limits", "eps", "output_dir",
                            "solvers"},
                           "document");

  ExperimentConfig cfg;
  if (!doc.contains("experiment_id") || !doc["experiment_id"].is_string())
    throw ParseError("experiment: string 'experiment_id' is required");
  cfg.experiment_id = doc["experiment_id"].get<std::string>();
  detail::check_id_charset(cfg.experiment_id, "experiment");

  if (!doc.contains("network") || !doc["network"].is_string())
    throw ParseError("experiment: string 'network' path is required");
  std::filesystem::path net_path = doc["network"].get<std::string>();
  if (net_path.is_relative()) net_path = base_dir / net_path;
  cfg.network_path = std::filesystem::weakly_canonical(net_path).string();

  const std::string mode = doc.value("mode", std::string());
  if (mode != "G" && mode != "R") throw ParseError("experiment: mode must be \"G\" or \"R\"");
  cfg.mode = mode[0];

  if (doc.contains("y_g")) cfg.y_g = detail::json_opt_number(doc, "y_g", 0.0);
  if (doc.contains("enumeration_budget")) {
    if (!doc["enumeration_budget"].is_number_unsigned() &&
        !doc["enumeration_budget"].is_number_integer())
      throw ParseError("experiment: enumeration_budget must be a positive integer");
    const long long b = doc["enumeration_budget"].get<long long>();
    if (b < 1) throw ParseError("experiment: enumeration_budget must be a positive integer");
    cfg.enumeration_budget = static_cast<std::uint64_t>(b);
  }
  if (cfg.mode == 'G' && !cfg.y_g && !cfg.enumeration_budget)
    throw ParseError("experiment: mode G requires 'y_g' or 'enumeration_budget'");

  if (doc.contains("stop")) {
    detail::check_known_keys(doc["stop"], {"n_s", "threshold"}, "'stop'");
    cfg.stop.n_s = static_cast<int>(detail::json_opt_number(doc["stop"], "n_s", cfg.stop.n_s));
    cfg.stop.threshold = detail::json_opt_number(doc["stop"], "threshold", cfg.stop.threshold);
  }
  if (doc.contains("power_flow")) {
    detail::check_known_keys(doc["power_flow"], {"slack_v", "tol", "max_iter"}, "'power_flow'");
    const auto& pf = doc["power_flow"];
    cfg.pf.slack_v = detail::json_opt_number(pf, "slack_v", cfg.pf.slack_v);
    cfg.pf.tol = detail::json_opt_number(pf, "tol", cfg.pf.tol);
    cfg.pf.max_iter = static_cast<int>(detail::json_opt_number(pf, "max_iter", cfg.pf.max_iter));
  }
  if (doc.contains("penalties")) {
    detail::check_known_keys(doc["penalties"], {"undervoltage", "overvoltage", "overcurrent"},
                             "'penalties'");
    const auto& p = doc["penalties"];
    cfg.penalties.undervoltage = detail::json_opt_number(p, "undervoltage", cfg.penalties.undervoltage);
    cfg.penalties.overvoltage = detail::json_opt_number(p, "overvoltage", cfg.penalties.overvoltage);
    cfg.penalties.overcurrent = detail::json_opt_number(p, "overcurrent", cfg.penalties.overcurrent);
  }
  if (doc.contains("limits")) {
    detail::check_known_keys(doc["limits"], {"v_min", "v_max"}, "'limits'");
    if (doc["limits"].contains("v_min"))
      cfg.v_min_override = detail::json_opt_number(doc["limits"], "v_min", 0.0);
    if (doc["limits"].contains("v_max"))
      cfg.v_max_override = detail::json_opt_number(doc["limits"], "v_max", 0.0);
  }
  cfg.eps = detail::json_opt_number(doc, "eps", 0.0);
  if (cfg.eps < 0) throw ParseError("experiment: eps must be >= 0");
  cfg.output_dir = doc.value("output_dir", std::string());

  if (!doc.contains("solvers") || !doc["solvers"].is_array() || doc["solvers"].empty())
    throw ParseError("experiment: non-empty 'solvers' array is required");
  for (const auto& js : doc["solvers"]) {
    detail::check_known_keys(js, {"label", "kind", "h_s", "base_seed", "params", "grid"},
                             "solver entry");
    SolverSpec s;
    if (!js.contains("label") || !js["label"].is_string())
      throw ParseError("experiment: every solver needs a string 'label'");
    s.label = js["label"].get<std::string>();
    detail::check_id_charset(s.label, "solver label");
    s.kind = js.value("kind", std::string());
    if (s.kind != "sa" && s.kind != "ga" && s.kind != "pso")
      throw ParseError("experiment: solver '" + s.label + "' kind must be sa, ga or pso");
    s.h_s = static_cast<int>(detail::json_opt_number(js, "h_s", 100));
    if (s.h_s < 1) throw ParseError("experiment: solver '" + s.label + "' needs h_s >= 1");
    s.base_seed = static_cast<std::uint64_t>(detail::json_opt_number(js, "base_seed", 1));
    if (js.contains("params")) {
      if (!js["params"].is_object())
        throw ParseError("experiment: solver 'params' must be an object");
      s.params = js["params"];
    }
    if (js.contains("grid")) {
      if (!js["grid"].is_array())
        throw ParseError("experiment: solver 'grid' must be an array of axes");
      for (const auto& ja : js["grid"]) {
        detail::check_known_keys(ja, {"name", "from", "to", "step"}, "grid axis");
        GridAxis axis;
        if (!ja.contains("name") || !ja["name"].is_string())
          throw ParseError("experiment: grid axes need a string 'name'");
        axis.name = ja["name"].get<std::string>();
        axis.from = detail::json_opt_number(ja, "from", 0.0);
        axis.to = detail::json_opt_number(ja, "to", axis.from);
        axis.step = detail::json_opt_number(ja, "step", 0.0);
        axis.values();  // validates
        s.grid.push_back(std::move(axis));
      }
    }
    for (const auto& other : cfg.solvers) {
      if (other.label == s.label)
        throw ParseError("experiment: duplicate solver label '" + s.label + "'");
    }
    cfg.solvers.push_back(std::move(s));
  }
  return cfg;
}

inline ExperimentConfig load_experiment_file(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed experiment document: " + std::string(e.what()));
  }
  return parse_experiment(doc, std::filesystem::absolute(path).parent_path());
}

inline nlohmann::json experiment_to_json(const ExperimentConfig& cfg) {
  nlohmann::json doc;
  doc["experiment_id"] = cfg.experiment_id;
  doc["network"] = cfg.network_path;
  doc["mode"] = std::string(1, cfg.mode);
  if (cfg.y_g) doc["y_g"] = *cfg.y_g;
  if (cfg.enumeration_budget) doc["enumeration_budget"] = *cfg.enumeration_budget;
  doc["stop"] = {{"n_s", cfg.stop.n_s}, {"threshold", cfg.stop.threshold}};
  doc["power_flow"] = {{"slack_v", cfg.pf.slack_v}, {"tol", cfg.pf.tol},
                       {"max_iter", cfg.pf.max_iter}};
  doc["penalties"] = {{"undervoltage", cfg.penalties.undervoltage},
                      {"overvoltage", cfg.penalties.overvoltage},
                      {"overcurrent", cfg.penalties.overcurrent}};
  if (cfg.v_min_override || cfg.v_max_override) {
    nlohmann::json lim = nlohmann::json::object();
    if (cfg.v_min_override) lim["v_min"] = *cfg.v_min_override;
    if (cfg.v_max_override) lim["v_max"] = *cfg.v_max_override;
    doc["limits"] = lim;
  }
  doc["eps"] = cfg.eps;
  if (!cfg.output_dir.empty()) doc["output_dir"] = cfg.output_dir;
  doc["solvers"] = nlohmann::json::array();
  for (const SolverSpec& s : cfg.solvers) {
    nlohmann::json js;
    js["label"] = s.label;
    js["kind"] = s.kind;
    js["h_s"] = s.h_s;
    js["base_seed"] = s.base_seed;
    js["params"] = s.params;
    js["grid"] = nlohmann::json::array();
    for (const GridAxis& a : s.grid)
      js["grid"].push_back({{"name", a.name}, {"from", a.from}, {"to", a.to}, {"step", a.step}});
    doc["solvers"].push_back(std::move(js));
  }
  return doc;
}

// A config together with the parsed network and the objective it defines.
struct LoadedExperiment {
  ExperimentConfig config;
  std::unique_ptr<Network> network;
  Problem problem;
};

inline LoadedExperiment load_experiment(ExperimentConfig cfg) {
  LoadedExperiment lx;
  lx.network = std::make_unique<Network>(parse_network(detail::read_file(cfg.network_path)));
  cfg.penalties.validate();
  OperationalLimits limits = OperationalLimits::from_network(*lx.network);
  if (cfg.v_min_override)
    std::fill(limits.v_min.begin(), limits.v_min.end(), *cfg.v_min_override);
  if (cfg.v_max_override)
    std::fill(limits.v_max.begin(), limits.v_max.end(), *cfg.v_max_override);
  lx.problem = Problem{lx.network.get(), std::move(limits), cfg.penalties, cfg.pf};
  lx.config = std::move(cfg);
  return lx;
}

namespace detail {

inline SaParams make_sa_params(const nlohmann::json& p, const StopSpec& stop) {
  check_known_keys(p, {"alpha", "n_w", "p_0", "m_a", "m_c"}, "sa params");
  SaParams sp;
  sp.alpha = json_opt_number(p, "alpha", sp.alpha);
  sp.n_w = static_cast<int>(json_opt_number(p, "n_w", sp.n_w));
  sp.p_0 = json_opt_number(p, "p_0", sp.p_0);
  sp.m_a = static_cast<int>(json_opt_number(p, "m_a", sp.m_a));
  sp.m_c = static_cast<int>(json_opt_number(p, "m_c", sp.m_c));
  sp.n_s = stop.n_s;
  sp.stop_threshold = stop.threshold;
  sp.validate();
  return sp;
}

inline GaParams make_ga_params(const nlohmann::json& p, const StopSpec& stop) {
  check_known_keys(p, {"c_ga", "p_c", "p_m"}, "ga params");
  GaParams gp;
  gp.c_ga = static_cast<int>(json_opt_number(p, "c_ga", gp.c_ga));
  gp.p_c = json_opt_number(p, "p_c", gp.p_c);
  gp.p_m = json_opt_number(p, "p_m", gp.p_m);
  gp.n_s = stop.n_s;
  gp.stop_threshold = stop.threshold;
  gp.validate();
  return gp;
}

inline PsoParams make_pso_params(const nlohmann::json& p, const StopSpec& stop) {
  check_known_keys(p, {"c_pso", "w_init", "w_final"}, "pso params");
  PsoParams pp;
  pp.c_pso = static_cast<int>(json_opt_number(p, "c_pso", pp.c_pso));
  pp.w_init = json_opt_number(p, "w_init", pp.w_init);
  pp.w_final = json_opt_number(p, "w_final", pp.w_final);
  pp.n_s = stop.n_s;
  pp.stop_threshold = stop.threshold;
  pp.validate();
  return pp;
}

}  // namespace detail

/// Expands a solver's parameter grid into cells (first axis slowest). Every
/// cell's run is wrapped so a failing run yields a sample with a non-empty
/// error instead of ending the schedule.
inline std::vector<ParameterCell> build_parameter_cells(const Problem& problem,
                                                        const SolverSpec& spec,
                                                        const StopSpec& stop) {
  std::vector<std::vector<double>> axis_values;
  for (const GridAxis& a : spec.grid) axis_values.push_back(a.values());

  std::size_t cell_count = 1;
  for (const auto& v : axis_values) cell_count *= v.size();

  std::vector<ParameterCell> cells;
  cells.reserve(cell_count);
  for (std::size_t c = 0; c < cell_count; ++c) {
    nlohmann::json merged = spec.params;
    std::string fingerprint;
    std::size_t rem = c;
    for (std::size_t a = axis_values.size(); a-- > 0;) {
      const double value = axis_values[a][rem % axis_values[a].size()];
      rem /= axis_values[a].size();
      merged[spec.grid[a].name] = value;
      const std::string piece = spec.grid[a].name + "=" + detail::format_double(value, 12);
      fingerprint = fingerprint.empty() ? piece : piece + ";" + fingerprint;
    }
    if (fingerprint.empty()) fingerprint = "-";

    std::function<SolutionSample(std::uint64_t)> run;
    if (spec.kind == "sa") {
      const SaParams params = detail::make_sa_params(merged, stop);
      run = [&problem, params](std::uint64_t seed) { return run_sa(problem, params, seed); };
    } else if (spec.kind == "ga") {
      const GaParams params = detail::make_ga_params(merged, stop);
      run = [&problem, params](std::uint64_t seed) { return run_ga(problem, params, seed); };
    } else {
      const PsoParams params = detail::make_pso_params(merged, stop);
      run = [&problem, params](std::uint64_t seed) { return run_pso(problem, params, seed); };
    }
    auto guarded = [run](std::uint64_t seed) {
      try {
        return run(seed);
      } catch (const std::exception& e) {
        SolutionSample s;
        s.seed = seed;
        s.best_value = std::numeric_limits<double>::quiet_NaN();
        s.error = e.what();
        return s;
      }
    };
    cells.push_back(ParameterCell{std::move(fingerprint), std::move(guarded)});
  }
  return cells;
}

/// Runs every solver's schedule and archives all samples in execution order.
/// Afterwards a deterministic 10% spot check re-evaluates archived best
/// configurations and insists on exact best_value agreement.
inline RunArchive run_experiment(const LoadedExperiment& lx) {
  RunArchive archive;
  archive.experiment_id = lx.config.experiment_id;
  archive.environment_fingerprint = detail::environment_fingerprint();

  for (const SolverSpec& spec : lx.config.solvers) {
    const std::vector<ParameterCell> cells =
        build_parameter_cells(lx.problem, spec, lx.config.stop);
    std::vector<SolutionSample> samples = collect_solutions(cells, spec.h_s, spec.base_seed);
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const SolutionSample& s = samples[k];
      SampleRow row;
      row.experiment_id = lx.config.experiment_id;
      row.solver = spec.label;
      row.param_cell = s.param_fingerprint;
      row.seed = s.seed;
      row.run_index = static_cast<int>(k);
      row.best_value = s.best_value;
      if (s.error.empty()) row.open_branches = open_branch_ids(*lx.network, s.best_config);
      row.evaluations = s.evaluations;
      row.iterations = s.iterations;
      row.wall_time_s = s.wall_time_s;
      row.status = s.error.empty() ? "ok" : "failed: " + detail::sanitize_cell(s.error);
      archive.rows.push_back(std::move(row));
    }
  }

  // Re-evaluation spot check on a deterministic 10% of the ok rows.
  Rng check_rng(0x5dbe9c5u ^ detail::fnv1a64(lx.config.experiment_id));
  for (const SampleRow& row : archive.rows) {
    if (row.status != "ok" || check_rng.uniform() >= 0.1) continue;
    const RadialConfiguration cfg = config_from_open_ids(*lx.network, row.open_branches);
    const std::optional<double> f = lx.problem.evaluate(cfg);
    if (!f || *f != row.best_value)
      throw std::runtime_error("archive self-check failed: row for solver '" + row.solver +
                               "' does not re-evaluate to its archived best value");
  }
  return archive;
}

inline RunArchive run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(load_experiment(cfg));
}

inline constexpr const char* kSamplesCsvHeader =
    "experiment_id,solver,param_cell,seed,run_index,best_value_pu,open_branches,"
    "evaluations,iterations,wall_time_s,status";

inline std::string samples_to_csv(const RunArchive& archive) {
  std::string out(kSamplesCsvHeader);
  out += '\n';
  for (const SampleRow& r : archive.rows) {
    out += r.experiment_id;
    out += ',';
    out += r.solver;
    out += ',';
    out += r.param_cell;
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += std::to_string(r.run_index);
    out += ',';
    out += detail::format_double(r.best_value);
    out += ',';
    for (std::size_t i = 0; i < r.open_branches.size(); ++i) {
      if (i) out += ';';
      out += r.open_branches[i];
    }
    out += ',';
    out += std::to_string(r.evaluations);
    out += ',';
    out += std::to_string(r.iterations);
    out += ',';
    out += detail::format_double(r.wall_time_s, 6);
    out += ',';
    out += r.status;
    out += '\n';
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace detail

inline RunArchive samples_from_csv(const std::string& csv) {
  RunArchive archive;
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != kSamplesCsvHeader)
    throw ParseError("archive: unexpected samples.csv header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = detail::split(line, ',');
    if (f.size() != 11) throw ParseError("archive: malformed samples.csv row");
    SampleRow r;
    r.experiment_id = f[0];
    r.solver = f[1];
    r.param_cell = f[2];
    r.seed = std::stoull(f[3]);
    r.run_index = std::stoi(f[4]);
    r.best_value = std::strtod(f[5].c_str(), nullptr);
    if (!f[6].empty()) r.open_branches = detail::split(f[6], ';');
    r.evaluations = std::stol(f[7]);
    r.iterations = std::stoi(f[8]);
    r.wall_time_s = std::strtod(f[9].c_str(), nullptr);
    r.status = f[10];
    archive.rows.push_back(std::move(r));
  }
  if (!archive.rows.empty()) archive.experiment_id = archive.rows.front().experiment_id;
  return archive;
}

/// Writes samples.csv, experiment.json and meta.json into `dir`.
inline void write_archive(const RunArchive& archive, const ExperimentConfig& cfg,
                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  detail::write_file(dir / "samples.csv", samples_to_csv(archive));
  detail::write_file(dir / "experiment.json", experiment_to_json(cfg).dump(2) + "\n");
  nlohmann::json meta;
  meta["experiment_id"] = archive.experiment_id;
  meta["environment"] = archive.environment_fingerprint;
  detail::write_file(dir / "meta.json", meta.dump(2) + "\n");
}

struct LoadedArchive {
  RunArchive archive;
  ExperimentConfig config;
};

inline LoadedArchive load_archive(const std::filesystem::path& dir) {
  LoadedArchive out;
  out.archive = samples_from_csv(detail::read_file(dir / "samples.csv"));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_file(dir / "experiment.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("archive: malformed experiment.json: " + std::string(e.what()));
  }
  out.config = parse_experiment(doc, dir);
  const std::filesystem::path meta = dir / "meta.json";
  if (std::filesystem::exists(meta)) {
    const auto m = nlohmann::json::parse(detail::read_file(meta));
    out.archive.environment_fingerprint = m.value("environment", std::string());
  }
  return out;
}

struct ComparisonReport {
  char mode = 'R';
  std::size_t h = 0;
  double eps = 0.0;
  std::optional<double> y_g;              // mode G only
  std::vector<double> reference_values;   // ascending, length h
  std::string reference_digest;
  std::vector<SolverScore> solvers;       // ranked
};

namespace detail {

/// Ok rows grouped into per-solver value sets, solver order = first
/// appearance in the archive.
inline std::vector<SolutionSet> solution_sets(const RunArchive& archive) {
  std::vector<SolutionSet> sets;
  for (const SampleRow& r : archive.rows) {
    if (r.status != "ok") continue;
    auto it = std::find_if(sets.begin(), sets.end(),
                           [&](const SolutionSet& s) { return s.label == r.solver; });
    if (it == sets.end()) {
      sets.push_back(SolutionSet{r.solver, {}});
      it = sets.end() - 1;
    }
    it->values.push_back(r.best_value);
  }
  for (const SolutionSet& s : sets) {
    if (s.values.empty())
      throw std::runtime_error("compare: solver '" + s.label + "' has no successful runs");
  }
  if (sets.empty()) throw std::runtime_error("compare: archive holds no successful runs");
  return sets;
}

}  // namespace detail

/// Builds the Case-G or Case-R comparison from archived best values: trims
/// every solver to its best H = min_s H_s values, constructs the reference
/// CDF, and scores PERC / area / OPISD per solver.
inline ComparisonReport compare(const RunArchive& archive, const LoadedExperiment& lx,
                                char mode, std::optional<double> y_g_arg = std::nullopt,
                                std::optional<double> eps_arg = std::nullopt) {
  if (mode != 'G' && mode != 'R') throw std::invalid_argument("compare: mode must be G or R");
  std::vector<SolutionSet> sets = detail::solution_sets(archive);

  ComparisonReport report;
  report.mode = mode;
  report.eps = eps_arg ? *eps_arg : lx.config.eps;
  if (report.eps < 0) throw std::invalid_argument("compare: eps must be >= 0");

  std::size_t h = std::numeric_limits<std::size_t>::max();
  for (const SolutionSet& s : sets) h = std::min(h, s.values.size());
  report.h = h;

  std::vector<SolutionSet> trimmed;
  ReferenceKind kind;
  double y_g = 0.0;
  if (mode == 'G') {
    kind = ReferenceKind::global;
    if (y_g_arg) {
      y_g = *y_g_arg;
    } else if (lx.config.y_g) {
      y_g = *lx.config.y_g;
    } else if (lx.config.enumeration_budget) {
      y_g = global_optimum(*lx.network, lx.problem.limits, lx.problem.penalties,
                           lx.problem.pf, *lx.config.enumeration_budget)
                .y_g;
    } else {
      throw std::runtime_error("compare: mode G needs y_g (flag, config, or enumeration budget)");
    }
    report.y_g = y_g;
    for (SolutionSet& s : sets) {
      for (double& v : s.values) {
        if (v < y_g - 1e-9)
          throw std::runtime_error("compare: solver '" + s.label + "' archived value " +
                                   detail::format_double(v) +
                                   " lies below the declared optimum " +
                                   detail::format_double(y_g));
        if (v < y_g) v = y_g;  // tolerated re-evaluation fuzz, at most 1e-9
      }
      const EmpiricalCdf cdf = build_cdf(s.values);
      trimmed.push_back(SolutionSet{
          s.label, std::vector<double>(cdf.values().begin(), cdf.values().begin() + h)});
    }
  } else {
    if (sets.size() < 2)
      throw std::runtime_error("compare: mode R requires at least two solvers");
    kind = ReferenceKind::relative;
    RelativeReference rel = reference_cdf_relative(sets);
    trimmed = std::move(rel.trimmed);
    report.reference_values = rel.reference.cdf.values();
  }

  const ReferenceCdf reference = (kind == ReferenceKind::global)
                                     ? reference_cdf_global(y_g, h)
                                     : ReferenceCdf{ReferenceKind::relative,
                                                    EmpiricalCdf(report.reference_values),
                                                    std::numeric_limits<double>::quiet_NaN()};
  if (kind == ReferenceKind::global) report.reference_values = reference.cdf.values();
  report.reference_digest = detail::values_digest(report.reference_values);

  std::vector<SolverScore> scores;
  for (const SolutionSet& s : trimmed) {
    const EmpiricalCdf cdf = build_cdf(s.values);
    SolverScore sc;
    sc.label = s.label;
    sc.area = area_vs_reference(cdf, reference);
    sc.perc_pct = perc(cdf, reference, report.eps);
    scores.push_back(std::move(sc));
  }
  report.solvers = rank_solvers(std::move(scores));
  return report;
}

inline nlohmann::json report_to_json(const ComparisonReport& report) {
  nlohmann::json doc;
  doc["mode"] = std::string(1, report.mode);
  doc["H"] = report.h;
  doc["eps"] = report.eps;
  if (report.y_g) doc["y_g"] = *report.y_g;
  doc["reference"] = {{"kind", std::string(1, report.mode)},
                      {"values_digest", report.reference_digest}};
  doc["solvers"] = nlohmann::json::array();
  for (const SolverScore& s : report.solvers) {
    doc["solvers"].push_back({{"label", s.label},
                              {"perc_pct", s.perc_pct},
                              {"area_pu", s.area},
                              {"opisd", s.opisd},
                              {"rank", s.rank}});
  }
  return doc;
}

inline std::string report_to_csv(const ComparisonReport& report) {
  std::string out = "rank,label,perc_pct,area_pu,opisd\n";
  for (const SolverScore& s : report.solvers) {
    out += std::to_string(s.rank);
    out += ',';
    out += s.label;
    out += ',';
    out += detail::format_double(s.perc_pct);
    out += ',';
    out += detail::format_double(s.area);
    out += ',';
    out += detail::format_double(s.opisd);
    out += '\n';
  }
  return out;
}

inline void write_report(const ComparisonReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  detail::write_file(dir / "report.json", report_to_json(report).dump(2) + "\n");
  detail::write_file(dir / "report.csv", report_to_csv(report));
}

/// Writes one (y, F) breakpoint file per test CDF plus the reference CDF.
/// The comparison is recomputed from the archive; the digest must match the
/// report being served.
inline std::vector<std::filesystem::path> emit_cdf_data(const RunArchive& archive,
                                                        const LoadedExperiment& lx,
                                                        const ComparisonReport& report,
                                                        const std::filesystem::path& dir) {
  const ComparisonReport rebuilt = compare(archive, lx, report.mode, report.y_g, report.eps);
  if (rebuilt.reference_digest != report.reference_digest)
    throw std::runtime_error("emit_cdf_data: archive no longer matches the report "
                             "(reference digest mismatch)");

  std::filesystem::create_directories(dir);
  const std::size_t h = rebuilt.h;
  auto write_cdf = [&](const std::filesystem::path& file, const std::vector<double>& values) {
    std::string out = "y,F\n";
    for (std::size_t z = 1; z <= values.size(); ++z) {
      out += detail::format_double(values[z - 1]);
      out += ',';
      out += detail::format_double(static_cast<double>(z) / static_cast<double>(h));
      out += '\n';
    }
    detail::write_file(file, out);
  };

  std::vector<std::filesystem::path> written;
  write_cdf(dir / "cdf_reference.csv", rebuilt.reference_values);
  written.push_back(dir / "cdf_reference.csv");

  std::vector<SolutionSet> sets = detail::solution_sets(archive);
  for (SolutionSet& s : sets) {
    std::sort(s.values.begin(), s.values.end());
    if (report.mode == 'G' && report.y_g) {
      for (double& v : s.values) {
        if (v < *report.y_g) v = *report.y_g;
      }
    }
    s.values.resize(h);
    const std::filesystem::path file =
        dir / ("cdf_" + detail::sanitize_filename(s.label) + ".csv");
    write_cdf(file, s.values);
    written.push_back(file);
  }
  return written;
}

}  // namespace sdbench

// Command-line front end: count / enumerate / solve / compare / emit-cdf.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sdbench/enumeration.hpp"
#include "sdbench/harness.hpp"
#include "sdbench/network.hpp"

namespace fs = std::filesystem;

namespace {

sdbench::Network load_network(const std::string& path) {
  return sdbench::parse_network(sdbench::detail::read_file(path));
}

int cmd_count(const std::string& network_path) {
  const sdbench::Network net = load_network(network_path);
  std::cout << sdbench::count_radial_configs(net).get_str() << "\n";
  return 0;
}

int cmd_enumerate(const std::string& network_path, std::uint64_t budget) {
  const sdbench::Network net = load_network(network_path);
  const sdbench::Problem problem = sdbench::make_problem(net);
  const sdbench::GlobalOptimum opt = sdbench::global_optimum(
      net, problem.limits, problem.penalties, problem.pf, budget);
  std::cout << "y_g: " << sdbench::detail::format_double(opt.y_g) << "\n";
  std::cout << "feasible: " << opt.enumerated << "\n";
  std::cout << "infeasible: " << opt.infeasible << "\n";
  for (const sdbench::RadialConfiguration& cfg : opt.optimal_configs) {
    const auto ids = sdbench::open_branch_ids(net, cfg);
    std::cout << "optimal_open:";
    for (const auto& id : ids) std::cout << " " << id;
    std::cout << "\n";
  }
  return 0;
}

int cmd_solve(const std::string& experiment_path, std::string out_dir) {
  sdbench::LoadedExperiment lx =
      sdbench::load_experiment(sdbench::load_experiment_file(experiment_path));
  const sdbench::RunArchive archive = sdbench::run_experiment(lx);
  if (out_dir.empty()) out_dir = lx.config.output_dir;
  if (out_dir.empty()) out_dir = "archive_" + lx.config.experiment_id;
  sdbench::write_archive(archive, lx.config, out_dir);
  std::cout << "archived " << archive.rows.size() << " rows to " << out_dir << "\n";
  return 0;
}

int cmd_compare(const std::string& archive_dir, const std::string& mode,
                std::optional<double> y_g, std::optional<double> eps,
                std::string out_dir) {
  sdbench::LoadedArchive la = sdbench::load_archive(archive_dir);
  const sdbench::LoadedExperiment lx = sdbench::load_experiment(la.config);
  const sdbench::ComparisonReport report =
      sdbench::compare(la.archive, lx, mode[0], y_g, eps);
  if (out_dir.empty()) out_dir = archive_dir;
  sdbench::write_report(report, out_dir);
  std::cout << "mode " << report.mode << ", H = " << report.h << "\n";
  for (const sdbench::SolverScore& s : report.solvers) {
    std::cout << s.rank << ". " << s.label
              << "  perc = " << sdbench::detail::format_double(s.perc_pct, 6) << "%"
              << "  area = " << sdbench::detail::format_double(s.area, 6)
              << "  opisd = " << sdbench::detail::format_double(s.opisd, 6) << "\n";
  }
  std::cout << "report written to " << out_dir << "\n";
  return 0;
}

int cmd_emit_cdf(const std::string& archive_dir, const std::string& report_path,
                 std::string out_dir) {
  sdbench::LoadedArchive la = sdbench::load_archive(archive_dir);
  const sdbench::LoadedExperiment lx = sdbench::load_experiment(la.config);

  const nlohmann::json doc = nlohmann::json::parse(sdbench::detail::read_file(report_path));
  sdbench::ComparisonReport report;
  report.mode = doc.at("mode").get<std::string>()[0];
  report.h = doc.at("H").get<std::size_t>();
  report.eps = doc.value("eps", 0.0);
  if (doc.contains("y_g")) report.y_g = doc["y_g"].get<double>();
  report.reference_digest = doc.at("reference").at("values_digest").get<std::string>();

  if (out_dir.empty()) out_dir = fs::path(report_path).parent_path().string();
  if (out_dir.empty()) out_dir = ".";
  const auto files = sdbench::emit_cdf_data(la.archive, lx, report, out_dir);
  for (const auto& f : files) std::cout << f.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark heuristic reconfiguration solvers with "
               "stochastic-dominance indicators"};
  app.require_subcommand(1);

  std::string network_path;
  auto* count = app.add_subcommand("count", "Print the exact number of radial configurations");
  count->add_option("network", network_path, "network JSON document")->required();

  std::string enum_network;
  std::uint64_t budget = 10'000'000;
  auto* enumerate = app.add_subcommand("enumerate",
                                       "Exhaustively find the global optimum (Case G)");
  enumerate->add_option("network", enum_network, "network JSON document")->required();
  enumerate->add_option("--budget", budget, "enumeration budget (configurations)");

  std::string experiment_path, solve_out;
  auto* solve = app.add_subcommand("solve", "Run an experiment and archive all samples");
  solve->add_option("experiment", experiment_path, "experiment JSON document")->required();
  solve->add_option("--out", solve_out, "archive directory");

  std::string cmp_archive, cmp_mode, cmp_out;
  double cmp_y_g = 0.0, cmp_eps = 0.0;
  auto* compare = app.add_subcommand("compare", "Score and rank the archived solvers");
  compare->add_option("archive", cmp_archive, "archive directory")->required();
  compare->add_option("--mode", cmp_mode, "G (global optimum) or R (relative)")
      ->required()
      ->check(CLI::IsMember({"G", "R"}));
  auto* yg_opt = compare->add_option("--y-g", cmp_y_g, "declared global optimum (mode G)");
  auto* eps_opt = compare->add_option("--eps", cmp_eps, "PERC matching tolerance");
  compare->add_option("--out", cmp_out, "report directory (default: the archive)");

  std::string emit_archive, emit_report, emit_out;
  auto* emit = app.add_subcommand("emit-cdf", "Write (y, F) breakpoint files for plotting");
  emit->add_option("archive", emit_archive, "archive directory")->required();
  emit->add_option("comparison", emit_report, "report.json produced by compare")->required();
  emit->add_option("--out", emit_out, "output directory (default: next to the report)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (count->parsed()) return cmd_count(network_path);
    if (enumerate->parsed()) return cmd_enumerate(enum_network, budget);
    if (solve->parsed()) return cmd_solve(experiment_path, solve_out);
    if (compare->parsed())
      return cmd_compare(cmp_archive, cmp_mode,
                         yg_opt->count() ? std::optional<double>(cmp_y_g) : std::nullopt,
                         eps_opt->count() ? std::optional<double>(cmp_eps) : std::nullopt,
                         cmp_out);
    if (emit->parsed()) return cmd_emit_cdf(emit_archive, emit_report, emit_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

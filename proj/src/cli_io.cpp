#include "mmrl/cli_io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "mmrl/errors.hpp"

namespace mmrl {

std::string format_double(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

std::vector<std::string> per_step_columns(bool with_comparator) {
  std::vector<std::string> cols{"k",         "realization", "x_norm_sq",
                                "u_norm_sq", "stage_cost",  "cum_cost",
                                "cum_regret", "chosen_or_theta_dist", "sigma_uk_sq",
                                "misid"};
  if (with_comparator) cols.emplace_back("opt_cum_cost");
  return cols;
}

std::vector<std::string> summary_columns(bool with_comparator) {
  std::vector<std::string> cols{"k", "mean_regret", "misid_freq", "bound", "mean_V"};
  if (with_comparator) cols.emplace_back("mean_opt_regret");
  return cols;
}

namespace {

void write_header(std::ostream& out, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

}  // namespace

void write_per_step_csv(std::ostream& out, const std::vector<TrajectoryLog>& logs) {
  const bool with_opt = !logs.empty() && std::all_of(logs.begin(), logs.end(), [](const auto& l) {
    return l.opt_cum_cost.size() == l.size() && l.size() > 0;
  });
  write_header(out, per_step_columns(with_opt));
  for (const auto& log : logs) {
    for (std::size_t i = 0; i < log.size(); ++i) {
      out << (i + 1) << ',' << log.realization << ',' << format_double(log.x_norm_sq[i]) << ','
          << format_double(log.u_norm_sq[i]) << ',' << format_double(log.stage_cost[i]) << ','
          << format_double(log.cum_cost[i]) << ',' << format_double(log.cum_regret[i]) << ','
          << format_double(log.chosen_or_theta_dist[i]) << ','
          << format_double(log.sigma_uk_sq[i]) << ',' << static_cast<int>(log.misid[i]);
      if (with_opt) out << ',' << format_double(log.opt_cum_cost[i]);
      out << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, const MonteCarloSummary& s) {
  const bool with_opt = !s.mean_opt_regret.empty();
  write_header(out, summary_columns(with_opt));
  for (std::size_t i = 0; i < s.mean_regret.size(); ++i) {
    out << (i + 1) << ',' << format_double(s.mean_regret[i]) << ','
        << format_double(s.misid_freq[i]) << ',' << format_double(s.bound_series[i]) << ','
        << format_double(s.mean_V[i]);
    if (with_opt) out << ',' << format_double(s.mean_opt_regret[i]);
    out << '\n';
  }
}

namespace {

std::filesystem::path resolve(const RunOptions& options, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative() && !options.out_dir.empty()) p = options.out_dir / p;
  return p;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << content;
  out.close();
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace

RunReport run_experiment(const SimConfig& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.per_step_path = resolve(options, config.outputs.per_step_path);
  report.summary_path = resolve(options, config.outputs.summary_path);
  try {
    const Experiment experiment = prepare_experiment(config);
    const auto logs = run_realizations(experiment, config.realizations, config.threads);
    const auto summary = aggregate(logs, config.M, experiment.benchmark.gamma);

    std::ostringstream per_step;
    write_per_step_csv(per_step, logs);
    std::ostringstream summary_text;
    write_summary_csv(summary_text, summary);
    write_file(report.per_step_path, per_step.str());
    write_file(report.summary_path, summary_text.str());

    report.total_mean_regret = summary.mean_regret.empty() ? 0.0 : summary.mean_regret.back();
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(report.per_step_path, ec);
    std::filesystem::remove(report.summary_path, ec);
    throw;
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ostringstream digest;
  digest << "algo=" << to_string(config.algo) << " seed=" << config.master_seed
         << " realizations=" << config.realizations << " horizon=" << config.horizon
         << " mean_regret=" << format_double(report.total_mean_regret)
         << " wall_time_s=" << format_double(std::round(report.wall_seconds * 1000.0) / 1000.0);
  report.digest = digest.str();
  return report;
}

int cli_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Online reinforcement learning over multiple candidate dynamics models"};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> algo;
  std::optional<int> realizations;
  std::string out_dir;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON experiment configuration")->required();
  app.add_option("--seed", seed, "Override master_seed");
  app.add_option("--algo", algo, "Override algo")->check(CLI::IsMember({"s1", "s2", "s3"}));
  app.add_option("--realizations", realizations, "Override the number of realizations")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "Directory for relative output paths");
  app.add_flag("--quiet", quiet, "Do not print the run digest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  SimConfig config;
  try {
    config = load_config(config_path);
    if (algo && *algo != to_string(config.algo)) {
      // Re-read the document so algorithm-dependent defaults follow the override.
      std::ifstream in(config_path);
      auto doc = nlohmann::json::parse(in);
      doc["algo"] = *algo;
      config = parse_config(doc.dump());
    }
    if (seed) config.master_seed = *seed;
    if (realizations) config.realizations = *realizations;
    validate(config);
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    RunOptions options;
    options.out_dir = out_dir;
    options.quiet = quiet;
    const auto report = run_experiment(config, options);
    if (!quiet) out << report.digest << "\n";
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace mmrl

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mmrl/config.hpp"
#include "mmrl/harness.hpp"

namespace mmrl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

std::vector<std::string> per_step_columns(bool with_comparator);
std::vector<std::string> summary_columns(bool with_comparator);

void write_per_step_csv(std::ostream& out, const std::vector<TrajectoryLog>& logs);
void write_summary_csv(std::ostream& out, const MonteCarloSummary& summary);

struct RunOptions {
  std::filesystem::path out_dir;  // prefix for relative output paths
  bool quiet = false;
};

struct RunReport {
  std::filesystem::path per_step_path;
  std::filesystem::path summary_path;
  double total_mean_regret = 0.0;
  double wall_seconds = 0.0;
  std::string digest;
};

// Runs all realizations and writes both CSVs; on failure no output file is
// left behind and the error propagates.
RunReport run_experiment(const SimConfig& config, const RunOptions& options = {});

// Full command line handling; returns the process exit status.
int cli_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mmrl

#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmrl/scoring.hpp"

namespace mmrl {

enum class Algo { S1, S2, S3 };
enum class ComparatorMode { SteadyState, SameNoise };

using DenseRows = std::vector<std::vector<double>>;

struct SystemConfig {
  std::string preset = "leaky_kron";  // or "explicit"
  int blocks = 5;
  int block_dim = 4;
  double diag = 0.8;
  DenseRows A;  // explicit only
  DenseRows B;

  friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

struct CandidatesConfig {
  int m = 10;
  double abs_err = 0.1;
  double rel_err = 0.2;
  bool include_truth = true;
  // Draw a fresh candidate set inside every realization instead of one per run.
  bool per_realization = false;

  friend bool operator==(const CandidatesConfig&, const CandidatesConfig&) = default;
};

struct CoverConfig {
  double epsilon = 0.0;

  friend bool operator==(const CoverConfig&, const CoverConfig&) = default;
};

struct DomainConfig {
  std::string kind = "box";  // "box" or "ball", both centered on the nominal system
  double abs_err = 0.1;      // box
  double rel_err = 0.2;      // box
  double radius = std::numeric_limits<double>::infinity();  // ball

  friend bool operator==(const DomainConfig&, const DomainConfig&) = default;
};

struct ParamConfig {
  DomainConfig domain;
  double ridge = 1e-8;
  std::optional<double> epsilon;        // default p / N
  int max_attempts = 10000;
  std::optional<double> misid_epsilon;  // default epsilon

  friend bool operator==(const ParamConfig&, const ParamConfig&) = default;
};

struct ScheduleConfig {
  ScheduleMode mode = ScheduleMode::AppB_S1;
  std::optional<double> c_e;        // auto when absent
  std::optional<double> log_count;  // auto when absent
  std::optional<double> epsilon;    // auto when absent

  friend bool operator==(const ScheduleConfig&, const ScheduleConfig&) = default;
};

struct OutputsConfig {
  std::string per_step_path = "per_step.csv";
  std::string summary_path = "summary.csv";
  ComparatorMode comparator_mode = ComparatorMode::SteadyState;

  friend bool operator==(const OutputsConfig&, const OutputsConfig&) = default;
};

struct SimConfig {
  Algo algo = Algo::S1;
  long horizon = 200;
  std::uint64_t master_seed = 1;
  int realizations = 40;
  double eta = 10.0;
  int M = 2;
  double b = std::numeric_limits<double>::infinity();
  double sigma = 1.0;
  ScheduleConfig schedule;
  SystemConfig system;
  std::optional<CandidatesConfig> candidates;
  std::optional<CoverConfig> cover;
  std::optional<ParamConfig> param;
  OutputsConfig outputs;
  int threads = 1;  // 0 = hardware concurrency

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

std::string to_string(Algo algo);
std::string to_string(ScheduleMode mode);
std::string to_string(ComparatorMode mode);

// Parses a JSON document; fills defaults for the chosen algorithm and
// validates. Throws ParseError or ValidationError.
SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::filesystem::path& path);

// Throws ValidationError naming the violated invariant.
void validate(const SimConfig& config);

// Fully explicit document; parse_config(dump) == config.
nlohmann::ordered_json config_to_json(const SimConfig& config);

}  // namespace mmrl

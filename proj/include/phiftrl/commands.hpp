#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "phiftrl/config.hpp"

namespace phiftrl {

/// Command-line overrides applied on top of the configuration document.
struct CliOverrides {
  std::optional<std::string> out;
  std::optional<std::string> format;  // "csv" | "json"
  std::optional<std::uint64_t> seed;
};

struct BoundFlags {
  long T = 0;
  double eta = 0.0;
  double L = 0.0;
  std::optional<double> alpha;  // overrides the family constant when set
  std::string family = "kl";
  double p = 3.0;
  double pi_j = 0.0;
};

struct AppendixAFlags {
  long T = 10000;
  double C = 1.0;
  std::uint64_t seed = 0;
  std::string out = "appendix_a.csv";
  std::string format = "csv";
};

// Exit codes: 0 success, 1 self-check failure, 2 configuration/flag error,
// 3 runtime numerical failure (message carries the round index).
int cmd_run(const std::string& config_path, const CliOverrides& overrides);
int cmd_compare(const std::string& config_path, const CliOverrides& overrides);
int cmd_bound(const BoundFlags& flags);
int cmd_appendix_a(const AppendixAFlags& flags);
int cmd_selfcheck();

}  // namespace phiftrl

#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phiftrl/harness.hpp"

namespace phiftrl {

/// Raised on malformed configuration; `key` names the offending entry
/// (dotted path, e.g. "learners[0].eta.value").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error(key + ": " + what), key(key) {}
  std::string key;
};

struct EtaSpec {
  enum class Kind { Fixed, InvSqrtT, Doubling };
  Kind kind = Kind::InvSqrtT;
  double value = 0.0;  // fixed
  double eta0 = 1.0;   // doubling
};

struct PriorSpec {
  enum class Kind { Experts, Grid, Explicit };
  Kind kind = Kind::Experts;
  int count = 2;             // experts
  DensitySpec density;       // grid
  int atoms = 129;           // grid
  DiscretePrior explicit_prior;
};

struct LearnerSpec {
  std::string name;
  std::string family;  // "kl" | "chi2" | "power" | "nested-ewa-chi2" | "ovi"
  double p = 3.0;      // power exponent
  PriorSpec prior;
  EtaSpec eta;
  Accounting accounting = Accounting::ExpectedLoss;
  // nested-ewa-chi2
  int levels = 5;
  int grid = 129;
  EtaSpec eta_inner;
  // ovi
  GaussianMeanField gaussian_prior{{0.0}, {1.0}};
  LossGradientModel gradient = LossGradientModel::exact_quadratic();
  ScaleBounds scale_bounds;
};

struct OutputSpec {
  enum class Format { Csv, Json };
  std::string path;  // empty = stdout
  Format format = Format::Csv;
};

struct ExperimentConfig {
  StreamSpec stream;
  std::vector<LearnerSpec> learners;
  OutputSpec output;
  std::uint64_t seed = 0;
  bool bounds = true;
};

/// Parse and validate; throws ConfigError naming the offending key.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// Build the named family ("kl", "chi2", "power" with exponent p).
PhiFamily family_from_name(const std::string& name, double p = 3.0);

/// Resolve an eta spec against a horizon (inv-sqrt-T -> 1/sqrt(T)).
double resolve_eta(const EtaSpec& eta, long horizon);

/// Construct the configured learner against a materialized stream.
std::unique_ptr<Learner> build_learner(const LearnerSpec& spec, const Stream& stream,
                                       std::uint64_t seed);

// --- record serialization (the CLI output schema) ---

inline constexpr const char* kRecordCsvHeader =
    "learner,t,inst_loss,cum_loss,best_cum_loss,regret,lambda,bound,diag";

/// Doubles rendered with 17 significant digits (lossless round trip).
std::string format_number(double v);

void write_records_csv(std::ostream& out, const std::string& label,
                       const std::vector<RunRecord>& records, bool with_header,
                       bool emit_bounds = true);
nlohmann::json records_to_json(const std::string& label, const std::vector<RunRecord>& records,
                               bool emit_bounds = true);

}  // namespace phiftrl

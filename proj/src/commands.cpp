#include "phiftrl/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace phiftrl {

namespace {

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("PHIFTRL_LOG");
    if (!env) return 0;
    const std::string v(env);
    if (v == "debug") return 2;
    if (v == "info") return 1;
    return 0;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[phiftrl] " << msg << "\n";
}

ExperimentConfig load_with_overrides(const std::string& path, const CliOverrides& overrides) {
  ExperimentConfig cfg = load_config(path);
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.out) cfg.output.path = *overrides.out;
  if (overrides.format) {
    if (*overrides.format == "csv") {
      cfg.output.format = OutputSpec::Format::Csv;
    } else if (*overrides.format == "json") {
      cfg.output.format = OutputSpec::Format::Json;
    } else {
      throw ConfigError("output.format", "must be 'csv' or 'json'");
    }
  }
  return cfg;
}

struct LabeledRun {
  std::string label;
  std::vector<RunRecord> records;
};

// Quadratic streams compare every learner against the same global fixed
// scalar, so curves from different atom grids line up; row-based streams use
// each learner's own best atom.
RunOptions options_for(const Stream& stream) {
  RunOptions options;
  if (stream.quadratic_target()) options.comparator = Comparator::GlobalQuadratic;
  return options;
}

std::vector<LabeledRun> run_all(const ExperimentConfig& cfg) {
  StreamSpec stream_spec = cfg.stream;
  stream_spec.seed = cfg.seed;
  const Stream stream = Stream::materialize(stream_spec);
  std::vector<LabeledRun> runs;
  for (const LearnerSpec& spec : cfg.learners) {
    log_info("running learner '" + spec.name + "' over T = " + std::to_string(stream.horizon()));
    auto learner = build_learner(spec, stream, cfg.seed);
    runs.push_back({spec.name, run_online(*learner, stream, options_for(stream))});
  }
  return runs;
}

std::string serialize_runs(const std::vector<LabeledRun>& runs, OutputSpec::Format format,
                           bool emit_bounds) {
  std::ostringstream out;
  if (format == OutputSpec::Format::Csv) {
    bool header = true;
    for (const auto& run : runs) {
      write_records_csv(out, run.label, run.records, header, emit_bounds);
      header = false;
    }
  } else {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& run : runs) {
      for (auto& obj : records_to_json(run.label, run.records, emit_bounds)) {
        arr.push_back(std::move(obj));
      }
    }
    out << arr.dump(2) << "\n";
  }
  return out.str();
}

// Output files are only opened once every learner has finished, so failed
// runs leave nothing behind.
int emit(const std::string& payload, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << payload;
    return 0;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot open output file '" << path << "'\n";
    return 3;
  }
  out << payload;
  log_info("wrote " + path);
  return 0;
}

int report_config_error(const ConfigError& e) {
  std::cerr << "config error: " << e.what() << "\n";
  return 2;
}

int report_runtime_error(const std::exception& e) {
  std::cerr << "runtime error: " << e.what() << "\n";
  return 3;
}

std::string shifted_sibling(const std::string& path) {
  const std::size_t dot = path.find_last_of('.');
  const std::size_t slash = path.find_last_of("/\\");
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return path + "_shifted";
  }
  return path.substr(0, dot) + "_shifted" + path.substr(dot);
}

}  // namespace

int cmd_run(const std::string& config_path, const CliOverrides& overrides) {
  ExperimentConfig cfg;
  try {
    cfg = load_with_overrides(config_path, overrides);
  } catch (const ConfigError& e) {
    return report_config_error(e);
  }
  try {
    const auto runs = run_all(cfg);
    return emit(serialize_runs(runs, cfg.output.format, cfg.bounds), cfg.output.path);
  } catch (const std::exception& e) {
    return report_runtime_error(e);
  }
}

int cmd_compare(const std::string& config_path, const CliOverrides& overrides) {
  ExperimentConfig cfg;
  try {
    cfg = load_with_overrides(config_path, overrides);
    if (cfg.learners.size() < 2) {
      throw ConfigError("learners", "compare needs at least two learners");
    }
  } catch (const ConfigError& e) {
    return report_config_error(e);
  }
  try {
    StreamSpec stream_spec = cfg.stream;
    stream_spec.seed = cfg.seed;
    const Stream stream = Stream::materialize(stream_spec);
    std::ostringstream out;
    out << "learner,final_regret,final_bound,L_estimate\n";
    for (const LearnerSpec& spec : cfg.learners) {
      auto learner = build_learner(spec, stream, cfg.seed);
      const auto records = run_online(*learner, stream, options_for(stream));
      const RunRecord& last = records.back();
      out << spec.name << ',' << format_number(last.regret) << ',';
      if (last.bound) out << format_number(*last.bound);
      out << ',';
      if (auto L = learner->lipschitz_estimate()) out << format_number(*L);
      out << "\n";
    }
    return emit(out.str(), cfg.output.path);
  } catch (const std::exception& e) {
    return report_runtime_error(e);
  }
}

int cmd_bound(const BoundFlags& flags) {
  try {
    if (flags.T < 0) throw std::invalid_argument("T must be >= 0");
    if (!(flags.eta > 0.0)) throw std::invalid_argument("eta must be positive");
    if (!(flags.L >= 0.0)) throw std::invalid_argument("L must be >= 0");
    const PhiFamily family = family_from_name(flags.family, flags.p);
    const double term = countable_bound_term(family, flags.pi_j);
    BoundParams params;
    params.L = flags.L;
    params.alpha = flags.alpha ? flags.alpha : family.alpha;
    params.eta = flags.eta;
    params.divergence_term = term;
    const double bound = theoretical_bound(flags.T, params, 0.0);
    std::cout << "countable_bound_term = " << format_number(term) << "\n";
    std::cout << "theoretical_bound = " << format_number(bound) << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "flag error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_appendix_a(const AppendixAFlags& flags) {
  if (flags.T < 100) {
    std::cerr << "flag error: T must be >= 100\n";
    return 2;
  }
  if (!(flags.C > 0.0)) {
    std::cerr << "flag error: C must be positive\n";
    return 2;
  }
  if (flags.format != "csv" && flags.format != "json") {
    std::cerr << "flag error: format must be 'csv' or 'json'\n";
    return 2;
  }
  try {
    const double T = static_cast<double>(flags.T);
    const double eta_kl = std::sqrt(std::log(T)) / (4.0 * flags.C * flags.C * std::sqrt(T));
    const double eta_chi2 = std::pow(T, -1.0 / 3.0);
    const double eta_inner = std::sqrt(std::log(T)) / (4.0 * std::sqrt(T));
    const double eta_outer = 1.0 / std::sqrt(T);

    StreamSpec bounded;
    bounded.kind = StreamSpec::Kind::QuadraticRegression;
    bounded.horizon = flags.T;
    bounded.seed = flags.seed;
    bounded.signal.kind = SignalSpec::Kind::Sinusoid;
    bounded.signal.amplitude = flags.C;
    bounded.signal.period = 200.0;

    StreamSpec shifted = bounded;
    shifted.seed = flags.seed + 1;
    shifted.signal.kind = SignalSpec::Kind::Shifted;
    shifted.signal.m_star = 3.0 * flags.C;
    shifted.signal.noise = 0.1;

    const RunOptions global{Comparator::GlobalQuadratic};
    const auto run_three = [&](const StreamSpec& spec) {
      const Stream stream = Stream::materialize(spec);
      std::vector<LabeledRun> runs;
      {
        PosteriorLearner kl(grid_prior(DensitySpec::uniform(-flags.C, flags.C), 129), make_kl(),
                            eta_kl);
        log_info("appendix-a: kl-uniform");
        runs.push_back({"kl-uniform", run_online(kl, stream, global)});
      }
      {
        PosteriorLearner chi2(grid_prior(DensitySpec::student(4.0), 129), make_chi2(), eta_chi2);
        log_info("appendix-a: chi2-student");
        runs.push_back({"chi2-student", run_online(chi2, stream, global)});
      }
      {
        NestedEwaChi2 nested(5, 129, stream, eta_inner, eta_outer);
        log_info("appendix-a: nested-ewa-chi2");
        runs.push_back({"nested-ewa-chi2", run_online(nested, stream, global)});
      }
      return runs;
    };

    const OutputSpec::Format format =
        flags.format == "json" ? OutputSpec::Format::Json : OutputSpec::Format::Csv;
    int rc = emit(serialize_runs(run_three(bounded), format, true), flags.out);
    if (rc != 0) return rc;
    return emit(serialize_runs(run_three(shifted), format, true),
                flags.out.empty() ? flags.out : shifted_sibling(flags.out));
  } catch (const std::exception& e) {
    return report_runtime_error(e);
  }
}

int cmd_selfcheck() {
  const auto results = run_selfcheck();
  bool all = true;
  for (const auto& r : results) {
    if (r.passed) {
      std::cout << "ok " << r.group << "\n";
    } else {
      std::cout << "FAIL " << r.group << (r.detail.empty() ? "" : ": " + r.detail) << "\n";
      all = false;
    }
  }
  return all ? 0 : 1;
}

}  // namespace phiftrl

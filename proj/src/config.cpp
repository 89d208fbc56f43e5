#include "phiftrl/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace phiftrl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError(key, what);
}

const json& need(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) fail(path + key, "missing");
  return obj.at(key);
}

double need_number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = need(obj, key, path);
  if (!v.is_number()) fail(path + key, "must be a number");
  return v.get<double>();
}

double opt_number(const json& obj, const std::string& key, double fallback,
                  const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(path + key, "must be a number");
  return v.get<double>();
}

std::string need_string(const json& obj, const std::string& key, const std::string& path) {
  const json& v = need(obj, key, path);
  if (!v.is_string()) fail(path + key, "must be a string");
  return v.get<std::string>();
}

SignalSpec parse_signal(const json& doc, const std::string& path) {
  SignalSpec sig;
  const std::string type = need_string(doc, "type", path);
  if (type == "sinusoid") {
    sig.kind = SignalSpec::Kind::Sinusoid;
    sig.amplitude = opt_number(doc, "amplitude", 1.0, path);
    sig.period = opt_number(doc, "period", 200.0, path);
    if (!(sig.period > 0.0)) fail(path + "period", "must be positive");
  } else if (type == "iid-bounded") {
    sig.kind = SignalSpec::Kind::IidBounded;
    sig.bound = opt_number(doc, "C", 1.0, path);
    if (!(sig.bound > 0.0)) fail(path + "C", "must be positive");
  } else if (type == "shifted") {
    sig.kind = SignalSpec::Kind::Shifted;
    sig.m_star = opt_number(doc, "m_star", 3.0, path);
    sig.noise = opt_number(doc, "noise", 0.1, path);
    if (sig.noise < 0.0) fail(path + "noise", "must be >= 0");
  } else {
    fail(path + "type", "unknown signal '" + type + "'");
  }
  return sig;
}

StreamSpec parse_stream(const json& doc) {
  StreamSpec s;
  const std::string path = "stream.";
  const std::string kind = need_string(doc, "kind", path);
  if (kind == "adversarial-experts") {
    s.kind = StreamSpec::Kind::AdversarialExperts;
    s.experts = static_cast<int>(opt_number(doc, "experts", 2, path));
    s.loss_cap = opt_number(doc, "loss_cap", 1.0, path);
    if (s.experts < 1) fail(path + "experts", "must be >= 1");
    if (!(s.loss_cap > 0.0)) fail(path + "loss_cap", "must be positive");
  } else if (kind == "quadratic-regression") {
    s.kind = StreamSpec::Kind::QuadraticRegression;
    s.signal = parse_signal(need(doc, "signal", path), path + "signal.");
  } else if (kind == "hinge-classification") {
    s.kind = StreamSpec::Kind::HingeClassification;
    s.radius = opt_number(doc, "radius", 1.0, path);
    s.dim = static_cast<int>(opt_number(doc, "dim", 2, path));
    if (!(s.radius > 0.0)) fail(path + "radius", "must be positive");
    if (s.dim < 1) fail(path + "dim", "must be >= 1");
  } else if (kind == "csv-file") {
    s.kind = StreamSpec::Kind::CsvFile;
    s.path = need_string(doc, "path", path);
    if (!std::filesystem::exists(s.path)) fail(path + "path", "file '" + s.path + "' not found");
  } else {
    fail(path + "kind", "unknown stream kind '" + kind + "'");
  }
  if (s.kind != StreamSpec::Kind::CsvFile) {
    s.horizon = static_cast<long>(need_number(doc, "T", path));
    if (s.horizon < 1) fail(path + "T", "must be >= 1");
  }
  return s;
}

EtaSpec parse_eta(const json& doc, const std::string& path) {
  EtaSpec eta;
  const std::string kind = need_string(doc, "kind", path);
  if (kind == "fixed") {
    eta.kind = EtaSpec::Kind::Fixed;
    eta.value = need_number(doc, "value", path);
    if (!(eta.value > 0.0)) fail(path + "value", "must be positive");
  } else if (kind == "inv-sqrt-T") {
    eta.kind = EtaSpec::Kind::InvSqrtT;
  } else if (kind == "doubling") {
    eta.kind = EtaSpec::Kind::Doubling;
    eta.eta0 = opt_number(doc, "eta0", 1.0, path);
    if (!(eta.eta0 > 0.0)) fail(path + "eta0", "must be positive");
  } else {
    fail(path + "kind", "unknown eta kind '" + kind + "'");
  }
  return eta;
}

DensitySpec parse_density(const json& doc, const std::string& path) {
  const std::string type = need_string(doc, "type", path);
  if (type == "uniform") {
    const double a = need_number(doc, "a", path);
    const double b = need_number(doc, "b", path);
    if (!(a < b)) fail(path + "a", "uniform density needs a < b");
    return DensitySpec::uniform(a, b);
  }
  if (type == "gaussian") {
    const double mean = opt_number(doc, "mean", 0.0, path);
    const double variance = opt_number(doc, "variance", 1.0, path);
    if (!(variance > 0.0)) fail(path + "variance", "must be positive");
    return DensitySpec::gaussian(mean, variance);
  }
  if (type == "student") {
    const double k = opt_number(doc, "k", 4.0, path);
    const double scale = opt_number(doc, "scale", 1.0, path);
    if (!(k > 0.0)) fail(path + "k", "must be positive");
    if (!(scale > 0.0)) fail(path + "scale", "must be positive");
    return DensitySpec::student(k, scale);
  }
  fail(path + "type", "unknown density '" + type + "'");
}

PriorSpec parse_prior(const json& doc, const std::string& path) {
  PriorSpec p;
  const std::string kind = need_string(doc, "kind", path);
  if (kind == "experts") {
    p.kind = PriorSpec::Kind::Experts;
    p.count = static_cast<int>(need_number(doc, "count", path));
    if (p.count < 1) fail(path + "count", "must be >= 1");
  } else if (kind == "grid") {
    p.kind = PriorSpec::Kind::Grid;
    p.density = parse_density(need(doc, "density", path), path + "density.");
    p.atoms = static_cast<int>(opt_number(doc, "atoms", 129, path));
    if (p.atoms < 2) fail(path + "atoms", "must be >= 2");
  } else if (kind == "explicit") {
    p.kind = PriorSpec::Kind::Explicit;
    const json& atoms = need(doc, "atoms", path);
    const json& weights = need(doc, "weights", path);
    if (!atoms.is_array() || !weights.is_array() || atoms.size() != weights.size()) {
      fail(path + "atoms", "atoms and weights must be arrays of equal length");
    }
    for (const auto& a : atoms) {
      Atom atom;
      if (a.is_number()) {
        atom.push_back(a.get<double>());
      } else if (a.is_array()) {
        for (const auto& c : a) {
          if (!c.is_number()) fail(path + "atoms", "atom coordinates must be numbers");
          atom.push_back(c.get<double>());
        }
      } else {
        fail(path + "atoms", "atoms must be numbers or arrays");
      }
      p.explicit_prior.atoms.push_back(std::move(atom));
    }
    for (const auto& w : weights) {
      if (!w.is_number()) fail(path + "weights", "must be numbers");
      p.explicit_prior.weights.push_back(w.get<double>());
    }
    try {
      validate_prior(p.explicit_prior);
    } catch (const std::invalid_argument& e) {
      fail(path + "weights", e.what());
    }
  } else {
    fail(path + "kind", "unknown prior kind '" + kind + "'");
  }
  return p;
}

LearnerSpec parse_learner(const json& doc, const std::string& path) {
  LearnerSpec l;
  l.family = need_string(doc, "family", path);
  l.name = doc.contains("name") ? need_string(doc, "name", path) : l.family;
  if (doc.contains("accounting")) {
    const std::string acc = need_string(doc, "accounting", path);
    if (acc == "expected") {
      l.accounting = Accounting::ExpectedLoss;
    } else if (acc == "posterior-mean") {
      l.accounting = Accounting::PosteriorMean;
    } else {
      fail(path + "accounting", "must be 'expected' or 'posterior-mean'");
    }
  }
  if (l.family == "kl" || l.family == "chi2" || l.family == "power") {
    if (l.family == "power") {
      l.p = need_number(doc, "p", path);
      if (!(l.p > 1.0)) fail(path + "p", "must be > 1");
    }
    l.prior = parse_prior(need(doc, "prior", path), path + "prior.");
    l.eta = parse_eta(need(doc, "eta", path), path + "eta.");
  } else if (l.family == "nested-ewa-chi2") {
    l.levels = static_cast<int>(opt_number(doc, "levels", 5, path));
    l.grid = static_cast<int>(opt_number(doc, "grid", 129, path));
    if (l.levels < 1) fail(path + "levels", "must be >= 1");
    if (l.grid < 2) fail(path + "grid", "must be >= 2");
    l.eta = parse_eta(need(doc, "eta", path), path + "eta.");
    l.eta_inner = doc.contains("eta_inner")
                      ? parse_eta(doc.at("eta_inner"), path + "eta_inner.")
                      : l.eta;
    if (l.eta.kind == EtaSpec::Kind::Doubling || l.eta_inner.kind == EtaSpec::Kind::Doubling) {
      fail(path + "eta.kind", "nested aggregation does not support the doubling schedule");
    }
    if (l.accounting == Accounting::PosteriorMean) {
      fail(path + "accounting", "nested aggregation reports expected losses only");
    }
  } else if (l.family == "ovi") {
    if (doc.contains("gaussian_prior")) {
      const json& gp = doc.at("gaussian_prior");
      const json& mean = need(gp, "mean", path + "gaussian_prior.");
      const json& scale = need(gp, "scale", path + "gaussian_prior.");
      if (!mean.is_array() || !scale.is_array() || mean.size() != scale.size() || mean.empty()) {
        fail(path + "gaussian_prior", "mean and scale must be equal-length arrays");
      }
      l.gaussian_prior.mean.clear();
      l.gaussian_prior.scale.clear();
      for (const auto& v : mean) l.gaussian_prior.mean.push_back(v.get<double>());
      for (const auto& v : scale) l.gaussian_prior.scale.push_back(v.get<double>());
      try {
        validate_mean_field(l.gaussian_prior);
      } catch (const std::invalid_argument& e) {
        fail(path + "gaussian_prior.scale", e.what());
      }
    }
    l.eta = parse_eta(need(doc, "eta", path), path + "eta.");
    if (l.eta.kind == EtaSpec::Kind::Doubling) {
      fail(path + "eta.kind", "ovi does not support the doubling schedule");
    }
    if (doc.contains("gradient")) {
      const json& g = doc.at("gradient");
      const std::string kind = need_string(g, "kind", path + "gradient.");
      if (kind == "exact-quadratic") {
        l.gradient = LossGradientModel::exact_quadratic();
      } else if (kind == "monte-carlo") {
        const int samples = static_cast<int>(opt_number(g, "samples", 32, path + "gradient."));
        if (samples < 1) fail(path + "gradient.samples", "must be >= 1");
        l.gradient = LossGradientModel::monte_carlo(samples, 0);
      } else {
        fail(path + "gradient.kind", "must be 'exact-quadratic' or 'monte-carlo'");
      }
    }
    if (doc.contains("scale_bounds")) {
      const json& b = doc.at("scale_bounds");
      if (!b.is_array() || b.size() != 2) fail(path + "scale_bounds", "must be [lo, hi]");
      l.scale_bounds.lo = b[0].get<double>();
      l.scale_bounds.hi = b[1].get<double>();
      if (!(l.scale_bounds.lo > 0.0) || !(l.scale_bounds.lo < l.scale_bounds.hi)) {
        fail(path + "scale_bounds", "needs 0 < lo < hi");
      }
    }
  } else {
    fail(path + "family", "unknown family '" + l.family + "'");
  }
  return l;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) fail("config", "top-level document must be an object");
  ExperimentConfig cfg;
  cfg.stream = parse_stream(need(doc, "stream", ""));
  const json& learners = need(doc, "learners", "");
  if (!learners.is_array() || learners.empty()) fail("learners", "need at least one learner");
  for (std::size_t i = 0; i < learners.size(); ++i) {
    cfg.learners.push_back(
        parse_learner(learners[i], "learners[" + std::to_string(i) + "]."));
  }
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_integer() && !doc.at("seed").is_number_unsigned()) {
      fail("seed", "must be an integer");
    }
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (doc.contains("output")) {
    const json& out = doc.at("output");
    if (out.contains("path")) cfg.output.path = need_string(out, "path", "output.");
    if (out.contains("format")) {
      const std::string f = need_string(out, "format", "output.");
      if (f == "csv") {
        cfg.output.format = OutputSpec::Format::Csv;
      } else if (f == "json") {
        cfg.output.format = OutputSpec::Format::Json;
      } else {
        fail("output.format", "must be 'csv' or 'json'");
      }
    }
  }
  if (doc.contains("bounds")) {
    if (!doc.at("bounds").is_boolean()) fail("bounds", "must be a boolean");
    cfg.bounds = doc.at("bounds").get<bool>();
  }
  // Cross-checks that do not need the materialized stream.
  const bool quadratic = cfg.stream.kind == StreamSpec::Kind::QuadraticRegression;
  const bool row_based = cfg.stream.kind == StreamSpec::Kind::AdversarialExperts ||
                         cfg.stream.kind == StreamSpec::Kind::CsvFile;
  for (std::size_t i = 0; i < cfg.learners.size(); ++i) {
    const LearnerSpec& l = cfg.learners[i];
    const std::string at = "learners[" + std::to_string(i) + "].";
    if ((l.family == "nested-ewa-chi2" || l.family == "ovi") && !quadratic) {
      fail(at + "family", "'" + l.family + "' needs a quadratic-regression stream");
    }
    if (row_based && l.accounting == Accounting::PosteriorMean) {
      fail(at + "accounting", "posterior-mean accounting needs a functional loss stream");
    }
    if (cfg.stream.kind == StreamSpec::Kind::AdversarialExperts &&
        l.prior.kind == PriorSpec::Kind::Experts && l.prior.count != cfg.stream.experts) {
      fail(at + "prior.count",
           "prior has " + std::to_string(l.prior.count) + " atoms but the stream provides " +
               std::to_string(cfg.stream.experts));
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("config", "cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    fail("config", std::string("JSON parse error: ") + e.what());
  }
  return parse_config(doc);
}

PhiFamily family_from_name(const std::string& name, double p) {
  if (name == "kl") return make_kl();
  if (name == "chi2") return make_chi2();
  if (name == "power") return make_power(p);
  throw std::invalid_argument("unknown family '" + name + "'");
}

double resolve_eta(const EtaSpec& eta, long horizon) {
  switch (eta.kind) {
    case EtaSpec::Kind::Fixed:
      return eta.value;
    case EtaSpec::Kind::InvSqrtT:
      return 1.0 / std::sqrt(static_cast<double>(horizon));
    case EtaSpec::Kind::Doubling:
      return eta.eta0;
  }
  return eta.value;
}

namespace {

DiscretePrior build_prior(const PriorSpec& spec) {
  switch (spec.kind) {
    case PriorSpec::Kind::Experts:
      return expert_prior(static_cast<std::size_t>(spec.count));
    case PriorSpec::Kind::Grid:
      return grid_prior(spec.density, spec.atoms);
    case PriorSpec::Kind::Explicit:
      return spec.explicit_prior;
  }
  throw std::invalid_argument("unreachable prior kind");
}

}  // namespace

std::unique_ptr<Learner> build_learner(const LearnerSpec& spec, const Stream& stream,
                                       std::uint64_t seed) {
  const long T = stream.horizon();
  if (spec.family == "nested-ewa-chi2") {
    return make_nested_ewa_chi2(spec.levels, spec.grid, stream, resolve_eta(spec.eta_inner, T),
                                resolve_eta(spec.eta, T));
  }
  if (spec.family == "ovi") {
    LossGradientModel model = spec.gradient;
    model.seed = seed;
    return make_ovi_learner(spec.gaussian_prior, resolve_eta(spec.eta, T), model,
                            spec.scale_bounds, spec.accounting);
  }
  const PhiFamily family = family_from_name(spec.family, spec.p);
  DiscretePrior prior = build_prior(spec.prior);
  if (spec.eta.kind == EtaSpec::Kind::Doubling) {
    auto factory = [prior, family, acc = spec.accounting](double eta) {
      return make_posterior_learner(prior, family, eta, acc);
    };
    return make_doubling(factory, spec.eta.eta0);
  }
  return make_posterior_learner(std::move(prior), family, resolve_eta(spec.eta, T),
                                spec.accounting);
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_records_csv(std::ostream& out, const std::string& label,
                       const std::vector<RunRecord>& records, bool with_header, bool emit_bounds) {
  if (with_header) out << kRecordCsvHeader << "\n";
  for (const RunRecord& r : records) {
    out << label << ',' << r.t << ',' << format_number(r.inst_loss) << ','
        << format_number(r.cum_loss) << ',' << format_number(r.best_cum_loss) << ','
        << format_number(r.regret) << ',';
    if (r.lambda) out << format_number(*r.lambda);
    out << ',';
    if (emit_bounds && r.bound) out << format_number(*r.bound);
    out << ',' << r.diag << "\n";
  }
}

nlohmann::json records_to_json(const std::string& label, const std::vector<RunRecord>& records,
                               bool emit_bounds) {
  nlohmann::json arr = nlohmann::json::array();
  for (const RunRecord& r : records) {
    nlohmann::json obj;
    obj["learner"] = label;
    obj["t"] = r.t;
    obj["inst_loss"] = r.inst_loss;
    obj["cum_loss"] = r.cum_loss;
    obj["best_cum_loss"] = r.best_cum_loss;
    obj["regret"] = r.regret;
    obj["lambda"] = r.lambda ? nlohmann::json(*r.lambda) : nlohmann::json();
    obj["bound"] = (emit_bounds && r.bound) ? nlohmann::json(*r.bound) : nlohmann::json();
    obj["diag"] = r.diag;
    arr.push_back(std::move(obj));
  }
  return arr;
}

}  // namespace phiftrl

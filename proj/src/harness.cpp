#include "phiftrl/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace phiftrl {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& tok, long line) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw CsvError("cannot parse '" + tok + "' as a number at line " + std::to_string(line), line);
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string tok;
  std::stringstream ss(line);
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Streams
// ---------------------------------------------------------------------------

Stream Stream::materialize(const StreamSpec& spec) {
  if (spec.kind != StreamSpec::Kind::CsvFile && spec.horizon < 1) {
    throw std::invalid_argument("stream horizon must be >= 1");
  }
  Stream s;
  s.spec_ = spec;
  std::mt19937_64 rng(spec.seed);
  switch (spec.kind) {
    case StreamSpec::Kind::AdversarialExperts: {
      if (spec.experts < 1) throw std::invalid_argument("experts must be >= 1");
      if (!(spec.loss_cap > 0.0)) throw std::invalid_argument("loss_cap must be positive");
      std::uniform_real_distribution<double> u(0.0, spec.loss_cap);
      s.rows_.resize(static_cast<std::size_t>(spec.horizon));
      for (auto& row : s.rows_) {
        row.resize(static_cast<std::size_t>(spec.experts));
        for (double& v : row) v = u(rng);
      }
      break;
    }
    case StreamSpec::Kind::QuadraticRegression: {
      s.targets_.resize(static_cast<std::size_t>(spec.horizon));
      const SignalSpec& sig = spec.signal;
      switch (sig.kind) {
        case SignalSpec::Kind::Sinusoid:
          if (!(sig.period > 0.0)) throw std::invalid_argument("sinusoid period must be positive");
          for (long t = 1; t <= spec.horizon; ++t) {
            s.targets_[t - 1] =
                sig.amplitude * std::sin(2.0 * M_PI * static_cast<double>(t) / sig.period);
          }
          break;
        case SignalSpec::Kind::IidBounded: {
          if (!(sig.bound > 0.0)) throw std::invalid_argument("signal bound must be positive");
          std::uniform_real_distribution<double> u(-sig.bound, sig.bound);
          for (double& y : s.targets_) y = u(rng);
          break;
        }
        case SignalSpec::Kind::Shifted: {
          if (!(sig.noise >= 0.0)) throw std::invalid_argument("signal noise must be >= 0");
          std::uniform_real_distribution<double> u(-sig.noise, sig.noise);
          for (double& y : s.targets_) y = sig.m_star + (sig.noise > 0.0 ? u(rng) : 0.0);
          break;
        }
      }
      break;
    }
    case StreamSpec::Kind::HingeClassification: {
      if (spec.dim < 1) throw std::invalid_argument("hinge dim must be >= 1");
      if (!(spec.radius > 0.0)) throw std::invalid_argument("hinge radius must be positive");
      std::normal_distribution<double> normal(0.0, 1.0);
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      Atom w(static_cast<std::size_t>(spec.dim));
      double norm = 0.0;
      for (double& v : w) {
        v = normal(rng);
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (double& v : w) v /= norm;
      s.examples_.reserve(static_cast<std::size_t>(spec.horizon));
      for (long t = 0; t < spec.horizon; ++t) {
        Atom x(static_cast<std::size_t>(spec.dim));
        double xn = 0.0;
        for (double& v : x) {
          v = normal(rng);
          xn += v * v;
        }
        xn = std::sqrt(xn);
        const double r = std::pow(u01(rng), 1.0 / spec.dim);  // uniform in the unit ball
        for (double& v : x) v = v / xn * r;
        double label = dot(w, x) >= 0.0 ? 1.0 : -1.0;
        if (u01(rng) < 0.1) label = -label;
        s.examples_.emplace_back(std::move(x), label);
      }
      break;
    }
    case StreamSpec::Kind::CsvFile: {
      std::ifstream in(spec.path);
      if (!in) throw std::invalid_argument("cannot open loss CSV '" + spec.path + "'");
      s.rows_ = read_loss_csv(in);
      s.spec_.horizon = static_cast<long>(s.rows_.size());
      break;
    }
  }
  return s;
}

Stream Stream::from_rows(std::vector<std::vector<double>> rows) {
  if (rows.empty()) throw std::invalid_argument("need at least one loss row");
  const std::size_t width = rows.front().size();
  for (const auto& row : rows) {
    if (row.size() != width) throw std::invalid_argument("ragged loss rows");
  }
  Stream s;
  s.spec_.kind = StreamSpec::Kind::CsvFile;
  s.spec_.horizon = static_cast<long>(rows.size());
  s.rows_ = std::move(rows);
  return s;
}

bool Stream::functional() const {
  return spec_.kind == StreamSpec::Kind::QuadraticRegression ||
         spec_.kind == StreamSpec::Kind::HingeClassification;
}

bool Stream::quadratic_target() const {
  return spec_.kind == StreamSpec::Kind::QuadraticRegression;
}

double Stream::target(long t) const {
  if (!quadratic_target()) throw std::invalid_argument("stream has no scalar target");
  return targets_.at(static_cast<std::size_t>(t - 1));
}

double Stream::loss_at(long t, const Atom& point) const {
  switch (spec_.kind) {
    case StreamSpec::Kind::QuadraticRegression: {
      if (point.size() != 1) throw std::invalid_argument("quadratic stream expects scalar atoms");
      const double d = point[0] - targets_.at(static_cast<std::size_t>(t - 1));
      return d * d;
    }
    case StreamSpec::Kind::HingeClassification: {
      const auto& [x, y] = examples_.at(static_cast<std::size_t>(t - 1));
      if (point.size() != x.size()) throw std::invalid_argument("hinge atom dimension mismatch");
      double nrm = 0.0;
      for (double v : point) nrm += v * v;
      if (nrm > spec_.radius * spec_.radius * (1.0 + 1e-12)) {
        throw std::invalid_argument("atom norm exceeds the stream radius");
      }
      return std::max(1.0 - y * dot(point, x), 0.0);
    }
    default:
      throw std::invalid_argument("stream losses are only defined on its own atom grid");
  }
}

std::vector<double> Stream::loss_row(long t, const std::vector<Atom>& atoms) const {
  if (t < 1 || t > spec_.horizon) throw std::invalid_argument("round out of range");
  if (!rows_.empty()) {
    const auto& row = rows_[static_cast<std::size_t>(t - 1)];
    if (atoms.size() != row.size()) {
      throw std::invalid_argument("learner has " + std::to_string(atoms.size()) +
                                  " atoms but the stream provides " + std::to_string(row.size()) +
                                  " losses per round");
    }
    return row;
  }
  std::vector<double> row(atoms.size());
  for (std::size_t j = 0; j < atoms.size(); ++j) row[j] = loss_at(t, atoms[j]);
  return row;
}

std::size_t Stream::row_width() const { return rows_.empty() ? 0 : rows_.front().size(); }

void write_loss_csv(std::ostream& out, const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("no rows to write");
  out << "t";
  for (std::size_t j = 0; j < rows.front().size(); ++j) out << ",atom_" << j;
  out << "\n";
  for (std::size_t t = 0; t < rows.size(); ++t) {
    out << (t + 1);
    for (double v : rows[t]) out << ',' << fmt17(v);
    out << "\n";
  }
}

std::vector<std::vector<double>> read_loss_csv(std::istream& in) {
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw CsvError("empty loss CSV", 1);
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "t") {
    throw CsvError("loss CSV header must start with 't'", lineno);
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j] != "atom_" + std::to_string(j - 1)) {
      throw CsvError("unexpected header column '" + header[j] + "'", lineno);
    }
  }
  const std::size_t width = header.size() - 1;
  if (width == 0) throw CsvError("loss CSV declares no atoms", lineno);

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto toks = split_csv_line(line);
    if (toks.size() != width + 1) {
      throw CsvError("expected " + std::to_string(width + 1) + " columns, got " +
                         std::to_string(toks.size()) + " at line " + std::to_string(lineno),
                     lineno);
    }
    const double t = parse_double(toks[0], lineno);
    if (t != static_cast<double>(rows.size() + 1)) {
      throw CsvError("rounds must start at 1 and increase by 1 (line " + std::to_string(lineno) +
                         ")",
                     lineno);
    }
    std::vector<double> row(width);
    for (std::size_t j = 0; j < width; ++j) {
      row[j] = parse_double(toks[j + 1], lineno);
      if (!std::isfinite(row[j]) || row[j] < 0.0) {
        throw CsvError("loss at line " + std::to_string(lineno) + ", column " + std::to_string(j) +
                           " must be finite and nonnegative",
                       lineno);
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvError("loss CSV has no data rows", lineno);
  return rows;
}

// ---------------------------------------------------------------------------
// Records and bounds
// ---------------------------------------------------------------------------

double theoretical_bound(long T, const BoundParams& params, double comparator_cum_loss) {
  if (!params.alpha) {
    throw std::invalid_argument("no strong-convexity constant for this family; bound unavailable");
  }
  if (!(params.eta > 0.0)) throw std::invalid_argument("eta must be positive");
  return comparator_cum_loss +
         params.eta * params.L * params.L * static_cast<double>(T) / *params.alpha +
         params.divergence_term / params.eta;
}

double countable_bound_term(const PhiFamily& family, double pi_j) {
  if (!(pi_j > 0.0) || pi_j > 1.0) throw std::invalid_argument("pi_j must lie in (0, 1]");
  return pi_j * family.phi(1.0 / pi_j) + (1.0 - pi_j) * family.phi_zero;
}

std::pair<std::size_t, double> best_competitor(const std::vector<double>& cumulative) {
  if (cumulative.empty()) throw std::invalid_argument("no competitors");
  std::size_t best = 0;
  for (std::size_t j = 1; j < cumulative.size(); ++j) {
    if (cumulative[j] < cumulative[best]) best = j;
  }
  return {best, cumulative[best]};
}

LipschitzEstimator::LipschitzEstimator(std::vector<double> prior_weights, bool sup_norm)
    : prior_weights_(std::move(prior_weights)), sup_norm_(sup_norm) {}

void LipschitzEstimator::observe(const std::vector<double>& loss_row) {
  if (sup_norm_) {
    for (double v : loss_row) value_ = std::max(value_, std::abs(v));
    return;
  }
  double moment = 0.0;
  for (std::size_t j = 0; j < loss_row.size(); ++j) {
    moment += prior_weights_[j] * loss_row[j] * loss_row[j];
  }
  value_ = std::max(value_, std::sqrt(moment));
}

double estimate_L(const std::vector<std::vector<double>>& loss_rows, const DiscretePrior& prior,
                  const std::string& family_name) {
  if (loss_rows.empty()) throw std::invalid_argument("need at least one observed round");
  LipschitzEstimator est(prior.weights, family_name == "kl");
  for (const auto& row : loss_rows) est.observe(row);
  return est.value();
}

// ---------------------------------------------------------------------------
// Learners
// ---------------------------------------------------------------------------

PosteriorLearner::PosteriorLearner(DiscretePrior prior, PhiFamily family, double eta,
                                   Accounting accounting)
    : state_(make_posterior(std::move(prior), std::move(family), eta)),
      accounting_(accounting),
      lipschitz_(state_.prior->weights, state_.family.name == "kl"),
      reported_lambda_(state_.lambda) {}

double PosteriorLearner::step(const Stream& stream, long t) {
  const std::vector<double> row = stream.loss_row(t, state_.prior->atoms);
  reported_lambda_ = state_.lambda;
  double reported = 0.0;
  if (accounting_ == Accounting::ExpectedLoss) {
    reported = expected_loss(state_, row);
  } else {
    if (!stream.functional()) {
      throw std::invalid_argument("posterior-mean accounting needs a functional loss stream");
    }
    reported = stream.loss_at(t, posterior_mean(state_));
  }
  lipschitz_.observe(row);
  state_ = update(state_, row);
  return reported;
}

std::optional<double> PosteriorLearner::bound(long t) const {
  if (!state_.family.alpha) return std::nullopt;
  const auto [idx, comp] = best_competitor(state_.cum_loss);
  BoundParams params;
  params.L = lipschitz_.value();
  params.alpha = state_.family.alpha;
  params.eta = state_.eta;
  params.divergence_term = countable_bound_term(state_.family, state_.prior->weights[idx]);
  return theoretical_bound(t, params, comp);
}

std::string PosteriorLearner::take_diag() { return std::exchange(diag_, std::string()); }

std::unique_ptr<Learner> make_posterior_learner(DiscretePrior prior, PhiFamily family, double eta,
                                                Accounting accounting) {
  return std::make_unique<PosteriorLearner>(std::move(prior), std::move(family), eta, accounting);
}

namespace {

DiscretePrior nested_meta_prior(int levels) {
  if (levels < 1) throw std::invalid_argument("levels must be >= 1");
  DiscretePrior prior;
  prior.atoms.reserve(static_cast<std::size_t>(levels));
  prior.weights.reserve(static_cast<std::size_t>(levels));
  double sum = 0.0;
  for (int k = 1; k <= levels; ++k) {
    prior.atoms.push_back({static_cast<double>(k)});
    const double w = 1.0 / (static_cast<double>(k) * k * k * k);
    prior.weights.push_back(w);
    sum += w;
  }
  for (double& w : prior.weights) w /= sum;
  return prior;
}

}  // namespace

NestedEwaChi2::NestedEwaChi2(int levels, int grid_per_level, const Stream& stream,
                             double eta_inner, double eta_outer)
    : meta_(make_posterior(nested_meta_prior(levels), make_chi2(), eta_outer)),
      lipschitz_(meta_.prior->weights, false),
      reported_lambda_(meta_.lambda) {
  if (grid_per_level < 2) throw std::invalid_argument("grid_per_level must be >= 2");
  if (!stream.functional()) {
    throw std::invalid_argument("nested aggregation needs a functional loss stream");
  }
  inner_.reserve(static_cast<std::size_t>(levels));
  for (int k = 1; k <= levels; ++k) {
    inner_.push_back(make_posterior(
        grid_prior(DensitySpec::uniform(-static_cast<double>(k), static_cast<double>(k)),
                   grid_per_level),
        make_kl(), eta_inner));
  }
}

double NestedEwaChi2::step(const Stream& stream, long t) {
  reported_lambda_ = meta_.lambda;
  std::vector<double> meta_row(inner_.size());
  for (std::size_t k = 0; k < inner_.size(); ++k) {
    const std::vector<double> row = stream.loss_row(t, inner_[k].prior->atoms);
    meta_row[k] = expected_loss(inner_[k], row);
    inner_[k] = update(inner_[k], row);
  }
  const double reported = expected_loss(meta_, meta_row);
  lipschitz_.observe(meta_row);
  meta_ = update(meta_, meta_row);
  return reported;
}

std::optional<double> NestedEwaChi2::bound(long t) const {
  const auto [idx, comp] = best_competitor(meta_.cum_loss);
  BoundParams params;
  params.L = lipschitz_.value();
  params.alpha = meta_.family.alpha;
  params.eta = meta_.eta;
  params.divergence_term = countable_bound_term(meta_.family, meta_.prior->weights[idx]);
  return theoretical_bound(t, params, comp);
}

std::unique_ptr<Learner> make_nested_ewa_chi2(int levels, int grid_per_level, const Stream& stream,
                                              double eta_inner, double eta_outer) {
  return std::make_unique<NestedEwaChi2>(levels, grid_per_level, stream, eta_inner, eta_outer);
}

DoublingLearner::DoublingLearner(std::function<std::unique_ptr<Learner>(double)> factory,
                                 double eta0)
    : factory_(std::move(factory)), eta0_(eta0), eta_(eta0), inner_(factory_(eta0)) {
  if (!(eta0 > 0.0)) throw std::invalid_argument("eta0 must be positive");
}

double DoublingLearner::step(const Stream& stream, long t) {
  if (restarts_at(t)) {
    if (t > 1) {
      // Close the finished epoch before the fresh learner forgets its losses.
      if (const auto* cl = inner_->atom_cum_losses()) {
        if (completed_.empty()) completed_.assign(cl->size(), 0.0);
        for (std::size_t j = 0; j < cl->size(); ++j) completed_[j] += (*cl)[j];
      }
      if (const auto L = inner_->lipschitz_estimate()) {
        lipschitz_past_ = std::max(lipschitz_past_, *L);
      }
      eta_ = eta0_ / std::sqrt(static_cast<double>(t));
      inner_ = factory_(eta_);
    }
    diag_ = "restart";
  }
  return inner_->step(stream, t);
}

std::optional<double> DoublingLearner::lipschitz_estimate() const {
  const auto L = inner_->lipschitz_estimate();
  if (!L && lipschitz_past_ == 0.0) return std::nullopt;
  return std::max(lipschitz_past_, L.value_or(0.0));
}

const std::vector<double>* DoublingLearner::atom_cum_losses() const {
  const auto* cl = inner_->atom_cum_losses();
  if (!cl) return nullptr;
  total_ = *cl;
  if (!completed_.empty()) {
    for (std::size_t j = 0; j < total_.size(); ++j) total_[j] += completed_[j];
  }
  return &total_;
}

std::string DoublingLearner::take_diag() {
  std::string inner = inner_->take_diag();
  std::string own = std::exchange(diag_, std::string());
  if (own.empty()) return inner;
  if (inner.empty()) return own;
  return own + ";" + inner;
}

std::unique_ptr<Learner> make_doubling(std::function<std::unique_ptr<Learner>(double)> factory,
                                       double eta0) {
  return std::make_unique<DoublingLearner>(std::move(factory), eta0);
}

OVILearner::OVILearner(GaussianMeanField prior, double eta, LossGradientModel model,
                       ScaleBounds bounds, Accounting accounting)
    : state_(make_ovi(std::move(prior), eta, bounds)), model_(model), accounting_(accounting) {
  if (state_.prior.dim() != 1) {
    throw std::invalid_argument("stream-driven OVI expects a scalar parameter");
  }
}

double OVILearner::step(const Stream& stream, long t) {
  const double y = stream.target(t);
  const std::vector<double> datum{y};
  double reported = 0.0;
  if (accounting_ == Accounting::ExpectedLoss) {
    reported = expected_quadratic_loss(state_.current, datum);
  } else {
    reported = stream.loss_at(t, {state_.current.mean[0]});
  }
  // Empirical Lipschitz constant of mu -> E[loss] along the visited path.
  const std::vector<double> g =
      loss_gradient(LossGradientModel::exact_quadratic(), state_.current, datum, state_.round);
  lipschitz_ = std::max(lipschitz_, std::sqrt(dot(g, g)));
  state_ = ovi_step(state_, model_, datum);
  if (state_.clamped) diag_ = "clamp";
  target_sum_ += y;
  target_sq_sum_ += y * y;
  ++rounds_;
  return reported;
}

std::optional<double> OVILearner::bound(long t) const {
  if (rounds_ == 0) return std::nullopt;
  // Comparator: the best fixed Gaussian with mean = running target mean and
  // scale at the lower bound.
  const double n = static_cast<double>(rounds_);
  const double mean = target_sum_ / n;
  const double smin = state_.scale_bounds.lo;
  const double comp =
      std::max(0.0, target_sq_sum_ - target_sum_ * target_sum_ / n) + n * smin * smin;
  GaussianMeanField best{{mean}, {smin}};
  BoundParams params;
  params.L = lipschitz_;
  const double sbar = state_.prior.scale[0];
  params.alpha = 1.0 / (sbar * sbar);
  params.eta = state_.eta;
  params.divergence_term = kl_gaussian(best, state_.prior);
  return theoretical_bound(t, params, comp);
}

std::string OVILearner::take_diag() { return std::exchange(diag_, std::string()); }

std::unique_ptr<Learner> make_ovi_learner(GaussianMeanField prior, double eta,
                                          LossGradientModel model, ScaleBounds bounds,
                                          Accounting accounting) {
  return std::make_unique<OVILearner>(std::move(prior), eta, model, bounds, accounting);
}

std::vector<RunRecord> run_online(Learner& learner, const Stream& stream, RunOptions options) {
  if (options.comparator == Comparator::GlobalQuadratic && !stream.quadratic_target()) {
    throw std::invalid_argument("the global comparator needs a quadratic-regression stream");
  }
  std::vector<RunRecord> records;
  records.reserve(static_cast<std::size_t>(stream.horizon()));
  double cum = 0.0;
  double target_sum = 0.0;
  double target_sq_sum = 0.0;
  for (long t = 1; t <= stream.horizon(); ++t) {
    double inst = 0.0;
    try {
      inst = learner.step(stream, t);
    } catch (const std::invalid_argument& e) {
      throw RunError(std::string(e.what()) + " (round " + std::to_string(t) + ")", t);
    }
    if (!std::isfinite(inst)) throw RunError("non-finite reported loss", t);
    cum += inst;

    double best = 0.0;
    if (options.comparator == Comparator::GlobalQuadratic) {
      const double y = stream.target(t);
      target_sum += y;
      target_sq_sum += y * y;
      best = std::max(0.0, target_sq_sum - target_sum * target_sum / static_cast<double>(t));
    } else {
      const auto* cl = learner.atom_cum_losses();
      if (!cl) throw RunError("learner provides no atom comparator for this stream", t);
      best = best_competitor(*cl).second;
    }

    RunRecord rec;
    rec.t = t;
    rec.inst_loss = inst;
    rec.cum_loss = cum;
    rec.best_cum_loss = best;
    rec.regret = cum - best;
    rec.lambda = learner.lambda();
    rec.bound = learner.bound(t);
    rec.diag = learner.take_diag();
    records.push_back(std::move(rec));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Self-check
// ---------------------------------------------------------------------------

namespace {

SelfCheckResult check_fenchel(const std::vector<PhiFamily>& families) {
  SelfCheckResult res{"fenchel", true, ""};
  for (const auto& fam : families) {
    for (int i = 0; i < 1000; ++i) {
      const double y = -50.0 + 100.0 * i / 999.0;
      const double gap = std::abs(fenchel_gap(fam, y));
      if (!(gap <= 1e-10)) {
        res.passed = false;
        res.detail = fam.name + ": |gap| = " + fmt17(gap) + " at y = " + fmt17(y);
        return res;
      }
    }
  }
  return res;
}

SelfCheckResult check_softmax() {
  SelfCheckResult res{"softmax", true, ""};
  std::mt19937_64 rng(20240517);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const PhiFamily kl = make_kl();
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + rng() % 49;
    DiscretePrior prior = expert_prior(n);
    const double eta = 0.01 + 1.99 * u01(rng);
    std::vector<double> s(n);
    for (double& v : s) v = 100.0 * u01(rng);
    const double lam_closed = kl_lambda_closed_form(prior, eta, s);
    const double lam_generic = solve_lambda_bisection(prior, kl, eta, s, 1e-12);
    auto wc = posterior_weights(prior, kl, eta, s, lam_closed);
    auto wg = posterior_weights(prior, kl, eta, s, lam_generic);
    const double sc = std::accumulate(wc.begin(), wc.end(), 0.0);
    const double sg = std::accumulate(wg.begin(), wg.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double diff = std::abs(wc[j] / sc - wg[j] / sg);
      if (!(diff <= 1e-8)) {
        res.passed = false;
        res.detail = "weight discrepancy " + fmt17(diff);
        return res;
      }
    }
  }
  return res;
}

SelfCheckResult check_chi2_cases() {
  SelfCheckResult res{"chi2-cases", true, ""};
  const PhiFamily chi2 = make_chi2();
  DiscretePrior prior;
  prior.atoms = {{0.0}, {1.0}};
  prior.weights = {0.5, 0.5};

  const double lam1 = solve_lambda(prior, chi2, 1.0, {0.0, 1.0}, 1e-12);
  auto w1 = posterior_weights(prior, chi2, 1.0, {0.0, 1.0}, lam1);
  const double lam2 = solve_lambda(prior, chi2, 1.0, {0.0, 10.0}, 1e-12);
  auto w2 = posterior_weights(prior, chi2, 1.0, {0.0, 10.0}, lam2);
  const double err = std::max({std::abs(lam1 - 2.5), std::abs(w1[0] - 0.625),
                               std::abs(w1[1] - 0.375), std::abs(lam2 - 4.0),
                               std::abs(w2[0] - 1.0), std::abs(w2[1] - 0.0)});
  if (!(err <= 1e-10)) {
    res.passed = false;
    res.detail = "max deviation " + fmt17(err);
  }
  return res;
}

SelfCheckResult check_dual_primal() {
  SelfCheckResult res{"dual-primal", true, ""};
  std::mt19937_64 rng(991);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> us(0.5, 2.0);
  for (int rep = 0; rep < 200; ++rep) {
    GaussianMeanField prior{{u(rng)}, {us(rng)}};
    std::vector<double> dual{u(rng), u(rng)};
    bool clamped = false;
    const GaussianMeanField q = primal_map(dual, prior, {}, &clamped);
    if (clamped) continue;
    const auto g = grad_F(q, prior);
    const double err = std::max(std::abs(g[0] - dual[0]), std::abs(g[1] - dual[1]));
    if (!(err <= 1e-8)) {
      res.passed = false;
      res.detail = "inverse deviation " + fmt17(err);
      return res;
    }
  }
  return res;
}

}  // namespace

std::vector<SelfCheckResult> run_selfcheck(const std::vector<PhiFamily>& families) {
  std::vector<PhiFamily> fams = families;
  if (fams.empty()) {
    fams.push_back(make_kl());
    fams.push_back(make_chi2());
    fams.push_back(make_power(3.0));
  }
  std::vector<SelfCheckResult> out;
  out.push_back(check_fenchel(fams));
  out.push_back(check_softmax());
  out.push_back(check_chi2_cases());
  out.push_back(check_dual_primal());
  return out;
}

}  // namespace phiftrl

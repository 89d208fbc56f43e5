#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phiftrl/posterior.hpp"
#include "phiftrl/variational.hpp"

namespace phiftrl {

// ---------------------------------------------------------------------------
// Streams
// ---------------------------------------------------------------------------

struct SignalSpec {
  enum class Kind { Sinusoid, IidBounded, Shifted };
  Kind kind = Kind::Sinusoid;
  double amplitude = 1.0;  // sinusoid: y_t = amplitude * sin(2*pi*t/period)
  double period = 200.0;
  double bound = 1.0;      // iid-bounded: y_t ~ U[-bound, bound]
  double m_star = 3.0;     // shifted: y_t = m_star + U[-noise, noise]
  double noise = 0.1;
};

struct StreamSpec {
  enum class Kind { AdversarialExperts, QuadraticRegression, HingeClassification, CsvFile };
  Kind kind = Kind::AdversarialExperts;
  long horizon = 0;
  std::uint64_t seed = 0;
  int experts = 2;         // adversarial-experts
  double loss_cap = 1.0;   //   losses ~ U[0, loss_cap]
  SignalSpec signal;       // quadratic-regression
  double radius = 1.0;     // hinge-classification: atoms must satisfy |theta| <= radius
  int dim = 2;             //   feature dimension
  std::string path;        // csv-file
};

/// Raised on malformed loss CSV input; `line` is 1-based (header = line 1).
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, long line) : std::runtime_error(what), line(line) {}
  long line;
};

/// A fully materialized loss stream. Rounds are 1-based. Deterministic in
/// (spec, seed): the same spec always yields the same data.
class Stream {
 public:
  static Stream materialize(const StreamSpec& spec);
  /// Stream backed by explicit per-atom loss rows (tests, CSV round trips).
  static Stream from_rows(std::vector<std::vector<double>> rows);

  const StreamSpec& spec() const { return spec_; }
  long horizon() const { return spec_.horizon; }

  /// True when losses can be evaluated at arbitrary parameter points.
  bool functional() const;
  /// True when a scalar regression target y_t exists (continuum comparator).
  bool quadratic_target() const;
  double target(long t) const;  // y_t for quadratic streams

  /// Loss of round t at an arbitrary point (functional streams only).
  double loss_at(long t, const Atom& point) const;
  /// Per-atom loss vector for round t. For row-based streams the atom count
  /// must match the row width.
  std::vector<double> loss_row(long t, const std::vector<Atom>& atoms) const;
  /// Fixed row width for row-based streams, 0 otherwise.
  std::size_t row_width() const;

 private:
  StreamSpec spec_;
  std::vector<double> targets_;                    // quadratic-regression
  std::vector<std::vector<double>> rows_;          // experts / csv
  std::vector<std::pair<Atom, double>> examples_;  // hinge: (x_t, y_t)
};

/// Loss-stream CSV: header `t,atom_0,...,atom_{n-1}`, one row per round of
/// nonnegative reals, t starting at 1 and increasing by 1.
void write_loss_csv(std::ostream& out, const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> read_loss_csv(std::istream& in);

// ---------------------------------------------------------------------------
// Records and bounds
// ---------------------------------------------------------------------------

struct RunRecord {
  long t = 0;
  double inst_loss = 0.0;
  double cum_loss = 0.0;
  double best_cum_loss = 0.0;
  double regret = 0.0;                // cum_loss - best_cum_loss
  std::optional<double> lambda;       // posterior learners
  std::optional<double> bound;        // comparator-inclusive bound, when computable
  std::string diag;
};

struct BoundParams {
  double L = 0.0;
  std::optional<double> alpha;
  double eta = 0.0;
  double divergence_term = 0.0;  // D_phi(comparator || prior)
};

/// comparator_cum_loss + eta*L^2*T/alpha + divergence_term/eta.
/// Throws std::invalid_argument when alpha is absent.
double theoretical_bound(long T, const BoundParams& params, double comparator_cum_loss);

/// Divergence of a Dirac mass at an atom of prior weight pi_j:
///   pi_j*phi(1/pi_j) + (1-pi_j)*phi(0).
double countable_bound_term(const PhiFamily& family, double pi_j);

/// argmin of cumulative per-atom losses, lowest index on ties.
std::pair<std::size_t, double> best_competitor(const std::vector<double>& cumulative);

/// Running Lipschitz/moment constant for bound curves. KL-style uses
/// sup_t,j l_t(theta_j); everything else the L2(pi) moment
/// sqrt( max_t sum_j pi_j l_t(theta_j)^2 ).
class LipschitzEstimator {
 public:
  LipschitzEstimator(std::vector<double> prior_weights, bool sup_norm);
  void observe(const std::vector<double>& loss_row);
  double value() const { return value_; }

 private:
  std::vector<double> prior_weights_;
  bool sup_norm_;
  double value_ = 0.0;
};

/// Post-hoc constant over a full run of loss rows; family_name "kl" selects
/// the sup norm, anything else the L2(pi) moment.
double estimate_L(const std::vector<std::vector<double>>& loss_rows, const DiscretePrior& prior,
                  const std::string& family_name);

// ---------------------------------------------------------------------------
// Learners
// ---------------------------------------------------------------------------

enum class Accounting { ExpectedLoss, PosteriorMean };

/// Raised when a round cannot be processed; carries the 1-based round index.
class RunError : public std::runtime_error {
 public:
  RunError(const std::string& what, long round) : std::runtime_error(what), round(round) {}
  long round;
};

class Learner {
 public:
  virtual ~Learner() = default;
  /// Report this round's loss (expected or posterior-mean), then consume the
  /// revealed losses and update. Returns the reported loss.
  virtual double step(const Stream& stream, long t) = 0;
  virtual std::optional<double> lambda() const { return std::nullopt; }
  /// Comparator-inclusive bound after step(t), when computable.
  virtual std::optional<double> bound(long /*t*/) const { return std::nullopt; }
  /// Cumulative per-atom losses for atom-based comparators, if any.
  virtual const std::vector<double>* atom_cum_losses() const { return nullptr; }
  /// Running empirical Lipschitz/moment constant, when tracked.
  virtual std::optional<double> lipschitz_estimate() const { return std::nullopt; }
  /// Diagnostic flags emitted by the last step; cleared on read.
  virtual std::string take_diag() { return {}; }
};

class PosteriorLearner : public Learner {
 public:
  PosteriorLearner(DiscretePrior prior, PhiFamily family, double eta,
                   Accounting accounting = Accounting::ExpectedLoss);

  double step(const Stream& stream, long t) override;
  /// The normalizer of the weights used for the latest prediction.
  std::optional<double> lambda() const override { return reported_lambda_; }
  std::optional<double> bound(long t) const override;
  const std::vector<double>* atom_cum_losses() const override { return &state_.cum_loss; }
  std::optional<double> lipschitz_estimate() const override { return lipschitz_.value(); }
  std::string take_diag() override;

  const PosteriorState& state() const { return state_; }

 private:
  PosteriorState state_;
  Accounting accounting_;
  LipschitzEstimator lipschitz_;
  double reported_lambda_;
  std::string diag_;
};

std::unique_ptr<Learner> make_posterior_learner(DiscretePrior prior, PhiFamily family, double eta,
                                                Accounting accounting = Accounting::ExpectedLoss);

/// EWA learners on nested uniform grids [-k,k], k = 1..levels, aggregated by
/// a chi^2 meta-posterior over levels with meta-prior pi(k) proportional to
/// 1/k^4. The meta loss vector entry k is inner learner k's expected loss.
/// Requires a functional stream.
class NestedEwaChi2 : public Learner {
 public:
  NestedEwaChi2(int levels, int grid_per_level, const Stream& stream, double eta_inner,
                double eta_outer);

  double step(const Stream& stream, long t) override;
  std::optional<double> lambda() const override { return reported_lambda_; }
  std::optional<double> bound(long t) const override;
  const std::vector<double>* atom_cum_losses() const override { return &meta_.cum_loss; }
  std::optional<double> lipschitz_estimate() const override { return lipschitz_.value(); }

  const PosteriorState& meta_state() const { return meta_; }
  const PosteriorState& inner_state(int k) const { return inner_.at(k - 1); }

 private:
  std::vector<PosteriorState> inner_;
  PosteriorState meta_;
  LipschitzEstimator lipschitz_;
  double reported_lambda_;
};

std::unique_ptr<Learner> make_nested_ewa_chi2(int levels, int grid_per_level,
                                              const Stream& stream, double eta_inner,
                                              double eta_outer);

/// Horizon-free wrapper: epoch m spans rounds [2^m, 2^{m+1}) and restarts the
/// factory's learner with eta = eta0 / sqrt(2^m). Cumulative accounting spans
/// epochs. The factory must produce learners over one fixed atom set.
class DoublingLearner : public Learner {
 public:
  DoublingLearner(std::function<std::unique_ptr<Learner>(double)> factory, double eta0);

  double step(const Stream& stream, long t) override;
  std::optional<double> lambda() const override { return inner_->lambda(); }
  const std::vector<double>* atom_cum_losses() const override;
  std::optional<double> lipschitz_estimate() const override;
  std::string take_diag() override;

  double current_eta() const { return eta_; }
  static bool restarts_at(long t) { return t >= 1 && (t & (t - 1)) == 0; }

 private:
  std::function<std::unique_ptr<Learner>(double)> factory_;
  double eta0_;
  double eta_;
  std::unique_ptr<Learner> inner_;
  std::vector<double> completed_;  // cum losses of finished epochs
  mutable std::vector<double> total_;
  double lipschitz_past_ = 0.0;    // max over finished epochs
  std::string diag_;
};

std::unique_ptr<Learner> make_doubling(std::function<std::unique_ptr<Learner>(double)> factory,
                                       double eta0);

/// Online variational learner on scalar quadratic streams.
class OVILearner : public Learner {
 public:
  OVILearner(GaussianMeanField prior, double eta, LossGradientModel model, ScaleBounds bounds = {},
             Accounting accounting = Accounting::ExpectedLoss);

  double step(const Stream& stream, long t) override;
  std::optional<double> bound(long t) const override;
  std::optional<double> lipschitz_estimate() const override { return lipschitz_; }
  std::string take_diag() override;

  const OVIState& state() const { return state_; }
  double lipschitz() const { return lipschitz_; }

 private:
  OVIState state_;
  LossGradientModel model_;
  Accounting accounting_;
  double lipschitz_ = 0.0;  // max gradient norm over visited mu_t
  double target_sum_ = 0.0;
  double target_sq_sum_ = 0.0;
  long rounds_ = 0;
  std::string diag_;
};

std::unique_ptr<Learner> make_ovi_learner(GaussianMeanField prior, double eta,
                                          LossGradientModel model, ScaleBounds bounds = {},
                                          Accounting accounting = Accounting::ExpectedLoss);

/// Regret comparator: the learner's own best atom (the default, matching the
/// learner's parameter space), or the prefix-best fixed scalar over all of R
/// (quadratic streams only).
enum class Comparator { AtomSet, GlobalQuadratic };

struct RunOptions {
  Comparator comparator = Comparator::AtomSet;
};

/// Drive one online game: per round the learner reports its loss, the round's
/// losses are revealed, everyone updates.
std::vector<RunRecord> run_online(Learner& learner, const Stream& stream, RunOptions options = {});

// ---------------------------------------------------------------------------
// Self-check
// ---------------------------------------------------------------------------

struct SelfCheckResult {
  std::string group;
  bool passed = false;
  std::string detail;
};

/// Fast invariant suite: Fenchel gaps for the given families (defaults to the
/// built-ins), solver-vs-softmax agreement, the hand-derived chi^2 cases, and
/// the variational dual-primal inverse.
std::vector<SelfCheckResult> run_selfcheck(const std::vector<PhiFamily>& families = {});

}  // namespace phiftrl

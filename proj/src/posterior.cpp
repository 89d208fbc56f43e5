#include "phiftrl/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace phiftrl {

void validate_prior(const DiscretePrior& prior) {
  const std::size_t n = prior.weights.size();
  if (n == 0) throw std::invalid_argument("prior must have at least one atom");
  if (prior.atoms.size() != n) {
    throw std::invalid_argument("prior atom/weight counts differ");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double w = prior.weights[j];
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("prior weight " + std::to_string(j) + " must be positive");
    }
    sum += w;
    if (prior.atoms[j].empty()) {
      throw std::invalid_argument("prior atom " + std::to_string(j) + " is empty");
    }
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("prior weights sum to " + std::to_string(sum) + ", not 1");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (prior.atoms[i] == prior.atoms[j]) {
        throw std::invalid_argument("prior atoms " + std::to_string(i) + " and " +
                                    std::to_string(j) + " coincide");
      }
    }
  }
}

DiscretePrior uniform_prior(std::vector<Atom> atoms) {
  DiscretePrior prior;
  prior.atoms = std::move(atoms);
  prior.weights.assign(prior.atoms.size(), 1.0 / static_cast<double>(prior.atoms.size()));
  validate_prior(prior);
  return prior;
}

DiscretePrior expert_prior(std::size_t n) {
  std::vector<Atom> atoms;
  atoms.reserve(n);
  for (std::size_t j = 0; j < n; ++j) atoms.push_back({static_cast<double>(j)});
  return uniform_prior(std::move(atoms));
}

DensitySpec DensitySpec::uniform(double a, double b) {
  DensitySpec d;
  d.kind = Kind::Uniform;
  d.a = a;
  d.b = b;
  return d;
}

DensitySpec DensitySpec::gaussian(double mean, double variance) {
  DensitySpec d;
  d.kind = Kind::Gaussian;
  d.mean = mean;
  d.variance = variance;
  return d;
}

DensitySpec DensitySpec::student(double dof, double scale) {
  DensitySpec d;
  d.kind = Kind::Student;
  d.dof = dof;
  d.scale = scale;
  return d;
}

DiscretePrior grid_prior(const DensitySpec& density, int n_atoms) {
  if (n_atoms < 2) throw std::invalid_argument("grid_prior needs n_atoms >= 2");
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(n_atoms));
  for (int j = 0; j < n_atoms; ++j) {
    const double u = (j + 0.5) / static_cast<double>(n_atoms);
    double q = 0.0;
    switch (density.kind) {
      case DensitySpec::Kind::Uniform:
        if (!(density.a < density.b)) throw std::invalid_argument("uniform density needs a < b");
        q = density.a + u * (density.b - density.a);
        break;
      case DensitySpec::Kind::Gaussian: {
        if (!(density.variance > 0.0)) {
          throw std::invalid_argument("gaussian density needs variance > 0");
        }
        boost::math::normal_distribution<double> dist(density.mean, std::sqrt(density.variance));
        q = boost::math::quantile(dist, u);
        break;
      }
      case DensitySpec::Kind::Student: {
        if (!(density.dof > 0.0) || !(density.scale > 0.0)) {
          throw std::invalid_argument("student density needs dof > 0 and scale > 0");
        }
        boost::math::students_t_distribution<double> dist(density.dof);
        q = density.scale * boost::math::quantile(dist, u);
        break;
      }
    }
    atoms.push_back({q});
  }
  return uniform_prior(std::move(atoms));
}

double normalization_map(const DiscretePrior& prior, const PhiFamily& family, double eta,
                         const std::vector<double>& cum_loss, double lambda) {
  double sum = 0.0;
  for (std::size_t j = 0; j < prior.size(); ++j) {
    sum += prior.weights[j] * family.conjugate_grad(lambda - eta * cum_loss[j]);
  }
  return sum;
}

double kl_lambda_closed_form(const DiscretePrior& prior, double eta,
                             const std::vector<double>& cum_loss) {
  const double min_s = *std::min_element(cum_loss.begin(), cum_loss.end());
  double sum = 0.0;
  for (std::size_t j = 0; j < prior.size(); ++j) {
    sum += prior.weights[j] * std::exp(-eta * (cum_loss[j] - min_s));
  }
  return 1.0 + eta * min_s - std::log(sum);
}

double solve_lambda_bisection(const DiscretePrior& prior, const PhiFamily& family, double eta,
                              const std::vector<double>& cum_loss, double tol, int max_iter) {
  if (prior.size() == 0) throw std::invalid_argument("empty prior");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const double min_s = *std::min_element(cum_loss.begin(), cum_loss.end());

  // g(eta*min S - 1) < 1 always: every argument sits at least 1 below the
  // value where conjugate_grad reaches 1 for the smallest loss.
  double lo = eta * min_s - 1.0;
  double hi = eta * min_s + 1.0;
  double width = 2.0;
  int expansions = 0;
  while (normalization_map(prior, family, eta, cum_loss, hi) < 1.0) {
    width *= 2.0;
    hi = lo + width;
    if (++expansions > 200) {
      throw SolveError("normalizer bracket expansion failed", lo, hi,
                       normalization_map(prior, family, eta, cum_loss, hi) - 1.0);
    }
  }

  double mid = hi;
  double res = normalization_map(prior, family, eta, cum_loss, mid) - 1.0;
  for (int it = 0; it < max_iter; ++it) {
    mid = 0.5 * (lo + hi);
    res = normalization_map(prior, family, eta, cum_loss, mid) - 1.0;
    if (std::abs(res) <= tol) return mid;
    if (res < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw SolveError("normalizer bisection did not reach tolerance " + std::to_string(tol) +
                       " after " + std::to_string(max_iter) + " iterations",
                   lo, hi, res);
}

double solve_lambda(const DiscretePrior& prior, const PhiFamily& family, double eta,
                    const std::vector<double>& cum_loss, double tol, int max_iter) {
  if (prior.size() == 0) throw std::invalid_argument("empty prior");
  if (family.name == "kl") return kl_lambda_closed_form(prior, eta, cum_loss);
  return solve_lambda_bisection(prior, family, eta, cum_loss, tol, max_iter);
}

std::vector<double> posterior_weights(const DiscretePrior& prior, const PhiFamily& family,
                                      double eta, const std::vector<double>& cum_loss,
                                      double lambda) {
  std::vector<double> w(prior.size());
  for (std::size_t j = 0; j < prior.size(); ++j) {
    w[j] = prior.weights[j] * family.conjugate_grad(lambda - eta * cum_loss[j]);
  }
  return w;
}

namespace {

// Solve, store raw weights renormalized to an exact unit sum, and keep the
// pre-normalization residual as a diagnostic.
void refresh(PosteriorState& state) {
  const DiscretePrior& prior = *state.prior;
  if (prior.size() == 1) {
    // conjugate_grad(phi'(1)) = 1, so lambda = eta*S + phi'(1) normalizes
    // a single atom without a solve.
    state.lambda = state.eta * state.cum_loss[0] + state.family.phi_prime(1.0);
    state.weights = {1.0};
    state.solve_residual = 0.0;
    return;
  }
  state.lambda = solve_lambda(prior, state.family, state.eta, state.cum_loss, state.tol);
  std::vector<double> raw =
      posterior_weights(prior, state.family, state.eta, state.cum_loss, state.lambda);
  const double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
  state.solve_residual = std::abs(sum - 1.0);
  for (double& w : raw) w /= sum;
  state.weights = std::move(raw);
}

}  // namespace

PosteriorState make_posterior(DiscretePrior prior, PhiFamily family, double eta, double tol) {
  validate_prior(prior);
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  PosteriorState state;
  state.prior = std::make_shared<const DiscretePrior>(std::move(prior));
  state.family = std::move(family);
  state.eta = eta;
  state.tol = tol;
  state.round = 0;
  state.cum_loss.assign(state.prior->size(), 0.0);
  refresh(state);
  return state;
}

void validate_loss(const std::vector<double>& loss, std::size_t n_atoms) {
  if (loss.size() != n_atoms) {
    throw std::invalid_argument("loss vector has " + std::to_string(loss.size()) +
                                " entries for " + std::to_string(n_atoms) + " atoms");
  }
  for (std::size_t j = 0; j < loss.size(); ++j) {
    if (!std::isfinite(loss[j]) || loss[j] < 0.0) {
      throw std::invalid_argument("loss entry " + std::to_string(j) +
                                  " must be finite and nonnegative");
    }
  }
}

PosteriorState update(const PosteriorState& state, const std::vector<double>& loss) {
  validate_loss(loss, state.prior->size());
  PosteriorState next = state;
  for (std::size_t j = 0; j < loss.size(); ++j) next.cum_loss[j] += loss[j];
  next.round = state.round + 1;
  refresh(next);
  return next;
}

std::vector<double> posterior_weights(const PosteriorState& state) {
  return posterior_weights(*state.prior, state.family, state.eta, state.cum_loss, state.lambda);
}

double expected_loss(const PosteriorState& state, const std::vector<double>& loss) {
  validate_loss(loss, state.prior->size());
  double sum = 0.0;
  for (std::size_t j = 0; j < loss.size(); ++j) sum += state.weights[j] * loss[j];
  return sum;
}

Atom posterior_mean(const PosteriorState& state) {
  const DiscretePrior& prior = *state.prior;
  Atom mean(prior.atoms.front().size(), 0.0);
  for (std::size_t j = 0; j < prior.size(); ++j) {
    const Atom& a = prior.atoms[j];
    if (a.size() != mean.size()) throw std::invalid_argument("atoms have mixed dimensions");
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += state.weights[j] * a[i];
  }
  return mean;
}

double divergence_value(const std::vector<double>& weights, const DiscretePrior& prior,
                        const PhiFamily& family) {
  if (weights.size() != prior.size()) {
    throw std::invalid_argument("weights/prior size mismatch");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double ratio = weights[j] / prior.weights[j];
    sum += prior.weights[j] * (ratio > 0.0 ? family.phi(ratio) : family.phi_zero);
  }
  return sum;
}

double objective(const std::vector<double>& weights, const DiscretePrior& prior,
                 const PhiFamily& family, double eta, const std::vector<double>& cum_loss) {
  double fit = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) fit += weights[j] * cum_loss[j];
  return fit + divergence_value(weights, prior, family) / eta;
}

}  // namespace phiftrl

#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "phiftrl/divergence.hpp"

namespace phiftrl {

/// A parameter point; scalars are dimension-1 vectors.
using Atom = std::vector<double>;

/// Atoms theta_j with probability weights pi_j.
struct DiscretePrior {
  std::vector<Atom> atoms;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// Throws std::invalid_argument unless: at least one atom, all weights
/// positive, weights sum to 1 within 1e-12, atoms pairwise distinct, and
/// atom/weight counts match.
void validate_prior(const DiscretePrior& prior);

/// Uniform weights over the given atoms.
DiscretePrior uniform_prior(std::vector<Atom> atoms);

/// Atoms 0,1,...,n-1 (expert indices) with uniform weights.
DiscretePrior expert_prior(std::size_t n);

struct DensitySpec {
  enum class Kind { Uniform, Gaussian, Student };
  Kind kind = Kind::Uniform;
  double a = -1.0, b = 1.0;           // uniform on [a,b]
  double mean = 0.0, variance = 1.0;  // gaussian
  double dof = 4.0, scale = 1.0;      // student t

  static DensitySpec uniform(double a, double b);
  static DensitySpec gaussian(double mean, double variance);
  static DensitySpec student(double dof, double scale = 1.0);
};

/// Equal-probability discretization of a continuous prior: atoms at the
/// (j+0.5)/n quantiles, weights 1/n. n_atoms >= 2.
DiscretePrior grid_prior(const DensitySpec& density, int n_atoms);

/// Raised when the normalizer root-solve fails to reach tolerance; carries
/// the last bracket for diagnosis.
class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, double lo, double hi, double residual)
      : std::runtime_error(what), bracket_lo(lo), bracket_hi(hi), residual(residual) {}
  double bracket_lo;
  double bracket_hi;
  double residual;
};

/// Normalization map g(lambda) = sum_j pi_j * conjugate_grad(lambda - eta*S_j).
/// Nondecreasing and continuous in lambda; the solvers look for g = 1.
double normalization_map(const DiscretePrior& prior, const PhiFamily& family, double eta,
                         const std::vector<double>& cum_loss, double lambda);

/// lambda = 1 - log sum_j pi_j exp(-eta*S_j), computed with a max shift.
double kl_lambda_closed_form(const DiscretePrior& prior, double eta,
                             const std::vector<double>& cum_loss);

/// Generic normalizer solve: expanding bracket from
/// [eta*min S - 1, eta*min S + 1] (doubling width) followed by bisection to
/// |g(lambda) - 1| <= tol. Works for any family.
double solve_lambda_bisection(const DiscretePrior& prior, const PhiFamily& family, double eta,
                              const std::vector<double>& cum_loss, double tol,
                              int max_iter = 200);

/// Normalizer lambda_t with |g(lambda) - 1| <= tol. Dispatches to the KL
/// closed form when family.name == "kl", otherwise to the bisection solve.
double solve_lambda(const DiscretePrior& prior, const PhiFamily& family, double eta,
                    const std::vector<double>& cum_loss, double tol = 1e-12,
                    int max_iter = 200);

/// Raw weights rho_j = pi_j * conjugate_grad(lambda - eta*S_j); sum to
/// 1 within solver tolerance when lambda solves the normalization.
std::vector<double> posterior_weights(const DiscretePrior& prior, const PhiFamily& family,
                                      double eta, const std::vector<double>& cum_loss,
                                      double lambda);

/// The phi-divergence posterior over a fixed atom set. Immutable value:
/// update() returns a fresh state and leaves its input untouched.
struct PosteriorState {
  std::shared_ptr<const DiscretePrior> prior;
  PhiFamily family;
  double eta = 1.0;
  double tol = 1e-12;
  long round = 0;
  std::vector<double> cum_loss;  // S_j = sum_{s<=round} l_s(theta_j)
  double lambda = 0.0;
  std::vector<double> weights;   // renormalized to sum exactly 1
  double solve_residual = 0.0;   // |sum raw - 1| before renormalization
};

/// Fresh state at round 0 (all S_j = 0): weights equal the prior.
PosteriorState make_posterior(DiscretePrior prior, PhiFamily family, double eta,
                              double tol = 1e-12);

/// Loss must match the atom count and be nonnegative and finite.
void validate_loss(const std::vector<double>& loss, std::size_t n_atoms);

/// One FTRL round: S_j += loss_j, re-solve lambda, recompute weights.
PosteriorState update(const PosteriorState& state, const std::vector<double>& loss);

/// Recompute the raw Eq-(10)-style weights from the state's lambda.
std::vector<double> posterior_weights(const PosteriorState& state);

/// sum_j rho_j * loss_j under the state's current weights.
double expected_loss(const PosteriorState& state, const std::vector<double>& loss);

/// Componentwise sum_j rho_j * theta_j.
Atom posterior_mean(const PosteriorState& state);

/// D_phi(rho||pi) = sum_j pi_j * phi(rho_j / pi_j); >= 0, and 0 iff rho = pi.
double divergence_value(const std::vector<double>& weights, const DiscretePrior& prior,
                        const PhiFamily& family);

/// FTRL objective sum_j rho_j S_j + D_phi(rho||pi)/eta. The posterior weights
/// minimize this over the simplex.
double objective(const std::vector<double>& weights, const DiscretePrior& prior,
                 const PhiFamily& family, double eta, const std::vector<double>& cum_loss);

}  // namespace phiftrl

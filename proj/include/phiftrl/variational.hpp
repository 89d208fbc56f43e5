#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace phiftrl {

/// Diagonal Gaussian q = N(mean, diag(scale)^2); scale holds standard
/// deviations, all positive.
struct GaussianMeanField {
  std::vector<double> mean;
  std::vector<double> scale;

  std::size_t dim() const { return mean.size(); }
};

void validate_mean_field(const GaussianMeanField& q);

struct ScaleBounds {
  double lo = 1e-3;
  double hi = 1e3;
};

/// KL(q || prior) for diagonal Gaussians:
///   sum_i (m_i-mb_i)^2/(2 sb_i^2) + s_i^2/(2 sb_i^2) + log(sb_i/s_i) - 1/2.
double kl_gaussian(const GaussianMeanField& q, const GaussianMeanField& prior);

/// Gradient of kl_gaussian in (mean, scale), laid out [d(mean); d(scale)]:
///   ( (m_i - mb_i)/sb_i^2 , s_i/sb_i^2 - 1/s_i ).
std::vector<double> grad_F(const GaussianMeanField& q, const GaussianMeanField& prior);

/// Inverse of grad_F restricted to the scale box: per coordinate
///   m_i = mb_i + sb_i^2 * dual_m_i
///   s_i = clamp( sb_i^2 (dual_s_i + sqrt(dual_s_i^2 + 4/sb_i^2))/2, bounds )
/// i.e. the unique positive root of s/sb^2 - 1/s = dual_s, clamped.
/// When `clamped` is non-null it reports whether any coordinate hit a bound.
GaussianMeanField primal_map(const std::vector<double>& dual, const GaussianMeanField& prior,
                             const ScaleBounds& bounds, bool* clamped = nullptr);

/// Gradient model for E_{theta~q}[loss(theta)] with quadratic loss
/// loss(theta) = ||theta - y||^2.
struct LossGradientModel {
  enum class Kind { ExactQuadratic, MonteCarlo };
  Kind kind = Kind::ExactQuadratic;
  int sample_count = 32;       // Monte Carlo only
  std::uint64_t seed = 0;      // Monte Carlo only; draws keyed by (seed, round)

  static LossGradientModel exact_quadratic();
  static LossGradientModel monte_carlo(int sample_count, std::uint64_t seed);
};

/// Gradient of E_{theta~q}[||theta - y||^2] w.r.t. (mean, scale), layout
/// [d(mean); d(scale)]. Exact: (2(m-y), 2s). Monte Carlo: reparameterized
/// theta = m + s*eps; deterministic given (model.seed, round).
std::vector<double> loss_gradient(const LossGradientModel& model, const GaussianMeanField& q,
                                  const std::vector<double>& datum, long round);

/// E_{theta~q}[||theta - y||^2] = ||m - y||^2 + sum_i s_i^2.
double expected_quadratic_loss(const GaussianMeanField& q, const std::vector<double>& y);

/// Online variational inference state: dual vector lambda of dimension 2d
/// with current = primal_map(dual) at all times. Immutable value.
struct OVIState {
  GaussianMeanField prior;
  double eta = 0.1;
  ScaleBounds scale_bounds;
  long round = 0;
  std::vector<double> dual;     // 2d, starts at zero
  GaussianMeanField current;    // primal_map(dual)
  bool clamped = false;         // any scale coordinate at its bound
};

OVIState make_ovi(GaussianMeanField prior, double eta, ScaleBounds bounds = {});

/// One mirror-descent round:
///   dual <- dual - eta * grad E_{q_current}[loss(., datum)]
///   current <- primal_map(dual).
/// Throws std::runtime_error naming the round if the gradient is not finite.
OVIState ovi_step(const OVIState& state, const LossGradientModel& model,
                  const std::vector<double>& datum);

}  // namespace phiftrl

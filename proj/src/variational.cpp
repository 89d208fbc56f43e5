#include "phiftrl/variational.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace phiftrl {

void validate_mean_field(const GaussianMeanField& q) {
  if (q.mean.empty() || q.mean.size() != q.scale.size()) {
    throw std::invalid_argument("mean/scale dimensions must match and be nonzero");
  }
  for (double s : q.scale) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw std::invalid_argument("scales must be positive and finite");
    }
  }
}

double kl_gaussian(const GaussianMeanField& q, const GaussianMeanField& prior) {
  if (q.dim() != prior.dim()) throw std::invalid_argument("dimension mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < q.dim(); ++i) {
    const double dm = q.mean[i] - prior.mean[i];
    const double sb2 = prior.scale[i] * prior.scale[i];
    kl += dm * dm / (2.0 * sb2) + q.scale[i] * q.scale[i] / (2.0 * sb2) +
          std::log(prior.scale[i] / q.scale[i]) - 0.5;
  }
  return kl;
}

std::vector<double> grad_F(const GaussianMeanField& q, const GaussianMeanField& prior) {
  if (q.dim() != prior.dim()) throw std::invalid_argument("dimension mismatch");
  const std::size_t d = q.dim();
  std::vector<double> g(2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    const double sb2 = prior.scale[i] * prior.scale[i];
    g[i] = (q.mean[i] - prior.mean[i]) / sb2;
    g[d + i] = q.scale[i] / sb2 - 1.0 / q.scale[i];
  }
  return g;
}

GaussianMeanField primal_map(const std::vector<double>& dual, const GaussianMeanField& prior,
                             const ScaleBounds& bounds, bool* clamped) {
  const std::size_t d = prior.dim();
  if (dual.size() != 2 * d) throw std::invalid_argument("dual must have dimension 2d");
  if (!(bounds.lo > 0.0) || !(bounds.lo < bounds.hi)) {
    throw std::invalid_argument("scale bounds need 0 < lo < hi");
  }
  GaussianMeanField q;
  q.mean.resize(d);
  q.scale.resize(d);
  bool hit = false;
  for (std::size_t i = 0; i < d; ++i) {
    const double sb2 = prior.scale[i] * prior.scale[i];
    q.mean[i] = prior.mean[i] + sb2 * dual[i];
    const double l = dual[d + i];
    const double c = 4.0 / sb2;
    const double root = std::sqrt(l * l + c);
    // s = sb^2 (l + root)/2; for l < 0 use the cancellation-free form.
    double s = l >= 0.0 ? 0.5 * sb2 * (l + root) : 0.5 * sb2 * c / (root - l);
    if (s < bounds.lo) {
      s = bounds.lo;
      hit = true;
    } else if (s > bounds.hi) {
      s = bounds.hi;
      hit = true;
    }
    q.scale[i] = s;
  }
  if (clamped) *clamped = hit;
  return q;
}

LossGradientModel LossGradientModel::exact_quadratic() {
  LossGradientModel m;
  m.kind = Kind::ExactQuadratic;
  return m;
}

LossGradientModel LossGradientModel::monte_carlo(int sample_count, std::uint64_t seed) {
  if (sample_count <= 0) throw std::invalid_argument("sample_count must be positive");
  LossGradientModel m;
  m.kind = Kind::MonteCarlo;
  m.sample_count = sample_count;
  m.seed = seed;
  return m;
}

std::vector<double> loss_gradient(const LossGradientModel& model, const GaussianMeanField& q,
                                  const std::vector<double>& datum, long round) {
  const std::size_t d = q.dim();
  if (datum.size() != d) throw std::invalid_argument("datum dimension mismatch");
  std::vector<double> g(2 * d, 0.0);
  if (model.kind == LossGradientModel::Kind::ExactQuadratic) {
    for (std::size_t i = 0; i < d; ++i) {
      g[i] = 2.0 * (q.mean[i] - datum[i]);
      g[d + i] = 2.0 * q.scale[i];
    }
    return g;
  }
  // Reparameterization: theta = m + s*eps, d/dm = 2(theta - y), d/ds = 2(theta - y)*eps.
  // Draws are keyed by (seed, round) so replays are bit-identical.
  const auto r = static_cast<std::uint64_t>(round);
  std::seed_seq seq{static_cast<std::uint32_t>(model.seed), static_cast<std::uint32_t>(model.seed >> 32),
                    static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < model.sample_count; ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      const double eps = normal(rng);
      const double resid = 2.0 * (q.mean[i] + q.scale[i] * eps - datum[i]);
      g[i] += resid;
      g[d + i] += resid * eps;
    }
  }
  for (double& v : g) v /= static_cast<double>(model.sample_count);
  return g;
}

double expected_quadratic_loss(const GaussianMeanField& q, const std::vector<double>& y) {
  if (y.size() != q.dim()) throw std::invalid_argument("datum dimension mismatch");
  double v = 0.0;
  for (std::size_t i = 0; i < q.dim(); ++i) {
    const double dm = q.mean[i] - y[i];
    v += dm * dm + q.scale[i] * q.scale[i];
  }
  return v;
}

OVIState make_ovi(GaussianMeanField prior, double eta, ScaleBounds bounds) {
  validate_mean_field(prior);
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  OVIState state;
  state.prior = std::move(prior);
  state.eta = eta;
  state.scale_bounds = bounds;
  state.round = 0;
  state.dual.assign(2 * state.prior.dim(), 0.0);
  state.current = primal_map(state.dual, state.prior, bounds, &state.clamped);
  return state;
}

OVIState ovi_step(const OVIState& state, const LossGradientModel& model,
                  const std::vector<double>& datum) {
  const std::vector<double> g = loss_gradient(model, state.current, datum, state.round);
  for (double v : g) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("non-finite loss gradient at round " +
                               std::to_string(state.round + 1));
    }
  }
  OVIState next = state;
  for (std::size_t i = 0; i < g.size(); ++i) next.dual[i] -= state.eta * g[i];
  next.current = primal_map(next.dual, next.prior, next.scale_bounds, &next.clamped);
  next.round = state.round + 1;
  return next;
}

}  // namespace phiftrl

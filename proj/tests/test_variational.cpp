#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "phiftrl/variational.hpp"

using namespace phiftrl;

namespace {

GaussianMeanField std_prior() { return {{0.0}, {1.0}}; }

}  // namespace

TEST_SUITE_BEGIN("variational");

TEST_CASE("kl_gaussian closed form") {
  const GaussianMeanField prior = std_prior();
  CHECK(kl_gaussian(prior, prior) == 0.0);
  CHECK(kl_gaussian({{1.0}, {1.0}}, prior) == doctest::Approx(0.5).epsilon(1e-14));
  const double expected = 2.0 - std::log(2.0) - 0.5;
  CHECK(kl_gaussian({{0.0}, {2.0}}, prior) == doctest::Approx(expected).epsilon(1e-13));
  // quadrature cross-check of the KL integral
  CHECK(oracles::kl_gaussian_quadrature(0.0, 2.0, 0.0, 1.0) ==
        doctest::Approx(expected).epsilon(1e-8));
  CHECK(oracles::kl_gaussian_quadrature(0.7, 0.4, -0.2, 1.3) ==
        doctest::Approx(kl_gaussian({{0.7}, {0.4}}, {{-0.2}, {1.3}})).epsilon(1e-8));
  CHECK(kl_gaussian({{0.3, -1.0}, {0.5, 2.0}}, {{0.0, 0.0}, {1.0, 1.0}}) > 0.0);
}

TEST_CASE("grad_F values and finite differences") {
  const GaussianMeanField prior = std_prior();
  const auto at_prior = grad_F(prior, prior);
  CHECK(at_prior[0] == 0.0);
  CHECK(at_prior[1] == 0.0);

  const auto g = grad_F({{0.2}, {0.904988}}, prior);
  CHECK(g[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(-0.2).epsilon(1e-4));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> um(-2.0, 2.0);
  std::uniform_real_distribution<double> us(0.3, 3.0);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = 1 + rng() % 3;
    GaussianMeanField pr, q;
    for (std::size_t i = 0; i < d; ++i) {
      pr.mean.push_back(um(rng));
      pr.scale.push_back(us(rng));
      q.mean.push_back(um(rng));
      q.scale.push_back(us(rng));
    }
    const auto grad = grad_F(q, pr);
    const auto f = [&](const std::vector<double>& x) {
      GaussianMeanField qq;
      qq.mean.assign(x.begin(), x.begin() + d);
      qq.scale.assign(x.begin() + d, x.end());
      return kl_gaussian(qq, pr);
    };
    std::vector<double> x = q.mean;
    x.insert(x.end(), q.scale.begin(), q.scale.end());
    for (std::size_t i = 0; i < 2 * d; ++i) {
      const double fd = oracles::central_difference(f, x, i, 1e-6);
      CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("primal_map basics") {
  const GaussianMeanField prior = std_prior();
  const ScaleBounds bounds{0.01, 100.0};

  bool clamped = true;
  const auto at_zero = primal_map({0.0, 0.0}, prior, bounds, &clamped);
  CHECK(at_zero.mean[0] == 0.0);
  CHECK(at_zero.scale[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_FALSE(clamped);

  // bisection oracle for the scale root s - 1/s = -0.2
  double lo = 0.01, hi = 100.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mid - 1.0 / mid < -0.2 ? lo : hi) = mid;
  }
  const double root = 0.5 * (lo + hi);
  CHECK(root == doctest::Approx(0.904987562112089).epsilon(1e-12));
  const auto q = primal_map({0.2, -0.2}, prior, bounds);
  CHECK(q.mean[0] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(q.scale[0] == doctest::Approx(root).epsilon(1e-12));

  // clamping to the scale box
  bool hit = false;
  const auto clamped_q = primal_map({0.0, -1e6}, prior, {0.01, 100.0}, &hit);
  CHECK(clamped_q.scale[0] == 0.01);
  CHECK(hit);
}

TEST_CASE("property: dual-primal inverse on unclamped duals") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> um(-2.0, 2.0);
  std::uniform_real_distribution<double> us(0.5, 2.0);
  int checked = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t d = 1 + rng() % 2;
    GaussianMeanField prior;
    std::vector<double> dual(2 * d);
    for (std::size_t i = 0; i < d; ++i) {
      prior.mean.push_back(um(rng));
      prior.scale.push_back(us(rng));
      dual[i] = u(rng);
      dual[d + i] = u(rng);
    }
    bool clamped = false;
    const auto q = primal_map(dual, prior, {}, &clamped);
    if (clamped) continue;
    ++checked;
    const auto g = grad_F(q, prior);
    for (std::size_t i = 0; i < 2 * d; ++i) {
      CHECK(g[i] == doctest::Approx(dual[i]).epsilon(1e-8));
    }
  }
  CHECK(checked > 900);
}

TEST_CASE("ovi_step: exact-quadratic example from a fresh state") {
  auto state = make_ovi(std_prior(), 0.1, {0.01, 100.0});
  CHECK(state.current.mean[0] == 0.0);
  CHECK(state.current.scale[0] == doctest::Approx(1.0).epsilon(1e-14));

  // gradient at the prior for y = 1 is (-2, 2)
  state = ovi_step(state, LossGradientModel::exact_quadratic(), {1.0});
  CHECK(state.round == 1);
  CHECK(state.dual[0] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(state.dual[1] == doctest::Approx(-0.2).epsilon(1e-14));
  CHECK(state.current.mean[0] == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(state.current.scale[0] == doctest::Approx(0.904987562112089).epsilon(1e-12));
}

TEST_CASE("ovi_step: zero mean-gradient datum leaves the mean fixed") {
  auto state = make_ovi(std_prior(), 0.1, {0.9, 100.0});
  for (int t = 0; t < 50; ++t) {
    const double m = state.current.mean[0];
    state = ovi_step(state, LossGradientModel::exact_quadratic(), {m});
    CHECK(state.current.mean[0] == doctest::Approx(m).epsilon(1e-14));
  }
  // scale keeps shrinking until the lower clamp absorbs it
  CHECK(state.current.scale[0] == 0.9);
  CHECK(state.clamped);
}

TEST_CASE("ovi determinism: same data and seed give bit-identical states") {
  const auto model = LossGradientModel::monte_carlo(16, 77);
  auto a = make_ovi(std_prior(), 0.05);
  auto b = make_ovi(std_prior(), 0.05);
  for (int t = 0; t < 20; ++t) {
    const std::vector<double> y{std::sin(0.3 * t)};
    a = ovi_step(a, model, y);
    b = ovi_step(b, model, y);
  }
  CHECK(a.dual == b.dual);
  CHECK(a.current.mean == b.current.mean);
  CHECK(a.current.scale == b.current.scale);
}

TEST_CASE("ovi_step rejects non-finite gradients") {
  auto state = make_ovi(std_prior(), 0.1);
  try {
    ovi_step(state, LossGradientModel::exact_quadratic(),
             {std::numeric_limits<double>::infinity()});
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("round 1") != std::string::npos);
  }
}

TEST_CASE("expected_quadratic_loss") {
  CHECK(expected_quadratic_loss({{1.0}, {1.0}}, {1.0}) == 1.0);
  CHECK(expected_quadratic_loss({{0.0}, {1.0}}, {1.0}) == 2.0);

  // Monte Carlo oracle with 1e6 samples agrees within 3 standard errors
  const GaussianMeanField q{{0.4}, {0.8}};
  const double y = -0.3;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = 1000000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double theta = q.mean[0] + q.scale[0] * normal(rng);
    const double loss = (theta - y) * (theta - y);
    sum += loss;
    sumsq += loss * loss;
  }
  const double mc = sum / n;
  const double se = std::sqrt((sumsq / n - mc * mc) / n);
  CHECK(std::abs(expected_quadratic_loss(q, {y}) - mc) <= 3.0 * se);
}

TEST_CASE("property: monte-carlo gradients are unbiased") {
  const GaussianMeanField q{{0.5}, {1.2}};
  const std::vector<double> y{1.7};
  const auto exact = loss_gradient(LossGradientModel::exact_quadratic(), q, y, 0);

  const int seeds = 10000;
  double sum_m = 0, sumsq_m = 0, sum_s = 0, sumsq_s = 0;
  for (int k = 0; k < seeds; ++k) {
    const auto model = LossGradientModel::monte_carlo(32, static_cast<std::uint64_t>(k));
    const auto g = loss_gradient(model, q, y, 3);
    sum_m += g[0];
    sumsq_m += g[0] * g[0];
    sum_s += g[1];
    sumsq_s += g[1] * g[1];
  }
  const double mean_m = sum_m / seeds;
  const double se_m = std::sqrt((sumsq_m / seeds - mean_m * mean_m) / seeds);
  const double mean_s = sum_s / seeds;
  const double se_s = std::sqrt((sumsq_s / seeds - mean_s * mean_s) / seeds);
  CHECK(std::abs(mean_m - exact[0]) <= 3.0 * se_m);
  CHECK(std::abs(mean_s - exact[1]) <= 3.0 * se_s);
}

TEST_SUITE_END();

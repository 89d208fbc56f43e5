#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "phiftrl/divergence.hpp"

using namespace phiftrl;

TEST_SUITE_BEGIN("divergence");

TEST_CASE("kl family basics") {
  const PhiFamily kl = make_kl();
  CHECK(kl.phi(1.0) == 0.0);
  CHECK(kl.phi(0.0) == kl.phi_zero);
  CHECK(kl.phi_zero == 0.0);
  CHECK(kl.conjugate_grad(1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(kl.conjugate_grad(0.0) == doctest::Approx(0.3678794411714423).epsilon(1e-12));
  CHECK(kl.alpha.value() == 1.0);
  // conjugate and its gradient coincide for this family
  for (double y : {-3.0, -1.0, 0.0, 0.5, 2.0, 10.0}) {
    CHECK(kl.conjugate(y) == kl.conjugate_grad(y));
  }
}

TEST_CASE("chi2 family basics") {
  const PhiFamily chi2 = make_chi2();
  CHECK(chi2.phi(1.0) == 0.0);
  CHECK(chi2.phi_zero == -1.0);
  CHECK(chi2.conjugate_grad(4.0) == 2.0);
  CHECK(chi2.conjugate_grad(-3.0) == 0.0);
  CHECK(chi2.alpha.value() == 2.0);
  // Fenchel check at y = 4: phi(2) = 3 and 4*2 - conjugate(4) = 3.
  CHECK(chi2.phi(2.0) == 3.0);
  CHECK(4.0 * 2.0 - chi2.conjugate(4.0) == 3.0);
  // exact conjugate against the brute-force argmax oracle
  for (double y : {-5.0, -0.5, 0.0, 1.0, 4.0, 17.5, 40.0}) {
    const auto [val, arg] = oracles::grid_conjugate(chi2.phi, y, 50.0);
    CHECK(chi2.conjugate(y) == doctest::Approx(val).epsilon(1e-9));
    CHECK(chi2.conjugate_grad(y) == doctest::Approx(arg).epsilon(1e-6));
  }
}

TEST_CASE("power family basics") {
  CHECK_THROWS_AS(make_power(1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_power(0.5), std::invalid_argument);

  const PhiFamily p3 = make_power(3.0);
  CHECK(p3.phi(1.0) == 0.0);
  CHECK(p3.phi_zero == -1.0);
  CHECK_FALSE(p3.alpha.has_value());
  CHECK(p3.conjugate_grad(3.0) == doctest::Approx(1.0).epsilon(1e-14));
  // derived via brute-force argmax of x*12 - x^3 + 1 over an x-grid
  {
    const auto [val, arg] = oracles::grid_conjugate(p3.phi, 12.0, 20.0);
    CHECK(arg == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(val == doctest::Approx(17.0).epsilon(1e-10));
    CHECK(p3.conjugate_grad(12.0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(p3.conjugate(12.0) == doctest::Approx(17.0).epsilon(1e-12));
  }

  // p = 2 reproduces the chi2 map
  const PhiFamily p2 = make_power(2.0);
  const PhiFamily chi2 = make_chi2();
  CHECK(p2.alpha.value() == 2.0);
  for (int i = 0; i <= 500; ++i) {
    const double y = -25.0 + 0.1 * i;
    CHECK(std::abs(p2.conjugate_grad(y) - chi2.conjugate_grad(y)) <= 1e-14);
  }
}

TEST_CASE("fenchel gap at spec points") {
  CHECK(std::abs(fenchel_gap(make_kl(), 1.0)) <= 1e-12);
  CHECK(std::abs(fenchel_gap(make_chi2(), -5.0)) <= 1e-12);
  CHECK(std::abs(fenchel_gap(make_power(3.0), 12.0)) <= 1e-10);
}

TEST_CASE("fenchel gap on the acceptance grid") {
  for (const PhiFamily& fam : {make_kl(), make_chi2(), make_power(3.0)}) {
    for (int i = 0; i < 1000; ++i) {
      const double y = -50.0 + 100.0 * i / 999.0;
      CAPTURE(fam.name);
      CAPTURE(y);
      CHECK(std::abs(fenchel_gap(fam, y)) <= 1e-10);
    }
  }
}

TEST_CASE("conjugate_grad is nondecreasing and continuous on a grid") {
  for (const PhiFamily& fam : {make_kl(), make_chi2(), make_power(3.0), make_power(1.5)}) {
    double prev = fam.conjugate_grad(-50.0);
    double max_jump = 0.0;
    const int n = 5000;
    for (int i = 1; i <= n; ++i) {
      const double y = -50.0 + 100.0 * i / n;
      const double cur = fam.conjugate_grad(y);
      CHECK(cur >= prev);
      max_jump = std::max(max_jump, cur - prev);
      prev = cur;
    }
    // no jump beyond the grid-induced modulus (derivative bounded by the
    // steepest growth over the step; generous envelope)
    const double step = 100.0 / n;
    CHECK(max_jump <= step * fam.conjugate_grad(51.0));
  }
}

TEST_CASE("Fenchel-Young inequality on random pairs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(0.0, 20.0);
  std::uniform_real_distribution<double> uy(-30.0, 30.0);
  for (const PhiFamily& fam : {make_kl(), make_chi2(), make_power(3.0)}) {
    for (int i = 0; i < 100; ++i) {
      const double x = ux(rng);
      const double y = uy(rng);
      CHECK(fam.conjugate(y) >= x * y - fam.phi(x) - 1e-9);
    }
  }
}

TEST_CASE("inverse-derivative identity") {
  // conjugate_grad(y) = max{0, (phi')^{-1}(y)} wherever phi' is invertible
  const PhiFamily kl = make_kl();
  const PhiFamily chi2 = make_chi2();
  for (int i = 0; i <= 1000; ++i) {
    const double y = -20.0 + 40.0 * i / 1000.0;
    CHECK(std::abs(kl.conjugate_grad(y) - std::exp(y - 1.0)) <= 1e-12);
    CHECK(std::abs(chi2.conjugate_grad(y) - std::max(0.0, y / 2.0)) <= 1e-12);
  }
  // round trip through phi_prime on the interior
  for (const PhiFamily& fam : {make_kl(), make_chi2(), make_power(3.0)}) {
    for (double x : {0.2, 0.7, 1.0, 2.5, 9.0}) {
      CHECK(fam.conjugate_grad(fam.phi_prime(x)) == doctest::Approx(x).epsilon(1e-12));
    }
  }
}

TEST_CASE("strict convexity of phi on sampled midpoints") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(1e-6, 100.0);
  for (const PhiFamily& fam : {make_kl(), make_chi2(), make_power(3.0), make_power(1.7)}) {
    for (int i = 0; i < 200; ++i) {
      const double x1 = u(rng);
      const double x2 = u(rng);
      if (std::abs(x1 - x2) < 1e-3) continue;
      const double mid = fam.phi(0.5 * (x1 + x2));
      CHECK(mid < 0.5 * (fam.phi(x1) + fam.phi(x2)) - 1e-12);
    }
  }
}

TEST_SUITE_END();

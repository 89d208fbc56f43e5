#pragma once

#include <functional>
#include <optional>
#include <string>

namespace phiftrl {

/// A phi-divergence generator together with its exact convex conjugate.
///
/// phi is strictly convex on [0,inf) with phi(1) = 0. `conjugate` is the
/// exact y -> sup_{x>=0} { x*y - phi(x) } and `conjugate_grad` its
/// derivative, which doubles as the posterior weight map
/// rho_j = pi_j * conjugate_grad(lambda - eta*S_j).
///
/// Note: textbook tables often drop additive constants from the conjugate
/// (they cancel in any argmin over lambda). We keep the exact value so the
/// Fenchel identity phi(grad(y)) = y*grad(y) - conjugate(y) holds as stated.
struct PhiFamily {
  std::string name;
  std::function<double(double)> phi;             // [0,inf) -> R u {+inf}
  std::function<double(double)> phi_prime;       // (0,inf) -> R
  std::function<double(double)> conjugate;       // R -> R
  std::function<double(double)> conjugate_grad;  // R -> [0,inf), nondecreasing
  double phi_zero = 0.0;                         // phi(0+) limit
  std::optional<double> alpha;                   // strong-convexity constant, if known
};

/// phi(x) = x*log(x), phi(0) = 0. conjugate(y) = conjugate_grad(y) = exp(y-1).
/// alpha = 1. The exponentially-weighted (softmax) family.
PhiFamily make_kl();

/// phi(x) = x^2 - 1. conjugate_grad(y) = max(y,0)/2, alpha = 2.
PhiFamily make_chi2();

/// phi(x) = x^p - 1 for p > 1. conjugate_grad(y) = max(y/p,0)^{1/(p-1)}.
/// No strong-convexity constant is attached except at p = 2 (= chi2).
/// Throws std::invalid_argument for p <= 1.
PhiFamily make_power(double p);

/// Residual of the Fenchel identity at the maximizer x* = conjugate_grad(y):
///   phi(x*) - [y*x* - conjugate(y)]
/// using phi_zero when x* = 0, normalized by the magnitude of the cancelled
/// terms (a no-op at O(1) scales). Magnitude <= 1e-10 for a correct family.
double fenchel_gap(const PhiFamily& family, double y);

}  // namespace phiftrl

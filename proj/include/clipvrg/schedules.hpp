#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "clipvrg/error.hpp"

namespace clipvrg {

// c * (t + phi)^(-tau)
struct Schedule {
  double c = 1.0;
  double tau = 0.0;
  long phi = 1;

  double operator()(std::size_t t) const {
    return c * std::pow(static_cast<double>(t) + static_cast<double>(phi), -tau);
  }

  bool operator==(const Schedule&) const = default;
};

inline double eval(const Schedule& s, std::size_t t) { return s(t); }

// Stepsize, clipping threshold and estimator weight sharing one offset.
struct ScheduleSet {
  Schedule alpha;
  Schedule gamma;
  Schedule eta;

  long phi() const { return alpha.phi; }
  double tau_sum() const { return alpha.tau + gamma.tau; }

  // Estimator weight actually used by the recursion; kept in (0, 1].
  double eta_clamped(std::size_t t) const { return std::min(eta(t), 1.0); }

  bool operator==(const ScheduleSet&) const = default;
};

inline constexpr double kOptimalTauAlpha = 5.0 / 6.0;
inline constexpr double kOptimalTauGamma = 1.0 / 6.0;

// Names every violated inequality of 2 tau_gamma < tau_alpha < 1, tau_alpha <= 1 - tau_gamma.
// The last one is closed so that the rate-optimal pair (5/6, 1/6) on its boundary is accepted.
inline std::vector<std::string> validate_exponents(double tau_alpha, double tau_gamma) {
  std::vector<std::string> violations;
  if (!(tau_gamma > 0.0)) violations.push_back("tau_gamma > 0");
  if (!(2.0 * tau_gamma < tau_alpha)) violations.push_back("2*tau_gamma < tau_alpha");
  if (!(tau_alpha < 1.0)) violations.push_back("tau_alpha < 1");
  if (!(tau_alpha <= 1.0 - tau_gamma + 1e-12)) violations.push_back("tau_alpha <= 1 - tau_gamma");
  return violations;
}

inline double derive_eta(double tau_alpha, double tau_gamma) {
  return 2.0 * (tau_alpha + tau_gamma) / 3.0;
}

// min(tau_gamma, (tau_alpha - 2 tau_gamma) / 3): every rate exponent strictly
// below this is attainable.
inline double rate_exponent_bound(double tau_alpha, double tau_gamma) {
  return std::min(tau_gamma, (tau_alpha - 2.0 * tau_gamma) / 3.0);
}

namespace detail {
// (phi / (1 + phi))^{tau_sum} > beta, i.e. alpha_{t+1} gamma_{t+1} > beta alpha_t gamma_t for all t.
inline bool offset_admissible(long phi, double beta, double tau_sum) {
  const double p = static_cast<double>(phi);
  return std::pow(p / (1.0 + p), tau_sum) > beta;
}
}  // namespace detail

// Smallest integer phi > 1 / (1 - beta^{1/(tau_alpha+tau_gamma)}) - 1, at least 1.
inline long min_phi(double beta, double tau_alpha, double tau_gamma) {
  require(beta >= 0.0 && beta < 1.0, Errc::invalid_argument, "beta must lie in [0, 1)");
  const double tau_sum = tau_alpha + tau_gamma;
  require(tau_sum > 0.0, Errc::invalid_argument, "tau_alpha + tau_gamma must be positive");
  if (beta == 0.0) return 1;
  const double bound = 1.0 / (1.0 - std::pow(beta, 1.0 / tau_sum)) - 1.0;
  long phi = std::max(1L, static_cast<long>(std::floor(bound)) + 1);
  // Rounding in the closed form can land on the boundary; settle on the exact condition.
  while (!detail::offset_admissible(phi, beta, tau_sum)) ++phi;
  while (phi > 1 && detail::offset_admissible(phi - 1, beta, tau_sum)) --phi;
  return phi;
}

// Smallest c satisfying both the base-case and the induction-step conditions
// of the geometric-sum consensus bound.
inline double lemma1_constant(double beta, double tau_alpha, double tau_gamma, long phi) {
  require(beta >= 0.0 && beta < 1.0, Errc::invalid_argument, "beta must lie in [0, 1)");
  require(phi >= 1, Errc::invalid_argument, "phi must be a positive integer");
  if (beta == 0.0) return 0.0;
  const double tau_sum = tau_alpha + tau_gamma;
  const double p = static_cast<double>(phi);
  const double denom = std::pow(p / (1.0 + p), tau_sum) - beta;
  require(denom > 0.0, Errc::precondition_violation,
          "phi = " + std::to_string(phi) + " is below min_phi for beta = " + std::to_string(beta));
  const double induction = beta / denom;
  const double base = beta * std::pow(1.0 + 1.0 / p, tau_sum);
  return std::max(induction, base);
}

}  // namespace clipvrg

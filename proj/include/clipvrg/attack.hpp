#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clipvrg/error.hpp"
#include "clipvrg/linalg.hpp"
#include "clipvrg/problems.hpp"
#include "clipvrg/random.hpp"

namespace clipvrg {

enum class AttackMode { none, constant, sign_flip, zero, custom };

inline const char* to_string(AttackMode m) {
  switch (m) {
    case AttackMode::none: return "none";
    case AttackMode::constant: return "constant";
    case AttackMode::sign_flip: return "sign-flip";
    case AttackMode::zero: return "zero";
    case AttackMode::custom: return "custom";
  }
  return "none";
}

// Adversarial output for (agent, round, local iterate). Must be finite.
using CustomAttack = std::function<Vec(std::size_t agent, std::size_t round, std::span<const double> x)>;

struct AttackSpec {
  std::vector<std::size_t> attacked;  // sorted, unique
  AttackMode mode = AttackMode::none;
  double value = 0.0;
  // Per-agent coordinates the constant is written to; empty means all coordinates.
  std::vector<std::vector<std::size_t>> support;
  CustomAttack custom;

  bool is_attacked(std::size_t i) const {
    return mode != AttackMode::none && std::binary_search(attacked.begin(), attacked.end(), i);
  }

  // Sign flips need the honest sample; the other modes ignore it.
  bool needs_honest_sample() const { return mode == AttackMode::sign_flip; }

  double fraction(std::size_t n) const {
    return mode == AttackMode::none ? 0.0
                                    : static_cast<double>(attacked.size()) / static_cast<double>(n);
  }
};

inline AttackSpec make_attack(std::vector<std::size_t> attacked, AttackMode mode, double value = 0.0) {
  std::sort(attacked.begin(), attacked.end());
  attacked.erase(std::unique(attacked.begin(), attacked.end()), attacked.end());
  AttackSpec a;
  a.attacked = std::move(attacked);
  a.mode = mode;
  a.value = value;
  return a;
}

// `count` distinct agents drawn uniformly from [0, n).
inline std::vector<std::size_t> sample_attacked_set(std::size_t n, std::size_t count, Rng& rng) {
  require(count <= n, Errc::invalid_argument, "cannot attack more agents than exist");
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> u(i, n - 1);
    std::swap(ids[i], ids[u(rng)]);
  }
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline std::vector<std::size_t> unattacked_agents(std::size_t n, const AttackSpec& a) {
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!a.is_attacked(i)) out.push_back(i);
  return out;
}

// Overwrites `inout` (holding the honest sample when one was drawn) with the
// oracle output agent i reports in round t.
inline void apply_attack_into(const AttackSpec& a, std::size_t i, std::size_t t,
                              std::span<const double> x, std::span<double> inout) {
  if (!a.is_attacked(i)) return;
  switch (a.mode) {
    case AttackMode::none:
      return;
    case AttackMode::constant:
      if (a.support.empty() || a.support[i].empty()) {
        std::fill(inout.begin(), inout.end(), a.value);
      } else {
        std::fill(inout.begin(), inout.end(), 0.0);
        for (std::size_t k : a.support[i]) inout[k] = a.value;
      }
      return;
    case AttackMode::sign_flip:
      for (double& v : inout) v = -v;
      return;
    case AttackMode::zero:
      std::fill(inout.begin(), inout.end(), 0.0);
      return;
    case AttackMode::custom: {
      require(static_cast<bool>(a.custom), Errc::invalid_argument, "custom attack has no function");
      const Vec out = a.custom(i, t, x);
      require(out.size() == inout.size(), Errc::attack_output_invalid,
              "custom attack returned the wrong dimension");
      require(all_finite(out), Errc::attack_output_invalid,
              "custom attack returned a non-finite value for agent " + std::to_string(i));
      std::copy(out.begin(), out.end(), inout.begin());
      return;
    }
  }
}

// Identity for unattacked agents. `honest` may be null for modes that do not
// read it; `x` is the agent's current iterate.
inline GradientSample apply_attack(const AttackSpec& a, std::size_t i, const GradientSample* honest,
                                   std::size_t t, std::span<const double> x) {
  if (!a.is_attacked(i)) {
    require(honest != nullptr, Errc::invalid_argument, "unattacked agent needs an honest sample");
    return *honest;
  }
  GradientSample out{honest ? honest->m : Vec(x.size(), 0.0), i, t};
  if (a.needs_honest_sample())
    require(honest != nullptr, Errc::invalid_argument, "sign-flip attack needs the honest sample");
  apply_attack_into(a, i, t, x, out.m);
  return out;
}

}  // namespace clipvrg

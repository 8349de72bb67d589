// Copyright 2026 The fairshare Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Facilitator payoff analysis. All quantities are in normalized units where
// the content is worth 1 and serving one chunk costs 1/k.

#include <fairshare/common.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace fairshare::incentives {

struct IncentiveParams {
  std::uint32_t n = 0;
  std::uint32_t k = 0;
  double failure_rate = 0.0;
  double payoff = 0.0;

  bool valid() const {
    return k >= 1 && k <= n && failure_rate >= 0.0 && failure_rate <= 1.0 && payoff >= 0.0;
  }
  double serve_cost() const { return 1.0 / k; }
};

/// Expected per-request advantage of one facilitator, summed over the three
/// events: chosen and serves, not chosen, chosen but fails. Every branch is
/// paid; only serving incurs the cost.
inline Result<double> expected_advantage(const IncentiveParams& p) {
  if (!p.valid()) return Errc::invalid_params;
  const double chosen = static_cast<double>(p.k) / p.n;
  const double f = p.failure_rate;
  return (1.0 - f) * chosen * (p.payoff - p.serve_cost()) + (1.0 - chosen) * p.payoff +
         chosen * f * p.payoff;
}

struct PayoffSolution {
  double payoff = 0.0;
  /// Set when the exact solution was negative and has been raised to 0.
  bool clamped = false;
};

/// Solves expected_advantage = target for the payoff. The advantage is
/// affine in the payoff with unit slope, so the solution is
/// target + (1 - f) / n.
inline Result<PayoffSolution> solve_payoff(std::uint32_t n, std::uint32_t k, double failure_rate,
                                           double target_advantage) {
  if (!IncentiveParams{n, k, failure_rate, 0.0}.valid()) return Errc::invalid_params;
  const double exact = target_advantage + (1.0 - failure_rate) / n;
  if (exact < 0.0) return PayoffSolution{0.0, true};
  return PayoffSolution{exact, false};
}

/// Payoff that sets the advantage to -f/n: (1 - 2f) / n, clamped at 0 for
/// f > 1/2.
inline Result<PayoffSolution> failure_penalizing_payoff(std::uint32_t n, std::uint32_t k,
                                                        double failure_rate) {
  return solve_payoff(n, k, failure_rate, -failure_rate / n);
}

/// Currency payout per facilitator for a listing of `price`, rounded down to
/// whole micro-units so the publisher keeps any remainder.
inline Amount payout_for_price(Amount price, std::uint32_t n, double estimated_failure_rate) {
  const double normalized =
      std::max(0.0, (1.0 - 2.0 * estimated_failure_rate) / static_cast<double>(n));
  const long double exact = static_cast<long double>(price.micros()) * normalized;
  const long double nearest = std::round(exact);
  // snap representation error (6 * (1/6) != 1 in binary) before flooring
  const std::int64_t micros = static_cast<std::int64_t>(
      std::abs(exact - nearest) < 1e-6L ? nearest : std::floor(exact));
  const Amount payout = Amount::from_micros(micros);
  return payout * n > price ? Amount::from_micros(price.micros() / n) : payout;
}

/// Inclusive integer range; empty when first > last.
struct KRange {
  std::int64_t first = 1;
  std::int64_t last = 0;

  bool empty() const { return first > last; }
  bool contains(std::int64_t k) const { return k >= first && k <= last; }
  std::int64_t size() const { return empty() ? 0 : last - first + 1; }
  friend bool operator==(const KRange&, const KRange&) = default;
};

/// Integers k with b < k < n - b. Requires 0 <= b < n.
inline Result<KRange> valid_k_bounds(std::uint32_t n, std::uint32_t b) {
  if (b >= n) return Errc::invalid_params;
  return KRange{static_cast<std::int64_t>(b) + 1,
                static_cast<std::int64_t>(n) - static_cast<std::int64_t>(b) - 1};
}

/// Integers k with n/3 < k < 2n/3, the instance for BFT ledgers that tolerate
/// fewer than n/3 faults.
inline KRange pbft_bounds(std::uint32_t n) {
  const std::int64_t nn = n;
  return KRange{nn / 3 + 1, (2 * nn - 1) / 3};
}

}  // namespace fairshare::incentives

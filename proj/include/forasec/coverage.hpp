/* forasec: formal side-channel vulnerability analysis of sequential circuits
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "forasec/common.hpp"

namespace forasec {

// Exact 2^n as a decimal string (base-1e9 limbs, doubled n times).
inline std::string pow2_decimal(int n) {
  if (n < 0) throw InvariantError("negative exponent");
  std::vector<uint32_t> limbs{1};
  for (int i = 0; i < n; ++i) {
    uint32_t carry = 0;
    for (auto& limb : limbs) {
      uint64_t v = 2ull * limb + carry;
      limb = static_cast<uint32_t>(v % 1000000000u);
      carry = static_cast<uint32_t>(v / 1000000000u);
    }
    if (carry) limbs.push_back(carry);
  }
  std::string s = std::to_string(limbs.back());
  char buf[16];
  for (auto it = limbs.rbegin() + 1; it != limbs.rend(); ++it) {
    std::snprintf(buf, sizeof(buf), "%09u", *it);
    s += buf;
  }
  return s;
}

// Seconds in one year for coverage-time conversion.
inline constexpr double kSecondsPerYear = 3.156e7;

// Pattern count and test time for one exhaustive dimension of 2^n cases.
struct CoverageCost {
  int exponent = 0;            // n
  std::string patterns;        // exact decimal 2^n
  double seconds = 0.0;        // 2^n / rate; +inf past double range
  double years = 0.0;
  double log10_seconds = 0.0;  // always finite; authoritative for huge n
  double log10_years = 0.0;
};

inline CoverageCost coverage_cost(int n, double rate) {
  if (rate <= 0.0) throw InvariantError("test rate must be positive");
  CoverageCost c;
  c.exponent = n;
  c.patterns = pow2_decimal(n);
  c.log10_seconds = n * std::log10(2.0) - std::log10(rate);
  c.log10_years = c.log10_seconds - std::log10(kSecondsPerYear);
  if (n < 1024) {
    c.seconds = std::ldexp(1.0, n) / rate;
    c.years = c.seconds / kSecondsPerYear;
  } else {
    c.seconds = std::numeric_limits<double>::infinity();
    c.years = std::numeric_limits<double>::infinity();
  }
  return c;
}

// Exhaustive-coverage cost across the three dimensions the analysis has to
// cover: input patterns, gates, and nodes.
struct CoverageReport {
  CoverageCost inputs;
  CoverageCost gates;
  CoverageCost nodes;
  double rate = 0.0;
};

inline CoverageReport estimate_coverage(int input_count, int gate_count,
                                        int node_count, double rate) {
  CoverageReport r;
  r.rate = rate;
  r.inputs = coverage_cost(input_count, rate);
  r.gates = coverage_cost(gate_count, rate);
  r.nodes = coverage_cost(node_count, rate);
  return r;
}

}  // namespace forasec

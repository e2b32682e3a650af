/* forasec: formal side-channel vulnerability analysis of sequential circuits
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace forasec {

inline constexpr const char* kVersion = "0.1.0";

/// Input/parse failures (malformed netlists, bad parameter files). CLI exit code 1.
struct InputError : std::runtime_error {
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Parse failure with source position.
struct ParseError : InputError {
  int line = 0;
  int column = 0;
  ParseError(const std::string& msg, int line_, int col_)
      : InputError(msg + " (line " + std::to_string(line_) + ", column " +
                   std::to_string(col_) + ")"),
        line(line_),
        column(col_) {}
};

/// Structural invariant violations (multiply driven nets, cycles, bad arity). CLI exit code 2.
struct InvariantError : std::runtime_error {
  explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Exploration budget exhausted. CLI exit code 3.
struct BudgetError : std::runtime_error {
  explicit BudgetError(const std::string& msg) : std::runtime_error(msg) {}
};

// SplitMix64. Used as the per-draw mixing function of the counter-based
// generator: every draw is keyed by (seed, stream, counter), so sample i
// of parameter j is the same no matter which worker computes it.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix_key(uint64_t seed, uint64_t stream, uint64_t counter) {
  uint64_t h = splitmix64(seed ^ 0x6a09e667f3bcc908ULL);
  h = splitmix64(h ^ stream);
  return splitmix64(h ^ counter);
}

/// Uniform double in [0, 1) from a 64-bit word.
inline double to_unit_double(uint64_t w) {
  return static_cast<double>(w >> 11) * 0x1.0p-53;
}

/// FNV-1a, used to fingerprint run configurations in reports.
inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace forasec

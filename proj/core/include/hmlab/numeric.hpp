#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>

namespace hmlab {

/// Compensated summation; keeps long accumulations accurate to a few ulps
/// so monotonicity checks on energy traces are not drowned by roundoff.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

inline std::uint64_t fnv1a(std::span<const std::byte> bytes,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s) {
  return fnv1a(std::as_bytes(std::span<const char>(s.data(), s.size())));
}

}  // namespace hmlab

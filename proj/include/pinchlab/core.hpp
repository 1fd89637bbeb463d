#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pinchlab {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Invalid input data (bad mesh, bad profile, bad arguments).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numerical procedure failed to reach its target (non-convergence etc.).
struct NumericsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed files or command-line usage.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a, used to give meshes a stable content identity.
inline std::uint64_t fnv1a64(const void* data, std::size_t n_bytes,
                             std::uint64_t seed = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n_bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

// C^2 cutoff rising 0 -> 1 over [0,1]; constant outside.
inline double smoothstep_quintic(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

}  // namespace pinchlab

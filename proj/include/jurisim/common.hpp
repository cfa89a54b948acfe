#ifndef JURISIM_COMMON_HPP
#define JURISIM_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace jurisim {

// Virtual time is kept in integer microseconds so that trace files
// (6 decimal places) round-trip losslessly.
using TimeMicros = std::int64_t;

inline constexpr double kMicrosPerSecond = 1e6;

inline TimeMicros seconds_to_micros(double s) {
  return static_cast<TimeMicros>(std::llround(s * kMicrosPerSecond));
}

inline double micros_to_seconds(TimeMicros t) {
  return static_cast<double>(t) / kMicrosPerSecond;
}

using Rng = std::mt19937_64;

// splitmix64, used to derive independent per-iteration seeds from a base
// seed by counter.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t counter) {
  return splitmix64(base + counter * 0x9e3779b97f4a7c15ULL);
}

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct LookupError : std::runtime_error {
  explicit LookupError(const std::string& what) : std::runtime_error(what) {}
};

struct StateError : std::runtime_error {
  explicit StateError(const std::string& what) : std::runtime_error(what) {}
};

struct ProtocolError : std::runtime_error {
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace jurisim

#endif  // JURISIM_COMMON_HPP

#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace dermanet {

/// FNV-1a 64-bit hash over raw bytes.
std::uint64_t fnv1a(const void* data, std::size_t n,
                    std::uint64_t seed = 14695981039346656037ull);

std::uint64_t fnv1a(std::string_view s);

/// Derive an independent stream seed from a master seed, a stream name and up
/// to two positional keys. Streams keyed purely by position make every draw
/// reproducible regardless of execution order (worker count, resume point).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t k0 = 0, std::uint64_t k1 = 0);

/// mt19937_64 with hand-rolled distributions. The standard distributions are
/// implementation-defined, so all draws are built directly on the raw 64-bit
/// output to keep results identical across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform index in [0, n). Lemire's multiply-shift; n must be > 0.
  std::uint64_t bounded(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

private:
  std::mt19937_64 engine_;
};

/// Fisher-Yates shuffle driven by Rng::bounded (std::shuffle is
/// implementation-defined and would break cross-platform determinism).
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.bounded(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace dermanet

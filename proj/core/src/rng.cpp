#include "dermanet/rng.hpp"

namespace dermanet {

namespace {

// splitmix64 finalizer; good avalanche for combining seed material.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t fnv1a(std::string_view s) { return fnv1a(s.data(), s.size()); }

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                          std::uint64_t k0, std::uint64_t k1) {
  std::uint64_t h = fnv1a(stream);
  h = mix64(h ^ master);
  h = mix64(h ^ k0);
  h = mix64(h ^ k1);
  return h;
}

}  // namespace dermanet

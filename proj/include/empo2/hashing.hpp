#pragma once

#include <cstdint>
#include <string_view>

namespace empo2 {

// Default salt mixed into every feature hash. Changing it changes every
// bucket assignment, so it is stored in checkpoints.
inline constexpr std::uint64_t kDefaultFeatureSalt = 0x9e3779b97f4a7c15ULL;
// Salt for the state/tip embedding.
inline constexpr std::uint64_t kEmbedSalt = 0x5bd1e9955bd1e995ULL;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over the 8 little-endian salt bytes followed by `text`, finished
// with mix64. This is the only hash used for features and embeddings.
std::uint64_t hash_text(std::string_view text, std::uint64_t salt);

// Hash of an ordered pair; the two parts are separated by 0x1f so that
// ("ab", "c") and ("a", "bc") differ.
std::uint64_t hash_pair(std::string_view first, std::string_view second,
                        std::uint64_t salt);

// FNV-1a 64 of raw bytes with the standard offset basis, no salt.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace empo2

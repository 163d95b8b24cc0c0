#include "empo2/hashing.hpp"

namespace empo2 {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv_step(std::uint64_t h, unsigned char byte) {
  return (h ^ byte) * kFnvPrime;
}

std::uint64_t fnv_salted(std::uint64_t salt) {
  std::uint64_t h = kFnvOffset;
  for (int i = 0; i < 8; ++i) h = fnv_step(h, static_cast<unsigned char>(salt >> (8 * i)));
  return h;
}

std::uint64_t fnv_bytes(std::uint64_t h, std::string_view bytes) {
  for (char c : bytes) h = fnv_step(h, static_cast<unsigned char>(c));
  return h;
}

}  // namespace

std::uint64_t hash_text(std::string_view text, std::uint64_t salt) {
  return mix64(fnv_bytes(fnv_salted(salt), text));
}

std::uint64_t hash_pair(std::string_view first, std::string_view second,
                        std::uint64_t salt) {
  std::uint64_t h = fnv_bytes(fnv_salted(salt), first);
  h = fnv_step(h, 0x1f);
  return mix64(fnv_bytes(h, second));
}

std::uint64_t fnv1a64(std::string_view bytes) { return fnv_bytes(kFnvOffset, bytes); }

}  // namespace empo2

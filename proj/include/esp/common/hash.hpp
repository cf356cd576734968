#pragma once

#include <cstdint>
#include <string_view>

namespace esp {

/// 64-bit FNV-1a, fed little-endian so results are platform independent.
class Fnv1a {
 public:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  Fnv1a& byte(std::uint8_t b) {
    state_ ^= b;
    state_ *= kPrime;
    return *this;
  }

  Fnv1a& u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) byte(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }

  Fnv1a& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }

  Fnv1a& str(std::string_view s) {
    for (char c : s) byte(static_cast<std::uint8_t>(c));
    return u64(s.size());
  }

  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = kOffset;
};

}  // namespace esp

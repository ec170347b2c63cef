#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace refverify {

// Incremental FNV-1a (64-bit). Field boundaries are marked with a separator
// byte so that ("ab","c") and ("a","bc") hash differently.
class Fnv1a64 {
 public:
  Fnv1a64& bytes(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      hash_ ^= p[i];
      hash_ *= kPrime;
    }
    return *this;
  }

  Fnv1a64& field(std::string_view s) {
    bytes(s.data(), s.size());
    const unsigned char sep = 0x1F;
    return bytes(&sep, 1);
  }

  uint64_t value() const { return hash_; }

  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(hash_));
    return std::string(buf);
  }

 private:
  static constexpr uint64_t kPrime = 1099511628211ULL;
  uint64_t hash_ = 14695981039346656037ULL;
};

inline uint64_t fnv1a64(std::string_view s) {
  return Fnv1a64().bytes(s.data(), s.size()).value();
}

}  // namespace refverify

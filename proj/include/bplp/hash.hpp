#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

namespace bplp {

/// Incremental 64-bit FNV-1a.
class Fnv1a {
 public:
  void add_bytes(const void* data, std::size_t n) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  template <class T>
  void add(const T& value) noexcept {
    add_bytes(&value, sizeof(T));
  }
  void add(std::string_view s) noexcept { add_bytes(s.data(), s.size()); }
  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(std::string_view s) noexcept {
  Fnv1a h;
  h.add(s);
  return h.digest();
}

}  // namespace bplp

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <type_traits>

#include "spikehar/error.hpp"

namespace spikehar::detail {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  if constexpr (std::is_floating_point_v<T>) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    put_le(out, std::bit_cast<U>(value));
    return;
  } else {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xFFu);
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
  }
}

template <typename T>
T get_le(std::istream& in) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::is_floating_point_v<T>) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    return std::bit_cast<T>(get_le<U>(in));
  } else {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw FormatError("unexpected end of file");
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(bytes[i]) << (8 * i));
    return static_cast<T>(u);
  }
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  char got[4];
  if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0)
    throw FormatError(std::string("bad magic, expected ") + magic);
}

}  // namespace spikehar::detail

#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <type_traits>

#include "priq/error.hpp"

namespace priq::le {

template <typename T>
using Bits = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;

template <typename T>
void put(std::ostream& out, T value) {
  const auto bits = std::bit_cast<Bits<T>>(value);
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), sizeof buf);
}

template <typename T>
T get(std::istream& in, const char* what) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof buf);
  if (in.gcount() != static_cast<std::streamsize>(sizeof buf)) {
    throw Error(ErrorKind::kParse, std::string("truncated ") + what);
  }
  Bits<T> bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<Bits<T>>(buf[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace priq::le

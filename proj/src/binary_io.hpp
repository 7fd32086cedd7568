#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "dbsa/error.hpp"
#include "dbsa/grid.hpp"

namespace dbsa::io {

template <typename T>
void put(std::ostream& os, T value) {
  static_assert(std::is_integral_v<T> || std::is_floating_point_v<T>);
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  const U bits = std::bit_cast<U>(value);
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  os.write(buf, sizeof(U));
}

template <typename T>
T get(std::istream& is) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  unsigned char buf[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(U))) fail(ErrorCode::Format, "truncated index file");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(U{buf[i]} << (8 * i));
  return std::bit_cast<T>(bits);
}

inline void put_string(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is) {
  const auto n = get<std::uint32_t>(is);
  if (n > (1u << 30)) fail(ErrorCode::Format, "implausible string length in index file");
  std::string s(n, '\0');
  if (n && !is.read(s.data(), n)) fail(ErrorCode::Format, "truncated index file");
  return s;
}

inline void put_magic(std::ostream& os, const char (&magic)[9], std::uint32_t version) {
  os.write(magic, 8);
  put<std::uint32_t>(os, version);
}

inline void expect_magic(std::istream& is, const char (&magic)[9], std::uint32_t version) {
  char buf[8];
  if (!is.read(buf, 8) || std::string(buf, 8) != std::string(magic, 8))
    fail(ErrorCode::Format, std::string("not a ") + magic + " file");
  const auto v = get<std::uint32_t>(is);
  if (v != version) fail(ErrorCode::Format, "unsupported index version " + std::to_string(v));
}

inline void put_grid(std::ostream& os, const GridConfig& g) {
  put<double>(os, g.origin.x);
  put<double>(os, g.origin.y);
  put<double>(os, g.extent);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(g.max_level));
}

inline GridConfig get_grid(std::istream& is) {
  GridConfig g;
  g.origin.x = get<double>(is);
  g.origin.y = get<double>(is);
  g.extent = get<double>(is);
  g.max_level = get<std::uint8_t>(is);
  try {
    g.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Format, std::string("bad grid in index file: ") + e.what());
  }
  return g;
}

inline void put_cell(std::ostream& os, const CellId& c) {
  put<std::uint8_t>(os, static_cast<std::uint8_t>(c.level));
  put<std::uint64_t>(os, c.code);
}

inline CellId get_cell(std::istream& is) {
  CellId c;
  c.level = get<std::uint8_t>(is);
  c.code = get<std::uint64_t>(is);
  return c;
}

}  // namespace dbsa::io

//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace solgraph {

class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace io {

void write_u8(std::ostream &os, std::uint8_t v);
void write_u32(std::ostream &os, std::uint32_t v);
void write_i32(std::ostream &os, std::int32_t v);
void write_f32(std::ostream &os, float v);
void write_f64(std::ostream &os, double v);

std::uint8_t read_u8(std::istream &is);
std::uint32_t read_u32(std::istream &is);
std::int32_t read_i32(std::istream &is);
float read_f32(std::istream &is);
double read_f64(std::istream &is);

void write_line(std::ostream &os, std::string_view line);
std::string read_line(std::istream &is);

// Little-endian bytes of a float, independent of host byte order.
inline std::array<unsigned char, 4> f32_bytes(float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  return {static_cast<unsigned char>(bits & 0xFFU),
          static_cast<unsigned char>((bits >> 8) & 0xFFU),
          static_cast<unsigned char>((bits >> 16) & 0xFFU),
          static_cast<unsigned char>((bits >> 24) & 0xFFU)};
}

// Writes through a sibling temporary and renames it into place, so readers
// never observe a truncated file.
void atomic_write(const std::filesystem::path &path,
                  const std::function<void(std::ostream &)> &writer,
                  bool binary = false);

std::string read_file(const std::filesystem::path &path);

// RFC 4180 style field splitting (quoted fields, doubled quotes).
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

// Shortest text that round-trips the value exactly.
std::string format_double(double v);
std::string format_float(float v);

}  // namespace io
}  // namespace solgraph

//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include "solgraph/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace solgraph::io {

void write_u8(std::ostream &os, std::uint8_t v) {
  os.put(static_cast<char>(v));
}

void write_u32(std::ostream &os, std::uint32_t v) {
  const std::array<char, 4> b = {
      static_cast<char>(v & 0xFFU), static_cast<char>((v >> 8) & 0xFFU),
      static_cast<char>((v >> 16) & 0xFFU), static_cast<char>((v >> 24) & 0xFFU)};
  os.write(b.data(), 4);
}

void write_i32(std::ostream &os, std::int32_t v) {
  write_u32(os, static_cast<std::uint32_t>(v));
}

void write_f32(std::ostream &os, float v) {
  write_u32(os, std::bit_cast<std::uint32_t>(v));
}

void write_f64(std::ostream &os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  write_u32(os, static_cast<std::uint32_t>(bits & 0xFFFFFFFFU));
  write_u32(os, static_cast<std::uint32_t>(bits >> 32));
}

std::uint8_t read_u8(std::istream &is) {
  const int c = is.get();
  if (c == std::char_traits<char>::eof()) {
    throw FormatError("unexpected end of stream");
  }
  return static_cast<std::uint8_t>(c);
}

std::uint32_t read_u32(std::istream &is) {
  std::array<unsigned char, 4> b{};
  is.read(reinterpret_cast<char *>(b.data()), 4);
  if (is.gcount() != 4) throw FormatError("unexpected end of stream");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

std::int32_t read_i32(std::istream &is) {
  return static_cast<std::int32_t>(read_u32(is));
}

float read_f32(std::istream &is) { return std::bit_cast<float>(read_u32(is)); }

double read_f64(std::istream &is) {
  const std::uint64_t lo = read_u32(is);
  const std::uint64_t hi = read_u32(is);
  return std::bit_cast<double>(lo | (hi << 32));
}

void write_line(std::ostream &os, std::string_view line) {
  os.write(line.data(), static_cast<std::streamsize>(line.size()));
  os.put('\n');
}

std::string read_line(std::istream &is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("unexpected end of stream");
  return line;
}

void atomic_write(const std::filesystem::path &path,
                  const std::function<void(std::ostream &)> &writer,
                  bool binary) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, binary ? std::ios::binary : std::ios::out);
    if (!os) throw std::runtime_error("cannot open " + tmp.string());
    writer(os);
    os.flush();
    if (!os) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

std::string format_float(float v) {
  std::array<char, 64> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

}  // namespace solgraph::io

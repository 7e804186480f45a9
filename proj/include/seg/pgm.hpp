#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "seg/grid.hpp"

namespace seg {

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string() + " for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw io_error("read failure on " + path.string());
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw io_error("write failure on " + path.string());
}

inline bool is_pnm_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

}  // namespace detail

/// Reads a binary PGM ("P5") file. Samples become doubles unchanged; 16-bit
/// samples are big-endian per the PNM convention. Header comments ("#") are
/// skipped. Returns a field of shape (height, width).
inline ScalarField read_pgm(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  const std::string name = path.string();
  const std::size_t size = bytes.size();

  if (size < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    if (size >= 2 && bytes[0] == 'P')
      throw parse_error(name, 0, "unsupported magic \"" +
                                     std::string(1, char(bytes[0])) +
                                     std::string(1, char(bytes[1])) + "\", expected binary \"P5\"");
    throw parse_error(name, 0, "unsupported magic, expected binary \"P5\"");
  }

  std::size_t pos = 2;
  auto next_int = [&](const char* what) -> std::pair<long, std::size_t> {
    for (;;) {
      if (pos >= size) throw parse_error(name, pos, std::string("header ended before ") + what);
      if (bytes[pos] == '#') {
        while (pos < size && bytes[pos] != '\n') ++pos;
        continue;
      }
      if (detail::is_pnm_space(bytes[pos])) {
        ++pos;
        continue;
      }
      break;
    }
    if (!std::isdigit(bytes[pos]))
      throw parse_error(name, pos, std::string("expected integer for ") + what);
    const std::size_t start = pos;
    long v = 0;
    while (pos < size && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1000000000L) throw parse_error(name, start, std::string(what) + " out of range");
      ++pos;
    }
    return {v, start};
  };

  const auto [width, woff] = next_int("width");
  const auto [height, hoff] = next_int("height");
  const auto [maxval, moff] = next_int("maxval");
  if (width < 1) throw parse_error(name, woff, "width must be positive");
  if (height < 1) throw parse_error(name, hoff, "height must be positive");
  if (maxval != 255 && maxval != 65535)
    throw parse_error(name, moff, "unsupported maxval " + std::to_string(maxval) +
                                      ", expected 255 or 65535");

  if (pos >= size || !detail::is_pnm_space(bytes[pos]))
    throw parse_error(name, pos, "expected whitespace between maxval and payload");
  ++pos;  // exactly one whitespace byte separates header and samples

  const std::size_t bytes_per_sample = maxval == 255 ? 1 : 2;
  const std::size_t expected = static_cast<std::size_t>(width) * height * bytes_per_sample;
  if (size - pos < expected)
    throw parse_error(name, size, "truncated payload: expected " + std::to_string(expected) +
                                      " bytes, found " + std::to_string(size - pos));
  if (size - pos > expected)
    throw parse_error(name, pos + expected, "trailing data after payload");

  ScalarField field(GridShape({static_cast<int>(height), static_cast<int>(width)}));
  if (bytes_per_sample == 1) {
    for (std::size_t i = 0; i < field.values.size(); ++i)
      field.values[i] = static_cast<double>(bytes[pos + i]);
  } else {
    for (std::size_t i = 0; i < field.values.size(); ++i) {
      const std::size_t b = pos + 2 * i;
      field.values[i] = static_cast<double>((unsigned(bytes[b]) << 8) | unsigned(bytes[b + 1]));
    }
  }
  return field;
}

/// Writes a 2D field as binary PGM with header "P5\n<width> <height>\n<maxval>\n".
/// Values are rounded to nearest; anything outside [0, maxval] is an error.
inline void write_pgm(const ScalarField& field, int maxval, const std::filesystem::path& path) {
  if (field.shape.ndim() != 2)
    throw std::invalid_argument("write_pgm expects a 2D field, got " +
                                std::to_string(field.shape.ndim()) + "D");
  if (maxval != 255 && maxval != 65535)
    throw std::invalid_argument("write_pgm maxval must be 255 or 65535");

  const int height = field.shape.dims[0];
  const int width = field.shape.dims[1];
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) +
                             "\n" + std::to_string(maxval) + "\n";

  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(header.size() + field.values.size() * (maxval == 255 ? 1 : 2));
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    const long long s = std::llround(field.values[i]);
    if (s < 0 || s > maxval)
      throw std::range_error("write_pgm: value " + std::to_string(field.values[i]) +
                             " at flat index " + std::to_string(i) + " outside [0, " +
                             std::to_string(maxval) + "]");
    if (maxval == 255) {
      bytes.push_back(static_cast<std::uint8_t>(s));
    } else {
      bytes.push_back(static_cast<std::uint8_t>((s >> 8) & 0xff));
      bytes.push_back(static_cast<std::uint8_t>(s & 0xff));
    }
  }
  detail::write_file_bytes(path, bytes);
}

}  // namespace seg

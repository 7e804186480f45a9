#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "seg/pgm.hpp"

namespace seg {

enum class MetaElementType { met_uchar, met_short, met_ushort, met_float };

inline const char* to_string(MetaElementType t) {
  switch (t) {
    case MetaElementType::met_uchar: return "MET_UCHAR";
    case MetaElementType::met_short: return "MET_SHORT";
    case MetaElementType::met_ushort: return "MET_USHORT";
    case MetaElementType::met_float: return "MET_FLOAT";
  }
  return "MET_UCHAR";
}

inline MetaElementType meta_element_type_from_string(const std::string& s,
                                                     const std::string& context) {
  if (s == "MET_UCHAR") return MetaElementType::met_uchar;
  if (s == "MET_SHORT") return MetaElementType::met_short;
  if (s == "MET_USHORT") return MetaElementType::met_ushort;
  if (s == "MET_FLOAT") return MetaElementType::met_float;
  throw parse_error(context, "unsupported ElementType \"" + s + "\"");
}

inline std::size_t meta_element_size(MetaElementType t) {
  return t == MetaElementType::met_float ? 4
         : t == MetaElementType::met_uchar ? 1
                                           : 2;
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

struct MetaHeader {
  std::map<std::string, std::string> keys;
  std::size_t payload_offset = 0;  // for LOCAL data, offset into the .mha file
};

// Header lines are "Key = Value". Parsing stops after ElementDataFile, which
// is the last key by convention; everything after its newline is payload.
inline MetaHeader parse_meta_header(const std::vector<std::uint8_t>& bytes,
                                    const std::string& name) {
  MetaHeader h;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t eol = pos;
    while (eol < bytes.size() && bytes[eol] != '\n') ++eol;
    const std::string line(bytes.begin() + pos, bytes.begin() + eol);
    const std::size_t next = eol < bytes.size() ? eol + 1 : eol;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw parse_error(name, pos, "malformed header line, expected \"Key = Value\"");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw parse_error(name, pos, "empty header key");
    h.keys[key] = value;
    pos = next;
    if (key == "ElementDataFile") {
      h.payload_offset = pos;
      return h;
    }
  }
  throw parse_error(name, "missing required key ElementDataFile");
}

}  // namespace detail

/// Reads a minimal MetaImage volume: either .mha with "ElementDataFile = LOCAL"
/// and the raw payload appended, or a .mhd header next to a raw file. The
/// payload is little-endian. DimSize is in X Y Z order and maps to a
/// row-major (Z, Y, X) shape.
inline ScalarField read_metaimage(const std::filesystem::path& path) {
  const std::string name = path.string();
  const auto bytes = detail::read_file_bytes(path);
  const auto header = detail::parse_meta_header(bytes, name);

  auto require = [&](const char* key) -> const std::string& {
    auto it = header.keys.find(key);
    if (it == header.keys.end())
      throw parse_error(name, std::string("missing required key ") + key);
    return it->second;
  };

  const int ndims = [&] {
    const std::string& v = require("NDims");
    try {
      return std::stoi(v);
    } catch (const std::exception&) {
      throw parse_error(name, "cannot parse NDims value \"" + v + "\"");
    }
  }();
  if (ndims != 2 && ndims != 3)
    throw parse_error(name, "NDims must be 2 or 3, got " + std::to_string(ndims));

  std::vector<int> dim_size;  // X Y [Z]
  {
    std::istringstream ss(require("DimSize"));
    int d;
    while (ss >> d) dim_size.push_back(d);
    if (static_cast<int>(dim_size.size()) != ndims)
      throw parse_error(name, "DimSize must list " + std::to_string(ndims) + " extents");
    for (int d2 : dim_size)
      if (d2 < 1) throw parse_error(name, "DimSize extents must be positive");
  }

  const MetaElementType etype = meta_element_type_from_string(require("ElementType"), name);
  const std::string& data_file = require("ElementDataFile");

  std::vector<std::uint8_t> payload;
  if (data_file == "LOCAL") {
    payload.assign(bytes.begin() + header.payload_offset, bytes.end());
  } else {
    if (std::filesystem::path(data_file).is_absolute())
      throw parse_error(name, "ElementDataFile must be LOCAL or a relative path");
    payload = detail::read_file_bytes(path.parent_path() / data_file);
  }

  std::vector<int> shape_dims(dim_size.rbegin(), dim_size.rend());  // -> (Z, Y, X)
  GridShape shape(shape_dims);
  const std::size_t count = shape.cell_count();
  const std::size_t expected = count * meta_element_size(etype);
  if (payload.size() != expected)
    throw parse_error(name, "payload size mismatch: expected " + std::to_string(expected) +
                                " bytes for DimSize, found " + std::to_string(payload.size()));

  ScalarField field(shape);
  const std::uint8_t* p = payload.data();
  switch (etype) {
    case MetaElementType::met_uchar:
      for (std::size_t i = 0; i < count; ++i) field.values[i] = static_cast<double>(p[i]);
      break;
    case MetaElementType::met_short:
      for (std::size_t i = 0; i < count; ++i) {
        const std::uint16_t raw = static_cast<std::uint16_t>(p[2 * i] | (p[2 * i + 1] << 8));
        field.values[i] = static_cast<double>(static_cast<std::int16_t>(raw));
      }
      break;
    case MetaElementType::met_ushort:
      for (std::size_t i = 0; i < count; ++i)
        field.values[i] = static_cast<double>(p[2 * i] | (p[2 * i + 1] << 8));
      break;
    case MetaElementType::met_float:
      for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t raw = 0;
        std::memcpy(&raw, p + 4 * i, 4);
        field.values[i] = static_cast<double>(std::bit_cast<float>(raw));
      }
      break;
  }
  return field;
}

/// Writes a field as MetaImage with header keys in the fixed order NDims,
/// DimSize, ElementType, ElementDataFile. A ".mha" path embeds the payload
/// (ElementDataFile = LOCAL); a ".mhd" path writes a sibling ".raw" file.
inline void write_metaimage(const ScalarField& field, MetaElementType etype,
                            const std::filesystem::path& path) {
  const auto& dims = field.shape.dims;
  std::string dim_size;
  for (auto it = dims.rbegin(); it != dims.rend(); ++it) {
    if (!dim_size.empty()) dim_size += " ";
    dim_size += std::to_string(*it);
  }

  std::vector<std::uint8_t> payload;
  payload.reserve(field.values.size() * meta_element_size(etype));
  auto push_le16 = [&](std::uint16_t v) {
    payload.push_back(static_cast<std::uint8_t>(v & 0xff));
    payload.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  };
  auto integral_sample = [&](std::size_t i, long long lo, long long hi) {
    const long long s = std::llround(field.values[i]);
    if (s < lo || s > hi)
      throw std::range_error("write_metaimage: value " + std::to_string(field.values[i]) +
                             " at flat index " + std::to_string(i) + " outside [" +
                             std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return s;
  };
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    switch (etype) {
      case MetaElementType::met_uchar:
        payload.push_back(static_cast<std::uint8_t>(integral_sample(i, 0, 255)));
        break;
      case MetaElementType::met_short:
        push_le16(static_cast<std::uint16_t>(
            static_cast<std::int16_t>(integral_sample(i, -32768, 32767))));
        break;
      case MetaElementType::met_ushort:
        push_le16(static_cast<std::uint16_t>(integral_sample(i, 0, 65535)));
        break;
      case MetaElementType::met_float: {
        const auto raw = std::bit_cast<std::uint32_t>(static_cast<float>(field.values[i]));
        payload.push_back(static_cast<std::uint8_t>(raw & 0xff));
        payload.push_back(static_cast<std::uint8_t>((raw >> 8) & 0xff));
        payload.push_back(static_cast<std::uint8_t>((raw >> 16) & 0xff));
        payload.push_back(static_cast<std::uint8_t>((raw >> 24) & 0xff));
        break;
      }
    }
  }

  const std::string ext = path.extension().string();
  std::string data_file;
  if (ext == ".mha") {
    data_file = "LOCAL";
  } else if (ext == ".mhd") {
    data_file = path.stem().string() + ".raw";
  } else {
    throw io_error("write_metaimage: path must end in .mha or .mhd, got " + path.string());
  }

  std::string header;
  header += "NDims = " + std::to_string(field.shape.ndim()) + "\n";
  header += "DimSize = " + dim_size + "\n";
  header += std::string("ElementType = ") + to_string(etype) + "\n";
  header += "ElementDataFile = " + data_file + "\n";

  if (ext == ".mha") {
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.insert(bytes.end(), payload.begin(), payload.end());
    detail::write_file_bytes(path, bytes);
  } else {
    detail::write_file_bytes(path, std::vector<std::uint8_t>(header.begin(), header.end()));
    detail::write_file_bytes(path.parent_path() / data_file, payload);
  }
}

}  // namespace seg

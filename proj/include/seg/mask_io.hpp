#pragma once

#include <filesystem>
#include <string>

#include "seg/metaimage.hpp"
#include "seg/pgm.hpp"

namespace seg {

/// Reads a scalar image, choosing the format by extension
/// (.pgm / .mha / .mhd).
inline ScalarField load_image(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".mha" || ext == ".mhd") return read_metaimage(path);
  throw io_error("unsupported image format \"" + ext + "\" for " + path.string());
}

/// Any strictly positive sample counts as foreground.
inline BinaryMask binarize(const ScalarField& field) {
  BinaryMask mask(field.shape);
  for (std::size_t i = 0; i < field.values.size(); ++i)
    mask.values[i] = field.values[i] > 0 ? 1 : 0;
  return mask;
}

inline BinaryMask load_mask(const std::filesystem::path& path) { return binarize(load_image(path)); }

/// Writes a mask with the given foreground sample value (255 by default, 1 for
/// tools that want {0,1} volumes). 2D masks become 8-bit PGM, 3D masks
/// MetaImage MET_UCHAR.
inline void save_mask(const BinaryMask& mask, const std::filesystem::path& path,
                      int foreground = 255) {
  if (foreground < 1 || foreground > 255)
    throw std::invalid_argument("mask foreground value must be in [1, 255]");
  ScalarField field(mask.shape);
  for (std::size_t i = 0; i < mask.values.size(); ++i)
    field.values[i] = mask.values[i] ? static_cast<double>(foreground) : 0.0;
  if (mask.shape.ndim() == 2) {
    const std::string ext = path.extension().string();
    if (ext == ".mha" || ext == ".mhd") {
      write_metaimage(field, MetaElementType::met_uchar, path);
    } else {
      write_pgm(field, 255, path);
    }
  } else {
    write_metaimage(field, MetaElementType::met_uchar, path);
  }
}

}  // namespace seg

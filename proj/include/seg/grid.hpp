#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "seg/errors.hpp"

namespace seg {

/// Grid extents, outermost axis first: (rows, cols) in 2D, (slices, rows, cols)
/// in 3D. Cells are unit-spaced and stored row-major, so the flat index is
/// y*W + x in 2D and z*(H*W) + y*W + x in 3D.
struct GridShape {
  std::vector<int> dims;

  GridShape() = default;
  explicit GridShape(std::vector<int> extents) : dims(std::move(extents)) {
    if (dims.size() < 2 || dims.size() > 3)
      throw std::invalid_argument("grid must be 2- or 3-dimensional, got " +
                                  std::to_string(dims.size()) + " axes");
    for (int d : dims)
      if (d < 1)
        throw std::invalid_argument("grid extents must be positive, got " + std::to_string(d));
  }

  int ndim() const { return static_cast<int>(dims.size()); }

  std::size_t cell_count() const {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    return n;
  }

  bool operator==(const GridShape&) const = default;

  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (i) s += "x";
      s += std::to_string(dims[i]);
    }
    return s;
  }
};

inline void require_same_shape(const GridShape& a, const GridShape& b, const char* what) {
  if (!(a == b))
    throw shape_mismatch(std::string(what) + ": shape " + a.to_string() + " vs " + b.to_string());
}

/// Real-valued grid (image, edge indicator, potential, level set, ...).
struct ScalarField {
  GridShape shape;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(GridShape s, double fill = 0.0)
      : shape(std::move(s)), values(shape.cell_count(), fill) {}
  ScalarField(GridShape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != shape.cell_count())
      throw std::invalid_argument("scalar field has " + std::to_string(values.size()) +
                                  " values for shape " + shape.to_string());
  }

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  double& at(int y, int x) { return values[static_cast<std::size_t>(y) * shape.dims[1] + x]; }
  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * shape.dims[1] + x]; }
  double& at(int z, int y, int x) {
    return values[(static_cast<std::size_t>(z) * shape.dims[1] + y) * shape.dims[2] + x];
  }
  double at(int z, int y, int x) const {
    return values[(static_cast<std::size_t>(z) * shape.dims[1] + y) * shape.dims[2] + x];
  }
};

/// {0,1}-valued grid marking the region inside the contour. Same indexing
/// convention as ScalarField; every value is checked to be 0 or 1.
struct BinaryMask {
  GridShape shape;
  std::vector<std::uint8_t> values;

  BinaryMask() = default;
  explicit BinaryMask(GridShape s, std::uint8_t fill = 0)
      : shape(std::move(s)), values(shape.cell_count(), fill) {
    if (fill > 1) throw std::invalid_argument("mask fill value must be 0 or 1");
  }
  BinaryMask(GridShape s, std::vector<std::uint8_t> v)
      : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != shape.cell_count())
      throw std::invalid_argument("mask has " + std::to_string(values.size()) +
                                  " values for shape " + shape.to_string());
    check_binary();
  }

  void check_binary() const {
    for (std::size_t i = 0; i < values.size(); ++i)
      if (values[i] > 1)
        throw std::invalid_argument("mask value at flat index " + std::to_string(i) +
                                    " is " + std::to_string(values[i]) + ", expected 0 or 1");
  }

  std::uint8_t& operator[](std::size_t i) { return values[i]; }
  std::uint8_t operator[](std::size_t i) const { return values[i]; }

  std::uint8_t& at(int y, int x) { return values[static_cast<std::size_t>(y) * shape.dims[1] + x]; }
  std::uint8_t at(int y, int x) const {
    return values[static_cast<std::size_t>(y) * shape.dims[1] + x];
  }
  std::uint8_t& at(int z, int y, int x) {
    return values[(static_cast<std::size_t>(z) * shape.dims[1] + y) * shape.dims[2] + x];
  }
  std::uint8_t at(int z, int y, int x) const {
    return values[(static_cast<std::size_t>(z) * shape.dims[1] + y) * shape.dims[2] + x];
  }

  std::size_t foreground_count() const {
    std::size_t n = 0;
    for (auto v : values) n += v;
    return n;
  }

  bool operator==(const BinaryMask&) const = default;
};

inline bool all_finite(const ScalarField& f) {
  for (double v : f.values)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace seg

#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "seg/grid.hpp"
#include "seg/ictm.hpp"

namespace seg {

enum class SyntheticKind { two_discs, dumbbell, bright_square, ring };

/// Synthetic fixture description. Coordinates are in index order (row, col)
/// or (slice, row, col); all geometry must fit inside the grid.
struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::two_discs;
  std::vector<int> dims;

  std::vector<double> center_a;  // first disc / dumbbell lobe / square or ring center
  std::vector<double> center_b;  // second disc / dumbbell lobe
  double radius_a = 0.0;
  double radius_b = 0.0;
  double neck_width = 0.0;    // dumbbell: full width of the connecting bar
  int extent = 0;             // bright_square: side length in cells
  double inner_radius = 0.0;  // ring
  double outer_radius = 0.0;  // ring

  double foreground = 200.0;
  double background = 40.0;
  double noise_sigma = 0.0;
  std::uint64_t rng_seed = 0;
};

/// Fills in centered geometry scaled to the grid.
inline SyntheticSpec default_spec(SyntheticKind kind, std::vector<int> dims) {
  SyntheticSpec spec;
  spec.kind = kind;
  spec.dims = dims;
  GridShape shape(dims);  // validates
  const int n = shape.ndim();
  int min_extent = dims[0];
  for (int d : dims) min_extent = std::min(min_extent, d);

  std::vector<double> mid(n), left(n), right(n);
  for (int a = 0; a < n; ++a) mid[a] = left[a] = right[a] = (dims[a] - 1) / 2.0;
  left[n - 1] = (dims[n - 1] - 1) * 0.3;
  right[n - 1] = (dims[n - 1] - 1) * 0.7;

  switch (kind) {
    case SyntheticKind::two_discs:
      spec.center_a = left;
      spec.center_b = right;
      spec.radius_a = spec.radius_b = min_extent / 6.0;
      break;
    case SyntheticKind::dumbbell:
      spec.center_a = left;
      spec.center_b = right;
      spec.radius_a = spec.radius_b = min_extent / 7.0;
      spec.neck_width = min_extent / 12.0;
      break;
    case SyntheticKind::bright_square:
      spec.center_a = mid;
      spec.extent = std::max(1, min_extent / 2);
      break;
    case SyntheticKind::ring:
      spec.center_a = mid;
      spec.outer_radius = min_extent / 3.0;
      spec.inner_radius = min_extent / 6.0;
      break;
  }
  return spec;
}

namespace detail {

// Box-Muller on mt19937_64 output so the noise stream does not depend on the
// standard library's normal_distribution implementation.
class NormalSampler {
public:
  explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

private:
  double uniform01() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

template <typename Fn>
void for_each_cell(const GridShape& shape, Fn&& fn) {
  const auto& d = shape.dims;
  std::size_t flat = 0;
  if (shape.ndim() == 2) {
    for (int y = 0; y < d[0]; ++y)
      for (int x = 0; x < d[1]; ++x) fn(std::array<int, 3>{0, y, x}, flat++);
  } else {
    for (int z = 0; z < d[0]; ++z)
      for (int y = 0; y < d[1]; ++y)
        for (int x = 0; x < d[2]; ++x) fn(std::array<int, 3>{z, y, x}, flat++);
  }
}

// coords arrive padded to 3 entries with a leading zero in 2D
inline double dist_sq_to_point(const std::array<int, 3>& c, const std::vector<double>& p, int n) {
  double s = 0.0;
  for (int a = 0; a < n; ++a) {
    const double d = c[3 - n + a] - p[a];
    s += d * d;
  }
  return s;
}

inline double dist_sq_to_segment(const std::array<int, 3>& c, const std::vector<double>& a,
                                 const std::vector<double>& b, int n) {
  double ab2 = 0.0, ap_ab = 0.0;
  for (int i = 0; i < n; ++i) {
    const double ab = b[i] - a[i];
    ab2 += ab * ab;
    ap_ab += (c[3 - n + i] - a[i]) * ab;
  }
  const double t = ab2 > 0 ? std::clamp(ap_ab / ab2, 0.0, 1.0) : 0.0;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = c[3 - n + i] - (a[i] + t * (b[i] - a[i]));
    s += d * d;
  }
  return s;
}

inline void require_inside(double lo, double hi, int dim, const char* what) {
  if (lo < 0 || hi > dim - 1)
    throw std::invalid_argument(std::string("synth_image: ") + what + " out of bounds");
}

}  // namespace detail

struct SynthResult {
  ScalarField image;
  BinaryMask truth;
};

/// Builds the fixture image (foreground intensity on the shape, background
/// elsewhere, optional additive Gaussian noise) together with the exact
/// ground-truth mask. Deterministic for a fixed seed.
inline SynthResult synth_image(const SyntheticSpec& spec) {
  GridShape shape(spec.dims);
  const int n = shape.ndim();
  if (spec.foreground == spec.background)
    throw std::invalid_argument("synth_image: foreground and background intensities must differ");
  if (spec.noise_sigma < 0) throw std::invalid_argument("synth_image: noise_sigma must be >= 0");

  auto check_center = [&](const std::vector<double>& c, double radius, const char* what) {
    if (static_cast<int>(c.size()) != n)
      throw std::invalid_argument(std::string("synth_image: ") + what + " must have " +
                                  std::to_string(n) + " coordinates");
    for (int a = 0; a < n; ++a)
      detail::require_inside(c[a] - radius, c[a] + radius, shape.dims[a], what);
  };

  std::vector<int> square_lo(n, 0);
  switch (spec.kind) {
    case SyntheticKind::two_discs:
      if (!(spec.radius_a > 0) || !(spec.radius_b > 0))
        throw std::invalid_argument("synth_image: disc radii must be positive");
      check_center(spec.center_a, spec.radius_a, "first disc");
      check_center(spec.center_b, spec.radius_b, "second disc");
      break;
    case SyntheticKind::dumbbell:
      if (!(spec.radius_a > 0) || !(spec.radius_b > 0) || !(spec.neck_width > 0))
        throw std::invalid_argument("synth_image: dumbbell lobes and neck must be positive");
      check_center(spec.center_a, spec.radius_a, "first lobe");
      check_center(spec.center_b, spec.radius_b, "second lobe");
      break;
    case SyntheticKind::bright_square: {
      if (spec.extent < 1) throw std::invalid_argument("synth_image: square extent must be >= 1");
      check_center(spec.center_a, 0.0, "square center");
      for (int a = 0; a < n; ++a) {
        square_lo[a] = static_cast<int>(std::floor(spec.center_a[a])) - (spec.extent - 1) / 2;
        if (square_lo[a] < 0 || square_lo[a] + spec.extent > shape.dims[a])
          throw std::invalid_argument("synth_image: square out of bounds");
      }
      break;
    }
    case SyntheticKind::ring:
      if (!(spec.outer_radius > spec.inner_radius) || !(spec.inner_radius > 0))
        throw std::invalid_argument("synth_image: ring needs 0 < inner < outer radius");
      check_center(spec.center_a, spec.outer_radius, "ring");
      break;
  }

  BinaryMask truth(shape);
  detail::for_each_cell(shape, [&](const std::array<int, 3>& c, std::size_t flat) {
    bool in = false;
    switch (spec.kind) {
      case SyntheticKind::two_discs:
        in = detail::dist_sq_to_point(c, spec.center_a, n) <= spec.radius_a * spec.radius_a ||
             detail::dist_sq_to_point(c, spec.center_b, n) <= spec.radius_b * spec.radius_b;
        break;
      case SyntheticKind::dumbbell: {
        const double half = spec.neck_width / 2.0;
        in = detail::dist_sq_to_point(c, spec.center_a, n) <= spec.radius_a * spec.radius_a ||
             detail::dist_sq_to_point(c, spec.center_b, n) <= spec.radius_b * spec.radius_b ||
             detail::dist_sq_to_segment(c, spec.center_a, spec.center_b, n) <= half * half;
        break;
      }
      case SyntheticKind::bright_square: {
        in = true;
        for (int a = 0; a < n; ++a) {
          const int v = c[3 - n + a];
          if (v < square_lo[a] || v >= square_lo[a] + spec.extent) in = false;
        }
        break;
      }
      case SyntheticKind::ring: {
        const double d2 = detail::dist_sq_to_point(c, spec.center_a, n);
        in = d2 >= spec.inner_radius * spec.inner_radius &&
             d2 <= spec.outer_radius * spec.outer_radius;
        break;
      }
    }
    truth.values[flat] = in ? 1 : 0;
  });

  ScalarField image(shape);
  for (std::size_t i = 0; i < image.values.size(); ++i)
    image.values[i] = truth.values[i] ? spec.foreground : spec.background;
  if (spec.noise_sigma > 0) {
    detail::NormalSampler noise(spec.rng_seed);
    for (double& v : image.values) v += spec.noise_sigma * noise.next();
  }
  return {std::move(image), std::move(truth)};
}

/// Concentric box with every extent of the truth's bounding box halved
/// (rounded to nearest, floor 1).
inline BinaryMask bbox_init(const BinaryMask& truth) {
  const int n = truth.shape.ndim();
  std::array<int, 3> lo{}, hi{};
  lo.fill(1 << 30);
  hi.fill(-1);
  detail::for_each_cell(truth.shape, [&](const std::array<int, 3>& c, std::size_t flat) {
    if (!truth.values[flat]) return;
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }
  });
  if (hi[2] < 0) throw std::invalid_argument("bbox_init: truth mask is empty");

  std::array<int, 3> new_lo{}, new_hi{};
  for (int a = 3 - n; a < 3; ++a) {
    const int extent = hi[a] - lo[a] + 1;
    const int halved = std::max(1, static_cast<int>(std::llround(extent / 2.0)));
    new_lo[a] = lo[a] + (extent - halved) / 2;
    new_hi[a] = new_lo[a] + halved - 1;
  }

  BinaryMask init(truth.shape);
  detail::for_each_cell(truth.shape, [&](const std::array<int, 3>& c, std::size_t flat) {
    bool in = true;
    for (int a = 3 - n; a < 3; ++a)
      if (c[a] < new_lo[a] || c[a] > new_hi[a]) in = false;
    init.values[flat] = in ? 1 : 0;
  });
  return init;
}

/// Morphological erosion with the discrete Euclidean ball of the given radius.
/// Out-of-bounds neighbours count as background, so the mask erodes at the
/// grid border. May return an empty mask.
inline BinaryMask erode_init(const BinaryMask& truth, int radius) {
  if (radius < 0) throw std::invalid_argument("erode_init: radius must be >= 0");
  const int n = truth.shape.ndim();
  const auto& dims = truth.shape.dims;

  std::vector<std::array<int, 3>> ball;  // offsets with |d|^2 <= radius^2
  const int r2 = radius * radius;
  const int zr = n == 3 ? radius : 0;
  for (int dz = -zr; dz <= zr; ++dz)
    for (int dy = -radius; dy <= radius; ++dy)
      for (int dx = -radius; dx <= radius; ++dx)
        if (dz * dz + dy * dy + dx * dx <= r2) ball.push_back({dz, dy, dx});

  BinaryMask out(truth.shape);
  detail::for_each_cell(truth.shape, [&](const std::array<int, 3>& c, std::size_t flat) {
    if (!truth.values[flat]) return;
    for (const auto& d : ball) {
      std::array<int, 3> q{c[0] + d[0], c[1] + d[1], c[2] + d[2]};
      bool inside = true;
      for (int a = 3 - n; a < 3; ++a)
        if (q[a] < 0 || q[a] >= dims[a - (3 - n)]) inside = false;
      if (!inside) return;
      std::size_t idx = 0;
      for (int a = 3 - n; a < 3; ++a) idx = idx * dims[a - (3 - n)] + q[a];
      if (!truth.values[idx]) return;
    }
    out.values[flat] = 1;
  });
  return out;
}

/// Dice similarity 2|a . b| / (|a| + |b|); two empty masks count as identical.
inline double dice(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a.shape, b.shape, "dice");
  std::size_t inter = 0, total = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    inter += a.values[i] & b.values[i];
    total += a.values[i] + b.values[i];
  }
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

/// Number of foreground components under face adjacency (4-connectivity in
/// 2D, 6 in 3D).
inline int connected_components(const BinaryMask& mask) {
  const int n = mask.shape.ndim();
  const auto& dims = mask.shape.dims;
  std::vector<std::uint8_t> seen(mask.values.size(), 0);
  std::vector<std::size_t> stack;

  std::array<std::size_t, 3> strides{};
  {
    std::size_t s = 1;
    for (int a = n - 1; a >= 0; --a) {
      strides[a] = s;
      s *= static_cast<std::size_t>(dims[a]);
    }
  }

  int components = 0;
  for (std::size_t start = 0; start < mask.values.size(); ++start) {
    if (!mask.values[start] || seen[start]) continue;
    ++components;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      std::size_t rest = cur;
      std::array<int, 3> coord{};
      for (int a = 0; a < n; ++a) {
        coord[a] = static_cast<int>(rest / strides[a]);
        rest %= strides[a];
      }
      for (int a = 0; a < n; ++a) {
        for (int step : {-1, 1}) {
          const int c = coord[a] + step;
          if (c < 0 || c >= dims[a]) continue;
          const std::size_t nb = step > 0 ? cur + strides[a] : cur - strides[a];
          if (mask.values[nb] && !seen[nb]) {
            seen[nb] = 1;
            stack.push_back(nb);
          }
        }
      }
    }
  }
  return components;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Writes "iter,energy,energy_minmax_normalized,flips,elapsed_s" rows with
/// "\n" line endings and a "." decimal point. The normalized column is
/// (E - min) / (max - min), or 0 when all energies coincide.
inline void export_trace_csv(const IterationTrace& trace, const std::filesystem::path& path) {
  if (trace.empty()) throw std::invalid_argument("export_trace_csv: trace is empty");
  double mn = trace.front().energy, mx = trace.front().energy;
  for (const auto& rec : trace) {
    mn = std::min(mn, rec.energy);
    mx = std::max(mx, rec.energy);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out << "iter,energy,energy_minmax_normalized,flips,elapsed_s\n";
  for (const auto& rec : trace) {
    const double normalized = mx > mn ? (rec.energy - mn) / (mx - mn) : 0.0;
    out << rec.iteration << ',' << detail::format_double(rec.energy) << ','
        << detail::format_double(normalized) << ',' << rec.flips << ','
        << detail::format_double(rec.elapsed_s) << '\n';
  }
  if (!out) throw io_error("write failure on " + path.string());
}

}  // namespace seg

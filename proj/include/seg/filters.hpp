#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "seg/grid.hpp"

namespace seg {

/// Edge-indicator preprocessing parameters. sigma is the standard deviation
/// (in pixels) of the Gaussian used to smooth the image before taking
/// gradients. When normalize_input is set, the image is affinely rescaled to
/// [0, 255] first so the same sigma/weight choices carry across 8- and 16-bit
/// inputs.
struct EdgeParams {
  double sigma = 15.0;
  bool normalize_input = true;
};

/// Sampled 1-D heat kernel slice. The n-D kernel is the product of this slice
/// along each axis. Weights cover [-truncation_radius, truncation_radius] and
/// sum to 1.
struct KernelSpec {
  double tau = 0.0;
  int truncation_radius = 0;
  std::vector<double> weights;  // size 2*truncation_radius + 1, symmetric
};

namespace detail {

// Half-sample symmetric reflection: ... f1 f0 | f0 f1 ... fn-1 | fn-1 ... This
// choice keeps unit-sum convolutions mean-preserving for every field, not just
// periodic ones.
inline int reflect_index(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0)
      i = -i - 1;
    else
      i = 2 * n - 1 - i;
  }
  return i;
}

// Sampled Gaussian with the given standard deviation, truncated at
// ceil(4*stddev) and renormalized to unit sum.
inline std::pair<int, std::vector<double>> sampled_gaussian(double stddev) {
  const int radius = static_cast<int>(std::ceil(4.0 * stddev));
  std::vector<double> w(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(double(i) * i) / (2.0 * stddev * stddev));
    w[i + radius] = v;
    sum += v;
  }
  for (double& v : w) v /= sum;
  return {radius, std::move(w)};
}

inline void convolve_axis(const ScalarField& src, ScalarField& dst,
                          const std::vector<double>& w, int radius, int axis) {
  const auto& dims = src.shape.dims;
  const int n = src.shape.ndim();
  const int len = dims[axis];
  std::size_t stride = 1;
  for (int a = axis + 1; a < n; ++a) stride *= static_cast<std::size_t>(dims[a]);
  std::size_t lines_before = 1;
  for (int a = 0; a < axis; ++a) lines_before *= static_cast<std::size_t>(dims[a]);

  const double* in = src.values.data();
  double* out = dst.values.data();
  for (std::size_t b = 0; b < lines_before; ++b) {
    const std::size_t block = b * static_cast<std::size_t>(len) * stride;
    for (std::size_t c = 0; c < stride; ++c) {
      const std::size_t base = block + c;
      for (int t = 0; t < len; ++t) {
        double acc = 0.0;
        if (t - radius >= 0 && t + radius < len) {
          const double* p = in + base + static_cast<std::size_t>(t - radius) * stride;
          for (int k = 0; k <= 2 * radius; ++k) acc += w[k] * p[static_cast<std::size_t>(k) * stride];
        } else {
          for (int k = -radius; k <= radius; ++k) {
            const int s = reflect_index(t + k, len);
            acc += w[k + radius] * in[base + static_cast<std::size_t>(s) * stride];
          }
        }
        out[base + static_cast<std::size_t>(t) * stride] = acc;
      }
    }
  }
}

inline ScalarField convolve_separable(const ScalarField& f, const std::vector<double>& w,
                                      int radius) {
  ScalarField cur = f;
  ScalarField tmp(f.shape);
  for (int axis = 0; axis < f.shape.ndim(); ++axis) {
    convolve_axis(cur, tmp, w, radius, axis);
    std::swap(cur, tmp);
  }
  return cur;
}

}  // namespace detail

/// Separable Gaussian smoothing with reflected boundaries.
inline ScalarField gaussian_smooth(const ScalarField& field, double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("gaussian_smooth: sigma must be positive");
  auto [radius, w] = detail::sampled_gaussian(sigma);
  return detail::convolve_separable(field, w, radius);
}

/// Per-axis derivative: central differences in the interior, one-sided at the
/// two boundary cells. Axis extents must be at least 2.
inline ScalarField axis_derivative(const ScalarField& field, int axis) {
  const auto& dims = field.shape.dims;
  const int n = field.shape.ndim();
  const int len = dims[axis];
  if (len < 2)
    throw std::invalid_argument("axis_derivative: extent " + std::to_string(len) +
                                " on axis " + std::to_string(axis) + " is too small");
  std::size_t stride = 1;
  for (int a = axis + 1; a < n; ++a) stride *= static_cast<std::size_t>(dims[a]);
  std::size_t lines_before = 1;
  for (int a = 0; a < axis; ++a) lines_before *= static_cast<std::size_t>(dims[a]);

  ScalarField out(field.shape);
  const double* in = field.values.data();
  double* d = out.values.data();
  for (std::size_t b = 0; b < lines_before; ++b) {
    const std::size_t block = b * static_cast<std::size_t>(len) * stride;
    for (std::size_t c = 0; c < stride; ++c) {
      const std::size_t base = block + c;
      auto v = [&](int t) { return in[base + static_cast<std::size_t>(t) * stride]; };
      d[base] = v(1) - v(0);
      for (int t = 1; t < len - 1; ++t)
        d[base + static_cast<std::size_t>(t) * stride] = 0.5 * (v(t + 1) - v(t - 1));
      d[base + static_cast<std::size_t>(len - 1) * stride] = v(len - 1) - v(len - 2);
    }
  }
  return out;
}

/// Squared gradient magnitude, summed over axes.
inline ScalarField gradient_magnitude_sq(const ScalarField& field) {
  ScalarField out(field.shape);
  for (int axis = 0; axis < field.shape.ndim(); ++axis) {
    const ScalarField d = axis_derivative(field, axis);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += d.values[i] * d.values[i];
  }
  return out;
}

/// Affine rescale so min(f) maps to lo and max(f) to hi. A constant field maps
/// to all-lo.
inline ScalarField rescale_affine(const ScalarField& field, double lo, double hi) {
  double mn = field.values[0], mx = field.values[0];
  for (double v : field.values) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  if (mx == mn) return ScalarField(field.shape, lo);
  ScalarField out(field.shape);
  const double scale = (hi - lo) / (mx - mn);
  for (std::size_t i = 0; i < field.values.size(); ++i)
    out.values[i] = lo + (field.values[i] - mn) * scale;
  return out;
}

/// Edge indicator g = 1 / (1 + |grad(G_sigma * I)|^2), in (0, 1] and smallest
/// across intensity edges.
inline ScalarField edge_indicator(const ScalarField& image, const EdgeParams& params) {
  const ScalarField smoothed =
      params.normalize_input
          ? gaussian_smooth(rescale_affine(image, 0.0, 255.0), params.sigma)
          : gaussian_smooth(image, params.sigma);
  const ScalarField gm2 = gradient_magnitude_sq(smoothed);
  ScalarField g(image.shape);
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = 1.0 / (1.0 + gm2.values[i]);
  return g;
}

/// 1-D slice of the n-D heat kernel G_tau(x) = (4 pi tau)^(-n/2) exp(-|x|^2 / 4 tau).
/// The per-axis standard deviation is sqrt(2 tau); weights are truncated at
/// four standard deviations and renormalized to unit sum, so convolving a
/// constant field returns it unchanged.
inline KernelSpec make_heat_kernel(double tau) {
  if (!(tau > 0)) throw std::invalid_argument("make_heat_kernel: tau must be positive");
  auto [radius, w] = detail::sampled_gaussian(std::sqrt(2.0 * tau));
  KernelSpec spec;
  spec.tau = tau;
  spec.truncation_radius = radius;
  spec.weights = std::move(w);
  return spec;
}

/// Separable convolution with a heat kernel, reflected boundaries.
inline ScalarField heat_convolve(const ScalarField& field, const KernelSpec& kernel) {
  return detail::convolve_separable(field, kernel.weights, kernel.truncation_radius);
}

}  // namespace seg

#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "seg/filters.hpp"
#include "seg/grid.hpp"

namespace seg {

/// Iterative convolution-thresholding solver parameters. lambda weighs the
/// area term and carries its sign: positive shrinks the region, negative grows
/// it. The iteration stops once the number of flipped cells drops below tol,
/// so the default 1e-5 means "no flips".
struct IctmParams {
  double tau = 2.0;
  double lambda = 0.0;
  double tol = 1e-5;
  int max_iter = 5000;
  bool record_energy = true;  // one extra convolution per iteration

  void validate() const {
    if (!(tau > 0)) throw std::invalid_argument("ictm: tau must be positive");
    if (!(tol >= 0)) throw std::invalid_argument("ictm: tol must be non-negative");
    if (max_iter < 1) throw std::invalid_argument("ictm: max_iter must be at least 1");
  }
};

struct TraceRecord {
  int iteration = 0;
  double energy = 0.0;
  long flips = 0;
  double elapsed_s = 0.0;
};

/// Per-iteration energies, flipped-cell counts, and cumulative solver wall
/// time. Record 0 is the initial state.
using IterationTrace = std::vector<TraceRecord>;

struct SegmentationResult {
  BinaryMask mask;
  IterationTrace trace;
  bool converged = false;
  int iterations = 0;
};

using SnapshotCallback = std::function<void(int iteration, const BinaryMask&)>;

/// Pointwise square root; computed once per run and reused.
inline ScalarField sqrt_field(const ScalarField& g) {
  ScalarField out(g.shape);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    if (g.values[i] < 0)
      throw std::invalid_argument("sqrt_field: negative entry " + std::to_string(g.values[i]) +
                                  " at flat index " + std::to_string(i));
    out.values[i] = std::sqrt(g.values[i]);
  }
  return out;
}

/// Approximate geodesic active contour energy
///   sqrt(pi/tau) * sum_x [ sqrt(g) u (G_tau * (sqrt(g) (1-u))) + lambda g u ],
/// with the integral taken as a plain sum over unit cells.
inline double ictm_energy(const ScalarField& g_sqrt, const BinaryMask& u, const IctmParams& params) {
  require_same_shape(g_sqrt.shape, u.shape, "ictm_energy");
  params.validate();
  const KernelSpec kernel = make_heat_kernel(params.tau);
  ScalarField h(g_sqrt.shape);
  for (std::size_t i = 0; i < h.values.size(); ++i)
    h.values[i] = g_sqrt.values[i] * (1.0 - u.values[i]);
  const ScalarField conv = heat_convolve(h, kernel);
  double acc = 0.0;
  for (std::size_t i = 0; i < h.values.size(); ++i) {
    if (!u.values[i]) continue;
    const double s = g_sqrt.values[i];
    acc += s * conv.values[i] + params.lambda * s * s;
  }
  return std::sqrt(std::numbers::pi / params.tau) * acc;
}

/// Linearization of the energy at the current iterate:
///   phi(x) = sqrt(g) (G_tau * (sqrt(g) (1-2u)))(x) + lambda g(x).
/// The positive sqrt(pi/tau) prefactor is omitted; it never changes the sign.
inline ScalarField linearized_potential(const ScalarField& g, const ScalarField& g_sqrt,
                                        const BinaryMask& u, const IctmParams& params) {
  require_same_shape(g.shape, u.shape, "linearized_potential");
  require_same_shape(g.shape, g_sqrt.shape, "linearized_potential");
  params.validate();
  const KernelSpec kernel = make_heat_kernel(params.tau);
  ScalarField h(g.shape);
  for (std::size_t i = 0; i < h.values.size(); ++i)
    h.values[i] = g_sqrt.values[i] * (1.0 - 2.0 * u.values[i]);
  ScalarField phi = heat_convolve(h, kernel);
  for (std::size_t i = 0; i < phi.values.size(); ++i)
    phi.values[i] = g_sqrt.values[i] * phi.values[i] + params.lambda * g.values[i];
  return phi;
}

/// Pointwise minimizer of u * phi over u in {0,1}: u = 1 iff phi <= 0. Ties at
/// exactly zero assign foreground.
inline BinaryMask threshold(const ScalarField& phi) {
  BinaryMask u(phi.shape);
  for (std::size_t i = 0; i < phi.values.size(); ++i) u.values[i] = phi.values[i] <= 0.0 ? 1 : 0;
  return u;
}

/// Number of cells where the two masks differ, as a real measure (unit cell
/// volume).
inline double changed_measure(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a.shape, b.shape, "changed_measure");
  long n = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) n += a.values[i] != b.values[i];
  return static_cast<double>(n);
}

/// Alternates convolution and thresholding from the given initialization,
/// recording energy and flip counts each iteration, until fewer than tol cells
/// flip or max_iter is reached. The snapshot callback, when given, sees every
/// iterate right after thresholding.
inline SegmentationResult ictm_run(const ScalarField& g, const BinaryMask& init,
                                   const IctmParams& params,
                                   const SnapshotCallback& on_snapshot = {}) {
  require_same_shape(g.shape, init.shape, "ictm_run");
  params.validate();
  if (!all_finite(g)) throw std::invalid_argument("ictm_run: edge indicator has non-finite values");

  const ScalarField g_sqrt = sqrt_field(g);
  SegmentationResult result;
  result.mask = init;

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  result.trace.push_back(
      {0, params.record_energy ? ictm_energy(g_sqrt, result.mask, params) : 0.0, 0, elapsed()});

  for (int k = 1; k <= params.max_iter; ++k) {
    const ScalarField phi = linearized_potential(g, g_sqrt, result.mask, params);
    BinaryMask next = threshold(phi);
    const double changed = changed_measure(result.mask, next);
    result.mask = std::move(next);
    result.iterations = k;

    result.trace.push_back({k,
                            params.record_energy ? ictm_energy(g_sqrt, result.mask, params) : 0.0,
                            static_cast<long>(changed), elapsed()});
    if (on_snapshot) on_snapshot(k, result.mask);

    if (changed < params.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

/// True iff one more convolution-thresholding sweep leaves the mask unchanged.
inline bool fixed_point_check(const ScalarField& g, const BinaryMask& u, const IctmParams& params) {
  require_same_shape(g.shape, u.shape, "fixed_point_check");
  const ScalarField g_sqrt = sqrt_field(g);
  return threshold(linearized_potential(g, g_sqrt, u, params)) == u;
}

}  // namespace seg

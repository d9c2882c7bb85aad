#pragma once

// Arithmetic shared by per-triple scoring and batched candidate scoring.
// Both paths evaluate the same expressions in the same order, so a batched
// score is bitwise equal to the per-triple score of the same triple. The
// lane-wise versions used by the tile loops live in tile_scoring.inc.

#include <cstddef>
#include <span>

namespace kge::kernels {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

// x - (w.x) w
inline void project_hyperplane(std::span<const double> x, std::span<const double> w,
                               std::span<double> out) {
  const double s = dot(w, x);
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] - s * w[k];
}

// M x with M stored row-major as out.size() rows of x.size() columns.
inline void mat_vec(std::span<const double> m, std::span<const double> x, std::span<double> out) {
  const std::size_t cols = x.size();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = dot(m.subspan(k * cols, cols), x);
}

// (rp xp^T + I) x, with I the rectangular identity of shape d_r x d.
inline void project_transd(std::span<const double> x, std::span<const double> xp,
                           std::span<const double> rp, std::span<double> out) {
  const double s = dot(xp, x);
  const std::size_t d = x.size();
  for (std::size_t k = 0; k < rp.size(); ++k) out[k] = rp[k] * s + (k < d ? x[k] : 0.0);
}

// ComplEx: (a + ib)(c + id) split into real and imaginary parts.
inline double cmul_re(double a, double b, double c, double d) { return a * c - b * d; }
inline double cmul_im(double a, double b, double c, double d) { return a * d + b * c; }

}  // namespace kge::kernels

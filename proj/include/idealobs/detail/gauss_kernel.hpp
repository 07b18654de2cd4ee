#pragma once

#include <span>

namespace idealobs::detail {

// out[j*nx + i] += scale * exp(-dx^2 / (2 var_x) - dy^2 / (2 var_y)),
// with dx, dy measured from (cx, cy) to the pixel center.
void add_axis_aligned_gaussian(std::span<double> out, int nx, int ny, double cx, double cy, double var_x,
                               double var_y, double scale);

// out[j*nx + i] += scale * exp(-0.5 * d^T P d), P = [[pxx, pxy], [pxy, pyy]].
void add_gaussian(std::span<double> out, int nx, int ny, double cx, double cy, double pxx, double pxy, double pyy,
                  double scale);

}  // namespace idealobs::detail

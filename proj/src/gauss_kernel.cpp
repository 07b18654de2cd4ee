#include "idealobs/detail/gauss_kernel.hpp"

#include <cmath>
#include <vector>

namespace idealobs::detail {

void add_axis_aligned_gaussian(std::span<double> out, int nx, int ny, double cx, double cy, double var_x,
                               double var_y, double scale) {
  std::vector<double> ex(static_cast<std::size_t>(nx));
  std::vector<double> ey(static_cast<std::size_t>(ny));
  const double kx = -0.5 / var_x;
  const double ky = -0.5 / var_y;
  for (int i = 0; i < nx; ++i) {
    const double dx = i + 0.5 - cx;
    ex[i] = std::exp(kx * dx * dx);
  }
  for (int j = 0; j < ny; ++j) {
    const double dy = j + 0.5 - cy;
    ey[j] = scale * std::exp(ky * dy * dy);
  }
  double* row = out.data();
  for (int j = 0; j < ny; ++j, row += nx) {
    const double f = ey[j];
    for (int i = 0; i < nx; ++i) row[i] += f * ex[i];
  }
}

void add_gaussian(std::span<double> out, int nx, int ny, double cx, double cy, double pxx, double pxy, double pyy,
                  double scale) {
  std::vector<double> dxs(static_cast<std::size_t>(nx));
  std::vector<double> qx(static_cast<std::size_t>(nx));
  for (int i = 0; i < nx; ++i) {
    dxs[i] = i + 0.5 - cx;
    qx[i] = -0.5 * pxx * dxs[i] * dxs[i];
  }
  double* row = out.data();
  for (int j = 0; j < ny; ++j, row += nx) {
    const double dy = j + 0.5 - cy;
    const double cross = -pxy * dy;
    const double qy = -0.5 * pyy * dy * dy;
    for (int i = 0; i < nx; ++i) row[i] += scale * std::exp(qx[i] + cross * dxs[i] + qy);
  }
}

}  // namespace idealobs::detail

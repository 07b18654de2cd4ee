#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace idealobs {

/// Pixel grid over the continuous field of view [0, nx) x [0, ny).
/// Pixel (i, j) has its center at (i + 0.5, j + 0.5) and linear index j * nx + i.
struct Grid {
  int nx = 64;
  int ny = 64;

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  double area() const { return static_cast<double>(nx) * static_cast<double>(ny); }
  double x_center(int i) const { return i + 0.5; }
  double y_center(int j) const { return j + 0.5; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  bool contains(double x, double y) const { return x >= 0.0 && x < nx && y >= 0.0 && y < ny; }
  bool valid() const { return nx >= 1 && ny >= 1; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Measurement-space image: row-major pixels on a Grid, 64-bit in memory.
class Image {
 public:
  Image() : Image(Grid{}) {}
  explicit Image(Grid grid);
  Image(Grid grid, std::vector<double> pixels);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return pixels_.size(); }

  std::span<double> pixels() { return pixels_; }
  std::span<const double> pixels() const { return pixels_; }

  double& operator[](std::size_t m) { return pixels_[m]; }
  double operator[](std::size_t m) const { return pixels_[m]; }
  double& at(int i, int j) { return pixels_[grid_.index(i, j)]; }
  double at(int i, int j) const { return pixels_[grid_.index(i, j)]; }

  bool all_finite() const;

  Image& operator+=(const Image& other);
  Image& operator-=(const Image& other);
  Image& operator*=(double factor);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  Grid grid_;
  std::vector<double> pixels_;
};

Image operator+(Image lhs, const Image& rhs);
Image operator-(Image lhs, const Image& rhs);
Image operator*(double factor, Image img);

/// Throws Error(GridMismatch) when the two grids differ.
void require_same_grid(const Grid& a, const Grid& b, const char* context);

/// IOIMG1 format: "IOIMG1\n", then "nx ny\n" in ASCII, then nx*ny
/// little-endian IEEE-754 binary32 values in row-major order.
void image_write(const Image& img, const std::filesystem::path& path);
Image image_read(const std::filesystem::path& path);

/// Encodes exactly the bytes image_write would put on disk.
std::vector<unsigned char> encode_image(const Image& img);
Image decode_image(std::span<const unsigned char> bytes, const std::string& origin = "<memory>");

}  // namespace idealobs

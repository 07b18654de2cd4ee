#include "idealobs/image.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "idealobs/errors.hpp"

namespace idealobs {

namespace {

constexpr std::string_view kMagic = "IOIMG1\n";

void put_le32(std::vector<unsigned char>& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<unsigned char>((bits >> (8 * k)) & 0xffu));
}

float get_le32(const unsigned char* p) {
  std::uint32_t bits = 0;
  for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(p[k]) << (8 * k);
  return std::bit_cast<float>(bits);
}

}  // namespace

Image::Image(Grid grid) : grid_(grid), pixels_(grid.size(), 0.0) {
  if (!grid.valid()) throw Error(ErrorKind::InvalidArgument, "grid dimensions must be >= 1");
}

Image::Image(Grid grid, std::vector<double> pixels) : grid_(grid), pixels_(std::move(pixels)) {
  if (!grid.valid()) throw Error(ErrorKind::InvalidArgument, "grid dimensions must be >= 1");
  if (pixels_.size() != grid.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "image has " + std::to_string(pixels_.size()) + " pixels, grid needs " +
                    std::to_string(grid.size()));
  }
}

bool Image::all_finite() const {
  for (double v : pixels_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Image& Image::operator+=(const Image& other) {
  require_same_grid(grid_, other.grid_, "image addition");
  for (std::size_t m = 0; m < pixels_.size(); ++m) pixels_[m] += other.pixels_[m];
  return *this;
}

Image& Image::operator-=(const Image& other) {
  require_same_grid(grid_, other.grid_, "image subtraction");
  for (std::size_t m = 0; m < pixels_.size(); ++m) pixels_[m] -= other.pixels_[m];
  return *this;
}

Image& Image::operator*=(double factor) {
  for (double& v : pixels_) v *= factor;
  return *this;
}

Image operator+(Image lhs, const Image& rhs) { return lhs += rhs; }
Image operator-(Image lhs, const Image& rhs) { return lhs -= rhs; }
Image operator*(double factor, Image img) { return img *= factor; }

void require_same_grid(const Grid& a, const Grid& b, const char* context) {
  if (a != b) {
    throw Error(ErrorKind::GridMismatch, std::string(context) + ": grid " + std::to_string(a.nx) + "x" +
                                             std::to_string(a.ny) + " vs " + std::to_string(b.nx) + "x" +
                                             std::to_string(b.ny));
  }
}

std::vector<unsigned char> encode_image(const Image& img) {
  if (!img.all_finite()) throw Error(ErrorKind::NonFinite, "refusing to encode image with non-finite pixels");
  const std::string header = std::string(kMagic) + std::to_string(img.grid().nx) + " " +
                             std::to_string(img.grid().ny) + "\n";
  std::vector<unsigned char> out(header.begin(), header.end());
  out.reserve(header.size() + 4 * img.size());
  for (double v : img.pixels()) put_le32(out, static_cast<float>(v));
  return out;
}

Image decode_image(std::span<const unsigned char> bytes, const std::string& origin) {
  if (bytes.size() < kMagic.size() ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw Error(ErrorKind::BadMagic, origin + ": missing IOIMG1 magic");
  }
  std::size_t pos = kMagic.size();
  std::string dims;
  while (pos < bytes.size() && bytes[pos] != '\n' && dims.size() < 64) dims.push_back(static_cast<char>(bytes[pos++]));
  if (pos >= bytes.size() || bytes[pos] != '\n') throw Error(ErrorKind::BadHeader, origin + ": unterminated dimension line");
  ++pos;

  std::istringstream in(dims);
  long long nx = 0, ny = 0;
  std::string rest;
  if (!(in >> nx >> ny) || (in >> rest) || nx < 1 || ny < 1 || nx > (1 << 20) || ny > (1 << 20)) {
    throw Error(ErrorKind::BadHeader, origin + ": bad dimension line '" + dims + "'");
  }
  const Grid grid{static_cast<int>(nx), static_cast<int>(ny)};
  const std::size_t need = 4 * grid.size();
  const std::size_t have = bytes.size() - pos;
  if (have < need) {
    throw Error(ErrorKind::Truncated, origin + ": payload has " + std::to_string(have) + " bytes, header needs " +
                                          std::to_string(need));
  }
  if (have > need) throw Error(ErrorKind::BadHeader, origin + ": trailing bytes after payload");

  std::vector<double> pixels(grid.size());
  for (std::size_t m = 0; m < pixels.size(); ++m) {
    const float v = get_le32(bytes.data() + pos + 4 * m);
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, origin + ": non-finite pixel at index " + std::to_string(m));
    pixels[m] = v;
  }
  return Image(grid, std::move(pixels));
}

void image_write(const Image& img, const std::filesystem::path& path) {
  const auto bytes = encode_image(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

Image image_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_image(bytes, path.string());
}

}  // namespace idealobs

#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace priq {

/// Row-major grayscale image with intensities on the [0, 255] scale.
class ImageMatrix {
 public:
  ImageMatrix() = default;
  ImageMatrix(int width, int height, double fill = 0.0);
  ImageMatrix(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  /// Border-clamped access.
  double clamped(int x, int y) const;

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  friend bool operator==(const ImageMatrix&, const ImageMatrix&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// 2x2 box average followed by decimation; requires both dimensions >= 64.
ImageMatrix downsample2(const ImageMatrix& img);

/// Same kernel as downsample2 without the size guard; used for the deeper
/// levels of feature pyramids.
ImageMatrix halve(const ImageMatrix& img);

/// Separable filter with odd-length taps applied along rows then columns,
/// half-sample symmetric borders.
ImageMatrix filter_separable(const ImageMatrix& img, const std::vector<double>& taps);

/// Normalized sampled Gaussian of the given odd length.
std::vector<double> gaussian_window(int length, double sigma);

/// Separable Gaussian blur with reflected borders. sigma <= 0 returns a copy.
ImageMatrix gaussian_blur(const ImageMatrix& img, double sigma);

/// Round to nearest and clamp to [0, 255].
ImageMatrix quantize8(const ImageMatrix& img);

double mean_squared_error(const ImageMatrix& a, const ImageMatrix& b);

/// Binary 8-bit PGM (P5). Values are rounded and clamped on write.
ImageMatrix read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const ImageMatrix& img);

/// PNG input, converted to 8-bit luminance by libpng.
ImageMatrix read_png(const std::filesystem::path& path);

/// Dispatches on extension: .pgm or .png.
ImageMatrix read_image(const std::filesystem::path& path);

}  // namespace priq

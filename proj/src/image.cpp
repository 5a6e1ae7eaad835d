#include "priq/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "priq/error.hpp"

namespace priq {

ImageMatrix::ImageMatrix(int width, int height, double fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * height, fill) {
  if (width < 0 || height < 0) {
    throw Error(ErrorKind::kInvalidArgument, "negative image dimensions");
  }
}

ImageMatrix::ImageMatrix(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 0 || height < 0 ||
      data_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorKind::kInvalidArgument, "image data does not match dimensions");
  }
}

double ImageMatrix::clamped(int x, int y) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return at(x, y);
}

ImageMatrix halve(const ImageMatrix& img) {
  const int w = img.width() / 2;
  const int h = img.height() / 2;
  ImageMatrix out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double s = img.at(2 * x, 2 * y) + img.at(2 * x + 1, 2 * y) +
                       img.at(2 * x, 2 * y + 1) + img.at(2 * x + 1, 2 * y + 1);
      out.at(x, y) = 0.25 * s;
    }
  }
  return out;
}

ImageMatrix downsample2(const ImageMatrix& img) {
  if (img.width() < 64 || img.height() < 64) {
    throw Error(ErrorKind::kInvalidArgument,
                "downsample2 needs at least 64x64, got " + std::to_string(img.width()) +
                    "x" + std::to_string(img.height()));
  }
  return halve(img);
}

namespace {

int reflect(int i, int n) {
  // Half-sample symmetric extension: -1 -> 0, n -> n-1.
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - i - 1;
  }
  return i;
}

}  // namespace

ImageMatrix filter_separable(const ImageMatrix& img, const std::vector<double>& taps) {
  if (taps.size() % 2 != 1) {
    throw Error(ErrorKind::kInvalidArgument, "filter length must be odd");
  }
  const int radius = static_cast<int>(taps.size() / 2);
  const int w = img.width();
  const int h = img.height();

  ImageMatrix tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += taps[k + radius] * img.at(reflect(x + k, w), y);
      }
      tmp.at(x, y) = acc;
    }
  }
  ImageMatrix out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += taps[k + radius] * tmp.at(x, reflect(y + k, h));
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

std::vector<double> gaussian_window(int length, double sigma) {
  const int radius = length / 2;
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double v = std::exp(-0.5 * k * k / (sigma * sigma));
    taps[k + radius] = v;
    sum += v;
  }
  for (double& t : taps) t /= sum;
  return taps;
}

ImageMatrix gaussian_blur(const ImageMatrix& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  return filter_separable(img, gaussian_window(2 * radius + 1, sigma));
}

ImageMatrix quantize8(const ImageMatrix& img) {
  ImageMatrix out = img;
  for (double& v : out.data()) v = std::clamp(std::round(v), 0.0, 255.0);
  return out;
}

double mean_squared_error(const ImageMatrix& a, const ImageMatrix& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorKind::kInvalidArgument, "image dimension mismatch");
  }
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      std::string discard;
      std::getline(in, discard);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

}  // namespace

ImageMatrix read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingFile, "cannot open image " + path.string());
  if (pgm_token(in) != "P5") {
    throw Error(ErrorKind::kParse, path.string() + ": not a binary PGM (P5)");
  }
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(pgm_token(in));
    h = std::stoi(pgm_token(in));
    maxval = std::stoi(pgm_token(in));
  } catch (const std::exception&) {
    throw Error(ErrorKind::kParse, path.string() + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw Error(ErrorKind::kParse, path.string() + ": unsupported PGM geometry or depth");
  }
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw Error(ErrorKind::kParse, path.string() + ": truncated PGM payload");
  }
  std::vector<double> data(raw.size());
  const double scale = 255.0 / maxval;
  for (std::size_t i = 0; i < raw.size(); ++i) data[i] = raw[i] * scale;
  return ImageMatrix(w, h, std::move(data));
}

void write_pgm(const std::filesystem::path& path, const ImageMatrix& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<unsigned char> raw(img.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    raw[i] = static_cast<unsigned char>(std::clamp(std::round(img.data()[i]), 0.0, 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

ImageMatrix read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    const bool exists = std::filesystem::exists(path);
    throw Error(exists ? ErrorKind::kParse : ErrorKind::kMissingFile,
                path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<unsigned char> raw(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorKind::kParse, path.string() + ": " + image.message);
  }
  std::vector<double> data(raw.begin(), raw.end());
  return ImageMatrix(static_cast<int>(image.width), static_cast<int>(image.height),
                     std::move(data));
}

ImageMatrix read_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") return read_pgm(path);
  throw Error(ErrorKind::kParse, "unsupported image format: " + path.string());
}

}  // namespace priq

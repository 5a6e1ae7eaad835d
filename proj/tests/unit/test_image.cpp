#include <doctest.h>
#include <png.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "priq/error.hpp"
#include "priq/image.hpp"
#include "support.hpp"

using namespace priq;

TEST_SUITE("image") {

TEST_CASE("downsample2 averages 2x2 cells and guards small inputs") {
  ImageMatrix img(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) img.at(x, y) = x + 100.0 * y;
  const auto d = downsample2(img);
  CHECK(d.width() == 32);
  CHECK(d.height() == 32);
  CHECK(d.at(3, 5) == doctest::Approx((6 + 7 + 6 + 7) / 4.0 + 100.0 * (10 + 11) / 2.0));
  CHECK_THROWS_AS(downsample2(ImageMatrix(63, 64)), Error);
  CHECK(halve(ImageMatrix(20, 20, 3.0)) == ImageMatrix(10, 10, 3.0));
}

TEST_CASE("gaussian window is normalized and symmetric") {
  const auto w = gaussian_window(7, 7.0 / 6.0);
  REQUIRE(w.size() == 7);
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  for (int k = 0; k < 3; ++k) CHECK(w[k] == w[6 - k]);
  CHECK(w[3] > w[2]);
}

TEST_CASE("filtering keeps a constant image constant") {
  const ImageMatrix c(17, 9, 42.0);
  const auto f = filter_separable(c, gaussian_window(7, 1.5));
  for (double v : f.data()) CHECK(v == doctest::Approx(42.0).epsilon(1e-14));
  CHECK(gaussian_blur(c, 0.0) == c);
  CHECK_THROWS_AS(filter_separable(c, {0.5, 0.5}), Error);
}

TEST_CASE("quantize8 rounds and clamps") {
  ImageMatrix img(4, 1, std::vector<double>{-3.0, 1.4, 1.6, 300.0});
  const auto q = quantize8(img);
  CHECK(q.data() == std::vector<double>{0.0, 1.0, 2.0, 255.0});
}

TEST_CASE("mean squared error") {
  ImageMatrix a(2, 2, 1.0), b(2, 2, 3.0);
  CHECK(mean_squared_error(a, b) == 4.0);
  CHECK_THROWS_AS(mean_squared_error(a, ImageMatrix(3, 2)), Error);
}

TEST_CASE("PGM round trip and parse errors") {
  testing::TempDir dir;
  ImageMatrix img(5, 3);
  for (std::size_t k = 0; k < img.size(); ++k) img.data()[k] = static_cast<double>(k * 17 % 256);
  write_pgm(dir / "a.pgm", img);
  CHECK(read_image(dir / "a.pgm") == img);

  std::ofstream(dir / "bad.pgm") << "P2\n1 1\n255\n0\n";
  CHECK_THROWS_AS(read_pgm(dir / "bad.pgm"), Error);
  try {
    read_pgm(dir / "missing.pgm");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMissingFile);
  }
  CHECK_THROWS_AS(read_image(dir / "x.bmp"), Error);
}

TEST_CASE("PNG input is read as 8-bit gray") {
  testing::TempDir dir;
  const int w = 4, h = 2;
  std::vector<unsigned char> px(w * h);
  for (int k = 0; k < w * h; ++k) px[k] = static_cast<unsigned char>(k * 30);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = w;
  image.height = h;
  image.format = PNG_FORMAT_GRAY;
  const auto path = (dir / "g.png").string();
  REQUIRE(png_image_write_to_file(&image, path.c_str(), 0, px.data(), 0, nullptr));
  const auto img = read_image(path);
  REQUIRE(img.width() == w);
  REQUIRE(img.height() == h);
  for (int k = 0; k < w * h; ++k) CHECK(img.data()[k] == px[k]);
}

}

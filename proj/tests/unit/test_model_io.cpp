#include <doctest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "priq/error.hpp"
#include "priq/model_io.hpp"
#include "support.hpp"

using namespace priq;

namespace {

std::string bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("model_io") {

TEST_CASE("binary round trip preserves every field and prediction") {
  testing::TempDir dir;
  const auto& m = testing::small_model();
  save_model(dir / "m.priqm", m);
  const auto back = load_model(dir / "m.priqm");

  CHECK(back.theta == m.theta);
  CHECK(back.norm_mu == m.norm_mu);
  CHECK(back.norm_sd == m.norm_sd);
  CHECK(back.sv_rows == m.sv_rows);
  CHECK(back.sv_alpha == m.sv_alpha);
  CHECK(back.sv_labels == m.sv_labels);
  CHECK(back.train_features == m.train_features);
  CHECK(back.config == m.config);
  CHECK(back.bias == m.bias);

  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const auto x = testing::random_vector(rng);
    CHECK(decision_value(back, x) == decision_value(m, x));
  }

  save_model(dir / "again.priqm", back);
  CHECK(bytes(dir / "m.priqm") == bytes(dir / "again.priqm"));
  CHECK(file_hash(dir / "m.priqm") == file_hash(dir / "again.priqm"));
  CHECK(file_hash(dir / "m.priqm").size() == 16);
}

TEST_CASE("header layout") {
  testing::TempDir dir;
  const auto& m = testing::small_model();
  save_model(dir / "m.priqm", m);
  const auto b = bytes(dir / "m.priqm");
  REQUIRE(b.size() > 40);
  CHECK(b.substr(0, 6) == "PRIQM1");
  auto u32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int k = 3; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(b[off + k]);
    return v;
  };
  auto u64 = [&](std::size_t off) {
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) v = (v << 8) | static_cast<unsigned char>(b[off + k]);
    return v;
  };
  CHECK(u32(6) == kModelFormatVersion);
  CHECK(u64(10) == m.train_features.size());
  CHECK(u64(18) == m.sv_count());
  CHECK(u32(26) == kFeatureDim);
}

TEST_CASE("text export is lossless") {
  const auto& m = testing::small_model();
  const auto j = nlohmann::json::parse(model_to_text(m));
  REQUIRE(j.contains("theta"));
  const auto& th = j["theta"];
  REQUIRE(th.size() == kKernelCount);
  for (std::size_t k = 0; k < kKernelCount; ++k) {
    const double v = th[k].is_string() ? std::stod(th[k].get<std::string>()) : th[k].get<double>();
    CHECK(v == m.theta[k]);
  }
}

TEST_CASE("corrupt model files") {
  testing::TempDir dir;
  save_model(dir / "m.priqm", testing::small_model());
  auto b = bytes(dir / "m.priqm");

  auto expect_parse = [&](const std::string& content) {
    std::ofstream(dir / "x.priqm", std::ios::binary) << content;
    try {
      load_model(dir / "x.priqm");
      FAIL("expected parse error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kParse);
    }
  };
  expect_parse("PRIQM2" + b.substr(6));
  expect_parse(b.substr(0, b.size() / 2));
  auto version = b;
  version[6] = 9;
  expect_parse(version);
  try {
    load_model(dir / "none.priqm");
    FAIL("expected missing file");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMissingFile);
  }
}

}

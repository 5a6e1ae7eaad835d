#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "priq/corpus.hpp"
#include "priq/error.hpp"
#include "support.hpp"

using namespace priq;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected priq::Error");
  return ErrorKind::kIo;
}

void write_text(const std::filesystem::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes `rows` tiny images and a manifest referencing them.
std::filesystem::path six_row_manifest(const testing::TempDir& dir, const std::string& body) {
  for (int k = 0; k < 6; ++k) write_pgm(dir / ("i" + std::to_string(k) + ".pgm"), ImageMatrix(2, 2, k));
  write_text(dir / "m.csv", "id,path,group_id,distortion_tag,level,score,polarity\n" + body);
  write_text(dir / "m.meta.json", R"({"name": "six", "score_min": 0, "score_max": 100})");
  return dir / "m.csv";
}

const char* kSixRows =
    "0,i0.pgm,0,ref,0,0,DMOS\n"
    "1,i1.pgm,0,wn,1,30,DMOS\n"
    "2,i2.pgm,0,wn,2,60,DMOS\n"
    "3,i3.pgm,1,ref,0,0,DMOS\n"
    "4,i4.pgm,1,wn,1,35,DMOS\n"
    "5,i5.pgm,1,wn,2,70,DMOS\n";

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("well-formed manifest loads with resolved paths") {
  testing::TempDir dir;
  const auto m = load_manifest(six_row_manifest(dir, kSixRows));
  CHECK(m.size() == 6);
  CHECK(m.name == "six");
  CHECK(m.group_count() == 2);
  CHECK(m.polarity() == Polarity::kDmos);
  CHECK(std::filesystem::exists(m.images[4].path));
  CHECK(m.images[5].score == 70.0);
}

TEST_CASE("manifest invariant violations") {
  testing::TempDir dir;
  std::string mixed = kSixRows;
  mixed.replace(mixed.rfind("DMOS"), 4, "MOS");
  CHECK(kind_of([&] { load_manifest(six_row_manifest(dir, mixed)); }) == ErrorKind::kInvariant);

  std::string missing = kSixRows;
  missing.replace(missing.find("i2.pgm"), 6, "zz.pgm");
  CHECK(kind_of([&] { load_manifest(six_row_manifest(dir, missing)); }) == ErrorKind::kMissingFile);

  std::string dup = kSixRows;
  dup.replace(dup.find("1,i1"), 1, "0");
  CHECK(kind_of([&] { load_manifest(six_row_manifest(dir, dup)); }) == ErrorKind::kInvariant);

  std::string out_of_range = kSixRows;
  out_of_range.replace(out_of_range.find(",70,"), 4, ",170,");
  CHECK(kind_of([&] { load_manifest(six_row_manifest(dir, out_of_range)); }) == ErrorKind::kInvariant);

  std::string ref_level = kSixRows;
  ref_level.replace(ref_level.find("ref,0"), 5, "ref,1");
  CHECK(kind_of([&] { load_manifest(six_row_manifest(dir, ref_level)); }) == ErrorKind::kInvariant);

  const std::string gap =
      "0,i0.pgm,0,ref,0,0,DMOS\n1,i1.pgm,0,wn,1,30,DMOS\n2,i2.pgm,0,wn,2,60,DMOS\n"
      "3,i3.pgm,2,ref,0,0,DMOS\n4,i4.pgm,2,wn,1,35,DMOS\n5,i5.pgm,2,wn,2,70,DMOS\n";
  CHECK(kind_of([&] { load_manifest(six_row_manifest(dir, gap)); }) == ErrorKind::kInvariant);

  CHECK(kind_of([&] { load_manifest(six_row_manifest(dir, "0,i0.pgm,0,ref\n")); }) == ErrorKind::kParse);
  CHECK(kind_of([&] { load_manifest(dir / "nope.csv"); }) == ErrorKind::kMissingFile);
}

TEST_CASE("make_manifest renumbers groups and save/load round-trips") {
  testing::TempDir dir;
  std::vector<ScoredImage> rows;
  for (int k = 0; k < 4; ++k) {
    write_pgm(dir / ("p" + std::to_string(k) + ".pgm"), ImageMatrix(2, 2));
    rows.push_back({k, dir / ("p" + std::to_string(k) + ".pgm"), k < 2 ? 7 : 3, k % 2 ? "wn" : "ref",
                    k % 2, 1.25 * k, Polarity::kMos});
  }
  const auto m = make_manifest("rt", 0.0, 10.0, rows);
  CHECK(m.images[0].group_id == 0);
  CHECK(m.images[3].group_id == 1);
  save_manifest(m, dir / "rt.csv");
  const auto back = load_manifest(dir / "rt.csv");
  REQUIRE(back.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(back.images[k].id == m.images[k].id);
    CHECK(back.images[k].score == m.images[k].score);
    CHECK(back.images[k].group_id == m.images[k].group_id);
    CHECK(std::filesystem::equivalent(back.images[k].path, m.images[k].path));
  }
  CHECK(back.polarity() == Polarity::kMos);
  CHECK(back.score_max == 10.0);
}

TEST_CASE("synthetic score closed form") {
  const ImageMatrix ref(8, 8, 100.0);
  CHECK(synthetic_score(ref, ref) == 0.0);
  CHECK(synthetic_score_from_mse(2000.0) == doctest::Approx(100.0).epsilon(1e-15));
  CHECK(synthetic_score_from_mse(1e6) == 100.0);
  const double s100 = 100.0 * std::log(101.0) / std::log(2001.0);
  const double s400 = 100.0 * std::log(401.0) / std::log(2001.0);
  CHECK(synthetic_score_from_mse(100.0) == doctest::Approx(s100).epsilon(1e-14));
  CHECK(synthetic_score_from_mse(100.0) < synthetic_score_from_mse(400.0));
  CHECK(synthetic_score(ref, ImageMatrix(8, 8, 110.0)) == doctest::Approx(s100).epsilon(1e-14));
  CHECK_THROWS_AS(synthetic_score(ref, ImageMatrix(4, 4)), Error);
}

TEST_CASE("synthetic corpus shape, determinism and monotone scores") {
  testing::TempDir a, b;
  SynthConfig cfg;
  cfg.width = cfg.height = 64;
  cfg.out_dir = a.path();
  const auto m1 = synth_corpus(cfg, 5);
  cfg.out_dir = b.path();
  const auto m2 = synth_corpus(cfg, 5);

  CHECK(m1.size() == 252);
  CHECK(m1.group_count() == 12);
  for (std::size_t k = 0; k < m1.size(); ++k) {
    CHECK(m1.images[k].score == m2.images[k].score);
    CHECK(read_all(m1.images[k].path) == read_all(m2.images[k].path));
    if (m1.images[k].distortion_tag == "ref") CHECK(m1.images[k].score == 0.0);
  }

  std::map<std::pair<int, std::string>, std::map<int, double>> fam;
  for (const auto& im : m1.images) fam[{im.group_id, im.distortion_tag}][im.level] = im.score;
  for (const auto& [key, levels] : fam) {
    double prev = -1.0;
    for (const auto& [lvl, s] : levels) {
      CHECK(s >= prev);
      CHECK(s >= 0.0);
      CHECK(s <= 100.0);
      prev = s;
    }
  }

  const auto reloaded = load_manifest(a / "synthetic.csv");
  CHECK(reloaded.size() == 252);

  cfg.width = 32;
  CHECK_THROWS_AS(synth_corpus(cfg, 5), Error);
  cfg.width = 64;
  cfg.distortions = {"jp2k"};
  CHECK_THROWS_AS(synth_corpus(cfg, 5), Error);
}

TEST_CASE("group split keeps groups whole") {
  const auto& m = testing::small_corpus().manifest;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = split_by_group(m, 4, seed);
    std::set<int> tr, te;
    for (const auto& im : s.train.images) tr.insert(im.group_id);
    for (const auto& im : s.test.images) te.insert(im.group_id);
    CHECK(tr.size() == 4);
    CHECK(te.size() == 2);
    for (int g : tr) CHECK(te.count(g) == 0);
    CHECK(s.train.size() + s.test.size() == m.size());
  }
  const auto a = split_by_group(m, 3, 9);
  const auto b = split_by_group(m, 3, 9);
  for (std::size_t k = 0; k < a.train.size(); ++k) CHECK(a.train.images[k].id == b.train.images[k].id);
  CHECK_THROWS_AS(split_by_group(m, 6, 1), Error);
  CHECK_THROWS_AS(split_by_group(m, 0, 1), Error);
}

TEST_CASE("LIVE-like split size") {
  // 29 groups totalling 808 images; 20 train groups hold about 808*20/29.
  std::vector<ScoredImage> rows;
  std::int64_t id = 0;
  for (int g = 0; g < 29; ++g) {
    const int n = g < 25 ? 28 : 27;
    for (int k = 0; k < n; ++k) {
      rows.push_back({id++, "x.pgm", g, k == 0 ? "ref" : "jpeg", k == 0 ? 0 : 1, 50.0, Polarity::kDmos});
    }
  }
  REQUIRE(rows.size() == 808);
  const auto m = make_manifest("live", 0.0, 100.0, rows);
  const auto s = split_by_group(m, 20, 3);
  CHECK(std::abs(static_cast<double>(s.train.size()) - std::floor(808.0 * 20 / 29)) <= 4.0);
}

}

#include "priq/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "priq/error.hpp"

namespace priq {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Polarity p) { return p == Polarity::kMos ? "MOS" : "DMOS"; }

Polarity parse_polarity(const std::string& text) {
  if (text == "MOS" || text == "mos") return Polarity::kMos;
  if (text == "DMOS" || text == "dmos") return Polarity::kDmos;
  throw Error(ErrorKind::kParse, "unknown polarity '" + text + "'");
}

Polarity Manifest::polarity() const {
  return images.empty() ? Polarity::kDmos : images.front().polarity;
}

int Manifest::group_count() const {
  std::set<int> groups;
  for (const auto& im : images) groups.insert(im.group_id);
  return static_cast<int>(groups.size());
}

std::vector<double> Manifest::scores() const {
  std::vector<double> out;
  out.reserve(images.size());
  for (const auto& im : images) out.push_back(im.score);
  return out;
}

void validate_manifest(const Manifest& m, bool check_files) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::kInvariant, "manifest '" + m.name + "': " + what);
  };
  if (!(m.score_min <= m.score_max)) fail("score_min exceeds score_max");
  std::unordered_set<std::int64_t> ids;
  std::set<int> groups;
  for (const auto& im : m.images) {
    if (!ids.insert(im.id).second) fail("duplicate id " + std::to_string(im.id));
    if (im.polarity != m.images.front().polarity) fail("mixed MOS/DMOS polarity");
    if (!(im.score >= m.score_min && im.score <= m.score_max)) {
      fail("score of id " + std::to_string(im.id) + " outside declared range");
    }
    if (im.level < 0) fail("negative level for id " + std::to_string(im.id));
    if ((im.level == 0) != (im.distortion_tag == "ref")) {
      fail("level 0 must coincide with tag 'ref' (id " + std::to_string(im.id) + ")");
    }
    groups.insert(im.group_id);
  }
  if (!groups.empty() &&
      (*groups.begin() != 0 || *groups.rbegin() != static_cast<int>(groups.size()) - 1)) {
    fail("group ids are not a contiguous 0-based set");
  }
  if (check_files) {
    for (const auto& im : m.images) {
      if (!fs::exists(im.path)) {
        throw Error(ErrorKind::kMissingFile, "manifest '" + m.name + "': image not found: " +
                                                 im.path.string());
      }
    }
  }
}

Manifest make_manifest(std::string name, double score_min, double score_max,
                       std::vector<ScoredImage> images) {
  std::map<int, int> remap;
  for (auto& im : images) {
    auto [it, inserted] = remap.try_emplace(im.group_id, static_cast<int>(remap.size()));
    im.group_id = it->second;
  }
  Manifest m{std::move(name), score_min, score_max, std::move(images)};
  validate_manifest(m, false);
  return m;
}

namespace {

fs::path meta_path_for(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

template <typename T>
T parse_number(const std::string& text, const std::string& where) {
  T value{};
  std::istringstream ss(text);
  ss >> value;
  if (ss.fail() || !ss.eof()) {
    throw Error(ErrorKind::kParse, where + ": cannot parse '" + text + "'");
  }
  return value;
}

}  // namespace

Manifest load_manifest(const fs::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw Error(ErrorKind::kMissingFile, "manifest not found: " + csv_path.string());

  Manifest m;
  m.name = csv_path.stem().string();
  const fs::path meta_path = meta_path_for(csv_path);
  if (std::ifstream meta_in{meta_path}) {
    try {
      const json meta = json::parse(meta_in);
      m.name = meta.at("name").get<std::string>();
      m.score_min = meta.at("score_min").get<double>();
      m.score_max = meta.at("score_max").get<double>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse, meta_path.string() + ": " + e.what());
    }
  } else {
    throw Error(ErrorKind::kMissingFile, "manifest sidecar not found: " + meta_path.string());
  }

  const fs::path base = csv_path.parent_path();
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kParse, csv_path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "id,path,group_id,distortion_tag,level,score,polarity") {
    throw Error(ErrorKind::kParse, csv_path.string() + ": unexpected header '" + line + "'");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    const std::string where = csv_path.string() + ":" + std::to_string(line_no);
    if (f.size() != 7) {
      throw Error(ErrorKind::kParse, where + ": expected 7 fields, got " + std::to_string(f.size()));
    }
    ScoredImage im;
    im.id = parse_number<std::int64_t>(f[0], where);
    im.path = fs::path(f[1]).is_absolute() ? fs::path(f[1]) : base / f[1];
    im.group_id = parse_number<int>(f[2], where);
    im.distortion_tag = f[3];
    im.level = parse_number<int>(f[4], where);
    im.score = parse_number<double>(f[5], where);
    im.polarity = parse_polarity(f[6]);
    m.images.push_back(std::move(im));
  }
  validate_manifest(m, true);
  return m;
}

void save_manifest(const Manifest& m, const fs::path& csv_path) {
  const fs::path base = csv_path.parent_path();
  std::ofstream out(csv_path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + csv_path.string());
  out << "id,path,group_id,distortion_tag,level,score,polarity\n";
  out.precision(17);
  for (const auto& im : m.images) {
    fs::path p = im.path;
    if (!base.empty()) {
      std::error_code ec;
      const fs::path rel = fs::relative(im.path, base, ec);
      if (!ec && !rel.empty()) p = rel;
    }
    out << im.id << ',' << p.generic_string() << ',' << im.group_id << ','
        << im.distortion_tag << ',' << im.level << ',' << im.score << ','
        << to_string(im.polarity) << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "short write to " + csv_path.string());

  json meta{{"name", m.name}, {"score_min", m.score_min}, {"score_max", m.score_max}};
  std::ofstream meta_out(meta_path_for(csv_path));
  if (!meta_out) throw Error(ErrorKind::kIo, "cannot write sidecar for " + csv_path.string());
  meta_out << meta.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

double synthetic_score_from_mse(double mse, double mse_cap) {
  return 100.0 * std::min(1.0, std::log1p(mse) / std::log1p(mse_cap));
}

double synthetic_score(const ImageMatrix& reference, const ImageMatrix& distorted,
                       double mse_cap) {
  return synthetic_score_from_mse(mean_squared_error(reference, distorted), mse_cap);
}

namespace {

std::vector<double> normal_field(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(w) * h);
  for (double& x : v) x = n01(rng);
  return v;
}

void normalize_std(ImageMatrix& img, double target_std) {
  double mean = 0.0;
  for (double v : img.data()) mean += v;
  mean /= static_cast<double>(img.size());
  double var = 0.0;
  for (double v : img.data()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(img.size());
  const double s = var > 0.0 ? target_std / std::sqrt(var) : 0.0;
  for (double& v : img.data()) v = (v - mean) * s;
}

// JPEG luminance quantization table (row-major, 8x8).
constexpr int kJpegLuma[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

struct Dct8 {
  double basis[8][8];  // basis[u][x]
  Dct8() {
    for (int u = 0; u < 8; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) {
        basis[u][x] = a * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
      }
    }
  }
};

ImageMatrix block_dct_quantize(const ImageMatrix& img, double scale) {
  static const Dct8 dct;
  ImageMatrix out = img;
  const int w = img.width();
  const int h = img.height();
  double block[8][8], coef[8][8], tmp[8][8];
  for (int by = 0; by < h; by += 8) {
    for (int bx = 0; bx < w; bx += 8) {
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) block[y][x] = img.clamped(bx + x, by + y) - 128.0;
      // rows then columns
      for (int y = 0; y < 8; ++y)
        for (int u = 0; u < 8; ++u) {
          double s = 0.0;
          for (int x = 0; x < 8; ++x) s += dct.basis[u][x] * block[y][x];
          tmp[y][u] = s;
        }
      for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) {
          double s = 0.0;
          for (int y = 0; y < 8; ++y) s += dct.basis[v][y] * tmp[y][u];
          coef[v][u] = s;
        }
      for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) {
          const double step = std::max(1.0, kJpegLuma[v * 8 + u] * scale);
          coef[v][u] = step * std::round(coef[v][u] / step);
        }
      for (int v = 0; v < 8; ++v)
        for (int x = 0; x < 8; ++x) {
          double s = 0.0;
          for (int u = 0; u < 8; ++u) s += dct.basis[u][x] * coef[v][u];
          tmp[v][x] = s;
        }
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          double s = 0.0;
          for (int v = 0; v < 8; ++v) s += dct.basis[v][y] * tmp[v][x];
          if (bx + x < w && by + y < h) out.at(bx + x, by + y) = s + 128.0;
        }
    }
  }
  return out;
}

}  // namespace

ImageMatrix make_reference(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ImageMatrix fine(width, height, normal_field(width, height, seed));
  ImageMatrix coarse = fine;
  fine = gaussian_blur(fine, 1.2);
  coarse = gaussian_blur(coarse, 5.0);
  normalize_std(fine, 1.0);
  normalize_std(coarse, 1.0);

  const double fine_amp = 14.0 + 8.0 * unit(rng);
  const double coarse_amp = 22.0 + 10.0 * unit(rng);
  const double angle = 2.0 * std::numbers::pi * unit(rng);
  const double grad_amp = 30.0 + 30.0 * unit(rng);
  const double gx = std::cos(angle) / width;
  const double gy = std::sin(angle) / height;

  ImageMatrix img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      img.at(x, y) = 128.0 + fine_amp * fine.at(x, y) + coarse_amp * coarse.at(x, y) +
                     grad_amp * ((x - 0.5 * width) * gx + (y - 0.5 * height) * gy);
    }
  }

  // Hard-edged rectangles and discs.
  const int n_shapes = 3 + static_cast<int>(unit(rng) * 3.0);
  for (int s = 0; s < n_shapes; ++s) {
    const double cx = unit(rng) * width;
    const double cy = unit(rng) * height;
    const double rx = (0.08 + 0.2 * unit(rng)) * width;
    const double ry = (0.08 + 0.2 * unit(rng)) * height;
    const double offset = (unit(rng) < 0.5 ? -1.0 : 1.0) * (25.0 + 30.0 * unit(rng));
    const bool disc = unit(rng) < 0.5;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double dx = (x - cx) / rx;
        const double dy = (y - cy) / ry;
        const bool inside = disc ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (inside) img.at(x, y) += offset;
      }
    }
  }
  for (double& v : img.data()) v = std::clamp(v, 10.0, 245.0);
  return quantize8(img);
}

ImageMatrix apply_distortion(const ImageMatrix& reference, const std::string& tag, int level,
                             int levels, std::uint64_t seed) {
  if (level < 0 || level > levels) {
    throw Error(ErrorKind::kInvalidArgument, "distortion level out of range");
  }
  if (level == 0) return reference;
  const double t = static_cast<double>(level) / levels;

  if (tag == "wn") {
    // One noise field per family, scaled by level, so strength is monotone.
    const auto noise = normal_field(reference.width(), reference.height(), seed);
    const double sigma = 30.0 * t;
    ImageMatrix out = reference;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += sigma * noise[i];
    return quantize8(out);
  }
  if (tag == "gblur") {
    return quantize8(gaussian_blur(reference, 0.4 + 2.6 * t));
  }
  if (tag == "jpegq") {
    // Quantizer scale doubles per level: 1, 2, 4, 8, 16 times the JPEG luma table.
    const double scale = levels == 1 ? 1.0 : 1.0 * std::pow(16.0, (level - 1.0) / (levels - 1.0));
    return quantize8(block_dct_quantize(reference, scale));
  }
  if (tag == "contrast") {
    double mean = 0.0;
    for (double v : reference.data()) mean += v;
    mean /= static_cast<double>(reference.size());
    const double c = 1.0 - 0.75 * t;
    ImageMatrix out = reference;
    for (double& v : out.data()) v = mean + c * (v - mean);
    return quantize8(out);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown distortion tag '" + tag + "'");
}

Manifest synth_corpus(const SynthConfig& config, std::uint64_t seed) {
  if (config.n_refs < 2) throw Error(ErrorKind::kInvalidArgument, "n_refs must be >= 2");
  if (config.levels < 1) throw Error(ErrorKind::kInvalidArgument, "levels must be >= 1");
  if (config.width < 64 || config.height < 64) {
    throw Error(ErrorKind::kInvalidArgument, "synthetic images must be at least 64x64");
  }
  for (const auto& tag : config.distortions) {
    if (tag != "wn" && tag != "gblur" && tag != "jpegq" && tag != "contrast") {
      throw Error(ErrorKind::kInvalidArgument, "unknown distortion tag '" + tag + "'");
    }
  }

  std::error_code ec;
  const fs::path image_dir = config.out_dir / "images";
  fs::create_directories(image_dir, ec);
  if (ec || !fs::is_directory(image_dir)) {
    throw Error(ErrorKind::kIo, "cannot create output directory " + image_dir.string());
  }

  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 master(seq);

  std::vector<ScoredImage> images;
  std::int64_t next_id = 0;
  for (int r = 0; r < config.n_refs; ++r) {
    const std::uint64_t ref_seed = master();
    const ImageMatrix ref = make_reference(config.width, config.height, ref_seed);

    auto emit = [&](const ImageMatrix& img, const std::string& tag, int level) {
      char name[64];
      std::snprintf(name, sizeof name, "g%03d_%s_%d.pgm", r, tag.c_str(), level);
      const fs::path path = image_dir / name;
      write_pgm(path, img);
      ScoredImage im;
      im.id = next_id++;
      im.path = path;
      im.group_id = r;
      im.distortion_tag = tag;
      im.level = level;
      im.score = synthetic_score(ref, img, config.mse_cap);
      im.polarity = Polarity::kDmos;
      images.push_back(std::move(im));
    };

    emit(ref, "ref", 0);
    for (const auto& tag : config.distortions) {
      const std::uint64_t family_seed = master();
      for (int level = 1; level <= config.levels; ++level) {
        emit(apply_distortion(ref, tag, level, config.levels, family_seed), tag, level);
      }
    }
  }

  Manifest m = make_manifest(config.name, 0.0, 100.0, std::move(images));
  save_manifest(m, config.out_dir / (config.name + ".csv"));
  return m;
}

// ---------------------------------------------------------------------------

Split split_by_group(const Manifest& manifest, int n_train_groups, std::uint64_t seed) {
  std::vector<int> groups;
  {
    std::set<int> seen;
    for (const auto& im : manifest.images) seen.insert(im.group_id);
    groups.assign(seen.begin(), seen.end());
  }
  if (n_train_groups < 1 || n_train_groups >= static_cast<int>(groups.size())) {
    throw Error(ErrorKind::kInvalidArgument,
                "n_train_groups must lie in [1, " + std::to_string(groups.size() - 1) + "], got " +
                    std::to_string(n_train_groups));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(groups.begin(), groups.end(), rng);
  const std::set<int> train_groups(groups.begin(), groups.begin() + n_train_groups);

  Split s;
  for (Manifest* side : {&s.train, &s.test}) {
    side->name = manifest.name;
    side->score_min = manifest.score_min;
    side->score_max = manifest.score_max;
  }
  for (const auto& im : manifest.images) {
    (train_groups.count(im.group_id) ? s.train : s.test).images.push_back(im);
  }
  return s;
}

}  // namespace priq

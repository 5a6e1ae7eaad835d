#include "priq/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>

#include "le_io.hpp"
#include "priq/error.hpp"

namespace priq {

// ---------------------------------------------------------------------------
// Moment-ratio inversion

double ggd_moment_ratio(double shape) {
  const double l2 = std::lgamma(2.0 / shape);
  const double l1 = std::lgamma(1.0 / shape);
  const double l3 = std::lgamma(3.0 / shape);
  return std::exp(2.0 * l2 - l1 - l3);
}

namespace {

struct RatioTable {
  static constexpr int kSize = 2048;
  std::array<double, kSize> shape{};
  std::array<double, kSize> ratio{};
  RatioTable() {
    const double lo = std::log(kMinShape);
    const double hi = std::log(kMaxShape);
    for (int i = 0; i < kSize; ++i) {
      shape[i] = std::exp(lo + (hi - lo) * i / (kSize - 1));
      ratio[i] = ggd_moment_ratio(shape[i]);
    }
  }
};

const RatioTable& ratio_table() {
  static const RatioTable table;
  return table;
}

}  // namespace

double invert_moment_ratio(double ratio) {
  const auto& t = ratio_table();
  if (!(ratio > t.ratio.front())) return kMinShape;
  if (ratio >= t.ratio.back()) return kMaxShape;
  const auto it = std::upper_bound(t.ratio.begin(), t.ratio.end(), ratio);
  const auto hi_idx = static_cast<std::size_t>(it - t.ratio.begin());
  double lo = t.shape[hi_idx - 1];
  double hi = t.shape[hi_idx];
  for (int iter = 0; iter < 40; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (ggd_moment_ratio(mid) < ratio) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::clamp(0.5 * (lo + hi), kMinShape, kMaxShape);
}

namespace detail {

namespace {
bool all_equal(std::span<const double> v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}
}  // namespace

GgdFit ggd_moments(std::span<const double> samples) {
  if (samples.empty() || all_equal(samples)) return {kMaxShape, 0.0};
  double abs_sum = 0.0, sq_sum = 0.0;
  for (double x : samples) {
    abs_sum += std::abs(x);
    sq_sum += x * x;
  }
  const double n = static_cast<double>(samples.size());
  const double mean_abs = abs_sum / n;
  const double mean_sq = sq_sum / n;
  return {invert_moment_ratio(mean_abs * mean_abs / mean_sq), std::sqrt(mean_sq)};
}

AggdFit aggd_moments(std::span<const double> samples) {
  if (samples.empty() || all_equal(samples)) return {kMaxShape, 0.0, 0.0, 0.0};
  double left_sq = 0.0, right_sq = 0.0, abs_sum = 0.0, sq_sum = 0.0;
  std::size_t n_left = 0, n_right = 0;
  for (double x : samples) {
    if (x < 0.0) {
      left_sq += x * x;
      ++n_left;
    } else if (x > 0.0) {
      right_sq += x * x;
      ++n_right;
    }
    abs_sum += std::abs(x);
    sq_sum += x * x;
  }
  const double n = static_cast<double>(samples.size());
  const double sigma_l = n_left ? std::sqrt(left_sq / n_left) : 0.0;
  const double sigma_r = n_right ? std::sqrt(right_sq / n_right) : 0.0;
  const double mean_abs = abs_sum / n;
  const double r_hat = mean_abs * mean_abs / (sq_sum / n);

  // One-sided data takes the limit of the correction factor, which is 1.
  double correction = 1.0;
  if (sigma_l > 0.0 && sigma_r > 0.0) {
    const double g = sigma_l / sigma_r;
    correction = (g * g * g + 1.0) * (g + 1.0) / ((g * g + 1.0) * (g * g + 1.0));
  }
  const double shape = invert_moment_ratio(r_hat * correction);

  const double l1 = std::lgamma(1.0 / shape);
  const double l2 = std::lgamma(2.0 / shape);
  const double l3 = std::lgamma(3.0 / shape);
  const double spread = std::exp(0.5 * (l1 - l3));  // sqrt(G(1/a) / G(3/a))
  const double mean = (sigma_r - sigma_l) * spread * std::exp(l2 - l1);
  return {shape, mean, sigma_l, sigma_r};
}

}  // namespace detail

namespace {
void require_samples(std::span<const double> samples) {
  if (samples.size() < 64) {
    throw Error(ErrorKind::kInvalidArgument,
                "distribution fit needs at least 64 samples, got " +
                    std::to_string(samples.size()));
  }
}
}  // namespace

GgdFit fit_ggd(std::span<const double> samples) {
  require_samples(samples);
  return detail::ggd_moments(samples);
}

AggdFit fit_aggd(std::span<const double> samples) {
  require_samples(samples);
  return detail::aggd_moments(samples);
}

// ---------------------------------------------------------------------------
// Spatial (MSCN) statistics

namespace {

void require_min_size(const ImageMatrix& img, const char* what) {
  if (img.width() < 64 || img.height() < 64) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string(what) + " needs at least 64x64, got " + std::to_string(img.width()) +
                    "x" + std::to_string(img.height()));
  }
}

}  // namespace

ImageMatrix mscn(const ImageMatrix& img) {
  static const std::vector<double> window = gaussian_window(7, 7.0 / 6.0);
  const ImageMatrix mu = filter_separable(img, window);
  ImageMatrix sq = img;
  for (double& v : sq.data()) v *= v;
  const ImageMatrix mu_sq = filter_separable(sq, window);

  ImageMatrix out(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double m = mu.data()[i];
    const double var = std::max(0.0, mu_sq.data()[i] - m * m);
    out.data()[i] = (img.data()[i] - m) / (std::sqrt(var) + 1.0);
  }
  return out;
}

namespace {

std::array<double, 18> spatial_scale_features(const ImageMatrix& img) {
  const ImageMatrix m = mscn(img);
  std::array<double, 18> f{};
  const GgdFit g = detail::ggd_moments(m.data());
  f[0] = g.shape;
  f[1] = g.sigma * g.sigma;

  const int w = m.width();
  const int h = m.height();
  // (dx, dy) neighbour offsets: horizontal, vertical, main and anti diagonal.
  constexpr int kShifts[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  std::vector<double> prod;
  prod.reserve(m.size());
  for (int s = 0; s < 4; ++s) {
    const int dx = kShifts[s][0];
    const int dy = kShifts[s][1];
    prod.clear();
    for (int y = std::max(0, -dy); y < h - std::max(0, dy); ++y) {
      for (int x = 0; x < w - dx; ++x) prod.push_back(m.at(x, y) * m.at(x + dx, y + dy));
    }
    const AggdFit a = detail::aggd_moments(prod);
    f[2 + 4 * s] = a.shape;
    f[3 + 4 * s] = a.mean;
    f[4 + 4 * s] = a.sigma_left * a.sigma_left;
    f[5 + 4 * s] = a.sigma_right * a.sigma_right;
  }
  return f;
}

}  // namespace

std::array<double, 36> spatial_features(const ImageMatrix& img) {
  require_min_size(img, "spatial_features");
  std::array<double, 36> out{};
  const auto s1 = spatial_scale_features(img);
  const auto s2 = spatial_scale_features(downsample2(img));
  std::copy(s1.begin(), s1.end(), out.begin());
  std::copy(s2.begin(), s2.end(), out.begin() + 18);
  return out;
}

// ---------------------------------------------------------------------------
// Block DCT statistics

namespace {

constexpr int kBlock = 5;

struct BlockDct {
  double basis[kBlock][kBlock];  // basis[u][x]
  // AC coefficient partitions, as flat indices v * kBlock + u.
  std::vector<int> ac;
  std::array<std::vector<int>, 3> bands;
  std::array<std::vector<int>, 3> orientations;

  BlockDct() {
    for (int u = 0; u < kBlock; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
      for (int x = 0; x < kBlock; ++x) {
        basis[u][x] = a * std::cos((2 * x + 1) * u * std::numbers::pi / (2.0 * kBlock));
      }
    }
    for (int v = 0; v < kBlock; ++v) {
      for (int u = 0; u < kBlock; ++u) {
        if (u == 0 && v == 0) continue;
        const int idx = v * kBlock + u;
        ac.push_back(idx);
        const int radius = u + v;
        bands[radius <= 2 ? 0 : radius <= 5 ? 1 : 2].push_back(idx);
        const double angle = std::atan2(static_cast<double>(v), static_cast<double>(u));
        const int o = angle < std::numbers::pi / 6.0 ? 0 : angle <= std::numbers::pi / 3.0 ? 1 : 2;
        orientations[o].push_back(idx);
      }
    }
  }

  void forward(const double in[kBlock * kBlock], double out[kBlock * kBlock]) const {
    double tmp[kBlock * kBlock];
    for (int y = 0; y < kBlock; ++y)
      for (int u = 0; u < kBlock; ++u) {
        double s = 0.0;
        for (int x = 0; x < kBlock; ++x) s += basis[u][x] * in[y * kBlock + x];
        tmp[y * kBlock + u] = s;
      }
    for (int v = 0; v < kBlock; ++v)
      for (int u = 0; u < kBlock; ++u) {
        double s = 0.0;
        for (int y = 0; y < kBlock; ++y) s += basis[v][y] * tmp[y * kBlock + u];
        out[v * kBlock + u] = s;
      }
  }
};

const BlockDct& block_dct() {
  static const BlockDct dct;
  return dct;
}

// std(|c|) / mean(|c|) over the given coefficient indices; 0 when the mean is 0.
double frequency_variation(const double* coef, const std::vector<int>& idx) {
  double sum = 0.0;
  for (int i : idx) sum += std::abs(coef[i]);
  const double n = static_cast<double>(idx.size());
  const double mean = sum / n;
  if (mean <= 0.0) return 0.0;
  double var = 0.0;
  for (int i : idx) {
    const double d = std::abs(coef[i]) - mean;
    var += d * d;
  }
  return std::sqrt(var / n) / mean;
}

double band_energy(const double* coef, const std::vector<int>& idx) {
  double e = 0.0;
  for (int i : idx) e += coef[i] * coef[i];
  return e / static_cast<double>(idx.size());
}

struct BlockStats {
  double shape, zeta, energy_ratio, orientation_var;
};

BlockStats block_stats(const double* coef) {
  const auto& d = block_dct();
  BlockStats s{};
  std::array<double, kBlock * kBlock - 1> ac{};
  for (std::size_t k = 0; k < d.ac.size(); ++k) ac[k] = coef[d.ac[k]];
  s.shape = detail::ggd_moments(ac).shape;
  s.zeta = frequency_variation(coef, d.ac);

  const double e0 = band_energy(coef, d.bands[0]);
  const double e1 = band_energy(coef, d.bands[1]);
  const double e2 = band_energy(coef, d.bands[2]);
  const double r1 = e0 > 0.0 ? e1 / e0 : 0.0;
  const double r2 = (e0 + e1) > 0.0 ? e2 / (e0 + e1) : 0.0;
  s.energy_ratio = 0.5 * (r1 + r2);

  double z[3];
  for (int o = 0; o < 3; ++o) z[o] = frequency_variation(coef, d.orientations[o]);
  const double zm = (z[0] + z[1] + z[2]) / 3.0;
  s.orientation_var =
      ((z[0] - zm) * (z[0] - zm) + (z[1] - zm) * (z[1] - zm) + (z[2] - zm) * (z[2] - zm)) / 3.0;
  return s;
}

}  // namespace

std::array<double, 8> dct_scale_features(const ImageMatrix& img) {
  const auto& dct = block_dct();
  const int bw = img.width() / kBlock;
  const int bh = img.height() / kBlock;
  std::array<double, 8> f{};
  if (bw == 0 || bh == 0) {
    throw Error(ErrorKind::kInvalidArgument, "image smaller than one DCT block");
  }

  std::vector<BlockStats> stats;
  stats.reserve(static_cast<std::size_t>(bw) * bh);
  double in[kBlock * kBlock], coef[kBlock * kBlock];
  for (int by = 0; by < bh; ++by) {
    for (int bx = 0; bx < bw; ++bx) {
      for (int y = 0; y < kBlock; ++y)
        for (int x = 0; x < kBlock; ++x) in[y * kBlock + x] = img.at(bx * kBlock + x, by * kBlock + y);
      dct.forward(in, coef);
      stats.push_back(block_stats(coef));
    }
  }

  std::vector<std::size_t> order(stats.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return stats[a].shape < stats[b].shape; });
  const std::size_t n = stats.size();
  const std::size_t n_low = std::max<std::size_t>(1, (n + 9) / 10);

  auto pool = [&](double BlockStats::*field, int slot) {
    double all = 0.0;
    for (const auto& s : stats) all += s.*field;
    double low = 0.0;
    for (std::size_t k = 0; k < n_low; ++k) low += stats[order[k]].*field;
    f[2 * slot] = all / static_cast<double>(n);
    f[2 * slot + 1] = low / static_cast<double>(n_low);
  };
  pool(&BlockStats::shape, 0);
  pool(&BlockStats::zeta, 1);
  pool(&BlockStats::energy_ratio, 2);
  pool(&BlockStats::orientation_var, 3);
  return f;
}

std::array<double, 24> dct_features(const ImageMatrix& img) {
  require_min_size(img, "dct_features");
  std::array<double, 24> out{};
  const ImageMatrix s2 = downsample2(img);
  const ImageMatrix s3 = halve(s2);
  const ImageMatrix* scales[3] = {&img, &s2, &s3};
  for (int s = 0; s < 3; ++s) {
    const auto f = dct_scale_features(*scales[s]);
    std::copy(f.begin(), f.end(), out.begin() + 8 * s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Haar wavelet statistics

HaarLevel haar_forward(const ImageMatrix& img) {
  const int w = img.width() / 2;
  const int h = img.height() / 2;
  HaarLevel out{ImageMatrix(w, h), ImageMatrix(w, h), ImageMatrix(w, h), ImageMatrix(w, h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double a = img.at(2 * x, 2 * y);
      const double b = img.at(2 * x + 1, 2 * y);
      const double c = img.at(2 * x, 2 * y + 1);
      const double d = img.at(2 * x + 1, 2 * y + 1);
      out.ll.at(x, y) = (a + b + c + d) / 4.0;
      out.hl.at(x, y) = (a - b + c - d) / 4.0;
      out.lh.at(x, y) = (a + b - c - d) / 4.0;
      out.hh.at(x, y) = (a - b - c + d) / 4.0;
    }
  }
  return out;
}

ImageMatrix haar_inverse(const HaarLevel& level) {
  const int w = level.ll.width();
  const int h = level.ll.height();
  ImageMatrix out(2 * w, 2 * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double ll = level.ll.at(x, y);
      const double hl = level.hl.at(x, y);
      const double lh = level.lh.at(x, y);
      const double hh = level.hh.at(x, y);
      out.at(2 * x, 2 * y) = ll + hl + lh + hh;
      out.at(2 * x + 1, 2 * y) = ll - hl + lh - hh;
      out.at(2 * x, 2 * y + 1) = ll + hl - lh - hh;
      out.at(2 * x + 1, 2 * y + 1) = ll - hl - lh + hh;
    }
  }
  return out;
}

namespace {

constexpr int kWaveletLevels = 4;
constexpr int kEntropyBins = 64;
constexpr double kEntropyLo = -128.0;
constexpr double kEntropyHi = 128.0;

struct CollectionStats {
  double mean_abs, variance, entropy;
};

CollectionStats collection_stats(const std::vector<double>& c) {
  const double n = static_cast<double>(c.size());
  double abs_sum = 0.0, sum = 0.0;
  for (double v : c) {
    abs_sum += std::abs(v);
    sum += v;
  }
  const double mean = sum / n;
  double var = 0.0;
  for (double v : c) var += (v - mean) * (v - mean);

  std::array<std::size_t, kEntropyBins> hist{};
  const double width = (kEntropyHi - kEntropyLo) / kEntropyBins;
  for (double v : c) {
    const int bin = static_cast<int>(std::floor((v - kEntropyLo) / width));
    ++hist[std::clamp(bin, 0, kEntropyBins - 1)];
  }
  double entropy = 0.0;
  for (std::size_t count : hist) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / n;
    entropy += p * std::log(1.0 / p);
  }
  return {abs_sum / n, var / n, entropy};
}

}  // namespace

std::array<double, 24> wavelet_features(const ImageMatrix& img) {
  require_min_size(img, "wavelet_features");
  std::array<double, 24> out{};
  ImageMatrix current = img;
  for (int level = 0; level < kWaveletLevels; ++level) {
    HaarLevel hl = haar_forward(current);
    std::vector<double> mixed(hl.lh.data());
    mixed.insert(mixed.end(), hl.hl.data().begin(), hl.hl.data().end());
    const CollectionStats a = collection_stats(mixed);
    const CollectionStats d = collection_stats(hl.hh.data());
    const int slot = 2 * level;
    out[slot] = a.mean_abs;
    out[slot + 1] = d.mean_abs;
    out[8 + slot] = a.variance;
    out[8 + slot + 1] = d.variance;
    out[16 + slot] = a.entropy;
    out[16 + slot + 1] = d.entropy;
    current = std::move(hl.ll);
  }
  return out;
}

FeatureVector extract_all(const ImageMatrix& img) {
  require_min_size(img, "extract_all");
  FeatureVector f{};
  const auto dct = dct_features(img);
  const auto spatial = spatial_features(img);
  const auto wavelet = wavelet_features(img);
  auto it = std::copy(dct.begin(), dct.end(), f.begin());
  it = std::copy(spatial.begin(), spatial.end(), it);
  std::copy(wavelet.begin(), wavelet.end(), it);
  for (double v : f) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kInvariant, "non-finite feature value");
  }
  return f;
}

// ---------------------------------------------------------------------------
// Feature table and cache

void FeatureTable::insert(std::int64_t id, const FeatureVector& f) {
  const auto [it, inserted] = index_.try_emplace(id, ids_.size());
  if (!inserted) {
    rows_[it->second] = f;
    return;
  }
  ids_.push_back(id);
  rows_.push_back(f);
}

const FeatureVector& FeatureTable::at(std::int64_t id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) {
    throw Error(ErrorKind::kInvalidArgument, "no cached features for id " + std::to_string(id));
  }
  return rows_[it->second];
}

namespace {

constexpr char kFeatureMagic[6] = {'P', 'R', 'I', 'Q', 'F', '1'};

}  // namespace

void write_feature_cache(const std::filesystem::path& path, const FeatureTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(kFeatureMagic, sizeof kFeatureMagic);
  le::put<std::uint64_t>(out, table.size());
  le::put<std::uint32_t>(out, static_cast<std::uint32_t>(kFeatureDim));
  for (std::size_t i = 0; i < table.size(); ++i) {
    le::put<std::int64_t>(out, table.ids()[i]);
    for (double v : table.rows()[i]) le::put<double>(out, v);
  }
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

FeatureTable read_feature_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingFile, "feature cache not found: " + path.string());
  char magic[sizeof kFeatureMagic];
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic || std::memcmp(magic, kFeatureMagic, sizeof magic) != 0) {
    throw Error(ErrorKind::kParse, path.string() + ": bad feature cache magic");
  }
  const auto count = le::get<std::uint64_t>(in, "feature cache");
  const auto dim = le::get<std::uint32_t>(in, "feature cache");
  if (dim != kFeatureDim) {
    throw Error(ErrorKind::kParse, path.string() + ": feature dimension " + std::to_string(dim) +
                                       " != " + std::to_string(kFeatureDim));
  }
  FeatureTable table;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto id = le::get<std::int64_t>(in, "feature cache");
    FeatureVector f{};
    for (double& v : f) v = le::get<double>(in, "feature cache");
    table.insert(id, f);
  }
  return table;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << "id";
  for (const auto& g : kFeatureLayout) {
    for (std::size_t k = 0; k < g.size; ++k) out << ',' << g.name << '_' << k;
  }
  out << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.ids()[i];
    for (double v : table.rows()[i]) out << ',' << v;
    out << '\n';
  }
}

}  // namespace priq

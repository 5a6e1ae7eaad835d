#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "priq/image.hpp"

namespace priq {

inline constexpr std::size_t kFeatureDim = 84;
inline constexpr std::size_t kFeatureGroups = 8;

struct FeatureGroup {
  std::string_view name;
  std::size_t offset;
  std::size_t size;
};

using FeatureLayout = std::array<FeatureGroup, kFeatureGroups>;

/// Group boundary table of the fused vector. The kernel bank reads the same
/// table, so it is the only place the partition is written down.
inline constexpr FeatureLayout kFeatureLayout{{
    {"dct_s1", 0, 8},
    {"dct_s2", 8, 8},
    {"dct_s3", 16, 8},
    {"spatial_s1", 24, 18},
    {"spatial_s2", 42, 18},
    {"wavelet_mean", 60, 8},
    {"wavelet_var", 68, 8},
    {"wavelet_entropy", 76, 8},
}};

using FeatureVector = std::array<double, kFeatureDim>;

// ---------------------------------------------------------------------------
// Distribution fits

struct GgdFit {
  double shape;
  double sigma;
};

struct AggdFit {
  double shape;
  double mean;
  double sigma_left;
  double sigma_right;
};

inline constexpr double kMinShape = 0.1;
inline constexpr double kMaxShape = 10.0;

/// Gamma(2/g)^2 / (Gamma(1/g) Gamma(3/g)); strictly increasing in g.
double ggd_moment_ratio(double shape);

/// Inverts ggd_moment_ratio with a lookup table plus bisection; the result is
/// clamped to [kMinShape, kMaxShape].
double invert_moment_ratio(double ratio);

/// Zero-mean generalized Gaussian fit by moment matching. Needs >= 64
/// samples. If all samples are equal the fit returns {kMaxShape, 0}.
GgdFit fit_ggd(std::span<const double> samples);

/// Asymmetric generalized Gaussian fit (separate left/right scales). Same
/// sample-count rule and degenerate fallback as fit_ggd.
AggdFit fit_aggd(std::span<const double> samples);

namespace detail {
// Moment-matching core shared with the per-block DCT statistics, which work
// on fewer than 64 coefficients.
GgdFit ggd_moments(std::span<const double> samples);
AggdFit aggd_moments(std::span<const double> samples);
}  // namespace detail

// ---------------------------------------------------------------------------
// Extractors

/// Mean-subtracted contrast-normalized map: 7x7 Gaussian window, C = 1.
ImageMatrix mscn(const ImageMatrix& img);

/// 36 values: per scale {GGD shape, sigma^2} of the MSCN map, then
/// {shape, mean, sigma_l^2, sigma_r^2} of the H, V, D1, D2 neighbour products.
std::array<double, 36> spatial_features(const ImageMatrix& img);

/// 8 values for a single scale; dct_features concatenates three of these.
std::array<double, 8> dct_scale_features(const ImageMatrix& img);

/// 24 values, 8 per scale over three dyadic scales.
std::array<double, 24> dct_features(const ImageMatrix& img);

/// 24 values: mean |c| (8), variance (8), entropy in nats (8) over the LH+HL
/// and HH collections of a 4-level Haar decomposition.
std::array<double, 24> wavelet_features(const ImageMatrix& img);

/// One level of the averaging Haar transform on the even-cropped image.
/// For a 2x2 cell (a b / c d): ll = (a+b+c+d)/4, hl = (a-b+c-d)/4,
/// lh = (a+b-c-d)/4, hh = (a-b-c+d)/4.
struct HaarLevel {
  ImageMatrix ll, lh, hl, hh;
};
HaarLevel haar_forward(const ImageMatrix& img);
ImageMatrix haar_inverse(const HaarLevel& level);

/// Fused 84-dim vector in kFeatureLayout order.
FeatureVector extract_all(const ImageMatrix& img);

// ---------------------------------------------------------------------------
// Feature table and on-disk cache

/// Per-image feature rows keyed by image id; insertion order is kept.
class FeatureTable {
 public:
  void insert(std::int64_t id, const FeatureVector& f);
  bool contains(std::int64_t id) const { return index_.count(id) != 0; }
  /// Throws Error(kInvalidArgument) when the id is unknown.
  const FeatureVector& at(std::int64_t id) const;
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::int64_t>& ids() const { return ids_; }
  const std::vector<FeatureVector>& rows() const { return rows_; }

  friend bool operator==(const FeatureTable& a, const FeatureTable& b) {
    return a.ids_ == b.ids_ && a.rows_ == b.rows_;
  }

 private:
  std::vector<std::int64_t> ids_;
  std::vector<FeatureVector> rows_;
  std::unordered_map<std::int64_t, std::size_t> index_;
};

/// Binary little-endian cache: "PRIQF1", u64 count, u32 dim, then per image
/// i64 id followed by dim f64 values.
void write_feature_cache(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable read_feature_cache(const std::filesystem::path& path);
void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table);

}  // namespace priq

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "priq/corpus.hpp"
#include "priq/features.hpp"
#include "priq/mkl.hpp"

namespace priq {

struct QualityReport {
  std::int64_t id = 0;
  double gain = 0.0;   ///< sum of predicted labels, in [-n, n]
  double score = 0.0;  ///< 50 (gain / (n - 1) + 1); not clamped
  std::size_t n_train = 0;

  friend bool operator==(const QualityReport&, const QualityReport&) = default;
};

/// Sum of a training image's ideal labels against the other n - 1 images.
double training_gain(std::span<const int> labels);

/// Affine gain-to-score map sending +(n-1) to 100 and -(n-1) to 0.
struct GainMapping {
  double a;
  double b;
};
GainMapping gain_to_score_params(std::size_t n);

/// 50 (gain / (n - 1) + 1).
double gain_to_score(double gain, std::size_t n);

/// Pairs the image with every training row of the model and sums the
/// predicted labels of f_test - f_i.
QualityReport score_image(const TrainedModel& model, std::int64_t id, const FeatureVector& f_test);

/// score_image over every manifest image, in manifest order. Runs in
/// parallel across images; results do not depend on the thread count.
std::vector<QualityReport> score_batch(const TrainedModel& model, const Manifest& manifest,
                                       const FeatureTable& features);

namespace serial {
std::vector<QualityReport> score_batch(const TrainedModel& model, const Manifest& manifest,
                                       const FeatureTable& features);
}  // namespace serial

/// Gain mapping assumes training scores span the quality range. Reports the
/// fraction of the declared range actually covered; warn below 0.8.
struct CoverageCheck {
  double span_ratio = 0.0;
  bool warn = false;
};
CoverageCheck check_score_coverage(std::span<const double> train_scores, double score_min,
                                   double score_max);

struct ScoreFileMeta {
  std::string model_hash;
  std::string manifest_name;
};

/// CSV `id,gain,score` plus `<stem>.meta.json`.
void write_scores(const std::filesystem::path& path, std::span<const QualityReport> reports,
                  const ScoreFileMeta& meta);
std::vector<QualityReport> read_scores(const std::filesystem::path& path);

}  // namespace priq

#include "priq/quality.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "priq/error.hpp"

namespace priq {

double training_gain(std::span<const int> labels) {
  double g = 0.0;
  for (int y : labels) g += y;
  return g;
}

GainMapping gain_to_score_params(std::size_t n) {
  if (n < 2) throw Error(ErrorKind::kInvalidArgument, "gain mapping needs n >= 2");
  return {50.0 / static_cast<double>(n - 1), 50.0};
}

double gain_to_score(double gain, std::size_t n) {
  if (n < 2) throw Error(ErrorKind::kInvalidArgument, "gain mapping needs n >= 2");
  return 50.0 * (gain / static_cast<double>(n - 1) + 1.0);
}

QualityReport score_image(const TrainedModel& model, std::int64_t id, const FeatureVector& f_test) {
  if (!model.trained()) throw Error(ErrorKind::kNotTrained, "model is not trained");
  const auto& rows = model.train_features.rows();
  const std::size_t n = rows.size();
  if (n < 2) throw Error(ErrorKind::kNotTrained, "model holds fewer than 2 training images");

  FeatureVector diff{};
  double gain = 0.0;
  for (const auto& fi : rows) {
    for (std::size_t c = 0; c < kFeatureDim; ++c) diff[c] = f_test[c] - fi[c];
    gain += predict_label(model, diff);
  }
  return {id, gain, gain_to_score(gain, n), n};
}

namespace {

std::vector<const FeatureVector*> lookup_all(const Manifest& manifest, const FeatureTable& features) {
  std::vector<const FeatureVector*> out;
  out.reserve(manifest.size());
  for (const auto& im : manifest.images) out.push_back(&features.at(im.id));
  return out;
}

}  // namespace

std::vector<QualityReport> score_batch(const TrainedModel& model, const Manifest& manifest,
                                       const FeatureTable& features) {
  const auto inputs = lookup_all(manifest, features);
  std::vector<QualityReport> out(inputs.size());
  const std::int64_t n = static_cast<std::int64_t>(inputs.size());
  // Exceptions may not cross the OpenMP region boundary.
  std::string failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < n; ++k) {
    try {
      out[k] = score_image(model, manifest.images[k].id, *inputs[k]);
    } catch (const std::exception& e) {
#pragma omp critical(priq_score_failure)
      if (failure.empty()) failure = e.what();
    }
  }
  if (!failure.empty()) throw Error(ErrorKind::kNotTrained, failure);
  return out;
}

namespace serial {

std::vector<QualityReport> score_batch(const TrainedModel& model, const Manifest& manifest,
                                       const FeatureTable& features) {
  std::vector<QualityReport> out;
  out.reserve(manifest.size());
  for (const auto& im : manifest.images) out.push_back(score_image(model, im.id, features.at(im.id)));
  return out;
}

}  // namespace serial

CoverageCheck check_score_coverage(std::span<const double> train_scores, double score_min,
                                   double score_max) {
  CoverageCheck c;
  const double range = score_max - score_min;
  if (train_scores.empty() || !(range > 0.0)) {
    c.warn = true;
    return c;
  }
  const auto [lo, hi] = std::minmax_element(train_scores.begin(), train_scores.end());
  c.span_ratio = (*hi - *lo) / range;
  c.warn = c.span_ratio < 0.8;
  return c;
}

void write_scores(const std::filesystem::path& path, std::span<const QualityReport> reports,
                  const ScoreFileMeta& meta) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.precision(17);
  out << "id,gain,score\n";
  for (const auto& r : reports) out << r.id << ',' << r.gain << ',' << r.score << '\n';
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());

  std::filesystem::path meta_path = path;
  meta_path.replace_extension(".meta.json");
  const nlohmann::json j{{"model_hash", meta.model_hash},
                         {"manifest", meta.manifest_name},
                         {"n_train", reports.empty() ? 0 : reports.front().n_train}};
  std::ofstream mout(meta_path);
  if (!mout) throw Error(ErrorKind::kIo, "cannot write " + meta_path.string());
  mout << j.dump(2) << '\n';
}

std::vector<QualityReport> read_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingFile, "score file not found: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("id,gain,score", 0) != 0) {
    throw Error(ErrorKind::kParse, path.string() + ": expected header 'id,gain,score'");
  }
  std::vector<QualityReport> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    QualityReport r;
    if (!(ss >> r.id >> r.gain >> r.score)) {
      throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace priq

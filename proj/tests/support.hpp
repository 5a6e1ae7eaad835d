#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "priq/corpus.hpp"
#include "priq/features.hpp"
#include "priq/kernels.hpp"
#include "priq/mkl.hpp"
#include "priq/pairs.hpp"

namespace testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("priq_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

struct SmallCorpus {
  TempDir dir;
  priq::Manifest manifest;
  priq::FeatureTable features;
};

// 6 references x (wn, gblur) x 3 levels at 64x64: 42 images. Built once.
inline const SmallCorpus& small_corpus() {
  static const SmallCorpus* c = [] {
    auto* s = new SmallCorpus;
    priq::SynthConfig cfg;
    cfg.n_refs = 6;
    cfg.levels = 3;
    cfg.width = cfg.height = 64;
    cfg.distortions = {"wn", "gblur"};
    cfg.out_dir = s->dir.path();
    cfg.name = "small";
    s->manifest = priq::synth_corpus(cfg, 7);
    s->features = priq::serial::extract_features(s->manifest);
    return s;
  }();
  return *c;
}

// Model trained on every pair of the small corpus with a score gap > 5.
inline const priq::TrainedModel& small_model() {
  static const priq::TrainedModel model = [] {
    const auto& c = small_corpus();
    const auto pairs = priq::gen_pairs_from_scores(c.manifest, 5.0, 300, 11);
    auto m = priq::mklgl_train(priq::build_diffset(pairs, c.features), priq::MklConfig{});
    m.train_features = c.features;
    return m;
  }();
  return model;
}

inline priq::FeatureVector random_vector(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  priq::FeatureVector v;
  for (double& x : v) x = n(rng);
  return v;
}

// Difference vectors whose labels depend only on feature group `group`:
// y = sign(w . x_g) for a random direction w, rows kept only at least
// `margin` sd from the boundary; every other dim is noise.
inline priq::DiffSet planted_diffset(std::size_t group, std::size_t n_pairs, std::uint64_t seed,
                                     double margin = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto& g = priq::kFeatureLayout[group];
  std::vector<double> w(g.size);
  double wn = 0.0;
  for (double& v : w) wn += (v = n(rng)) * v;
  wn = std::sqrt(wn);

  priq::DiffSet d;
  d.n_pairs = n_pairs;
  d.x.resize(2 * n_pairs * priq::kFeatureDim);
  d.y.resize(2 * n_pairs);
  for (std::size_t k = 0; k < n_pairs; ++k) {
    double* row = d.x.data() + k * priq::kFeatureDim;
    double* mirror = d.x.data() + (n_pairs + k) * priq::kFeatureDim;
    double s = 0.0;
    do {
      for (std::size_t c = 0; c < priq::kFeatureDim; ++c) row[c] = n(rng);
      s = 0.0;
      for (std::size_t c = 0; c < g.size; ++c) s += w[c] * row[g.offset + c];
    } while (std::abs(s) < margin * wn);  // keep a margin
    for (std::size_t c = 0; c < priq::kFeatureDim; ++c) mirror[c] = -row[c];
    d.y[k] = s > 0 ? 1 : -1;
    d.y[n_pairs + k] = -d.y[k];
    d.pair_index.push_back({k, false});
  }
  for (std::size_t k = 0; k < n_pairs; ++k) d.pair_index.push_back({k, true});
  return d;
}

inline double group_mass(const priq::TrainedModel& m, std::size_t group) {
  double s = 0.0;
  for (std::size_t b = 0; b < priq::kBandwidthCount; ++b) s += m.theta[group * priq::kBandwidthCount + b];
  return s;
}

// Random symmetric-PSD Gram (Gaussian kernel on random points) and labels.
struct QpProblem {
  priq::DenseMatrix K;
  std::vector<int> y;
};

inline QpProblem random_qp(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> width(0.5, 3.0);
  const std::size_t dim = 5;
  std::vector<double> pts(n * dim);
  for (double& v : pts) v = nd(rng);
  const double h = width(rng);
  QpProblem p{priq::DenseMatrix(n), std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double d = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        const double t = pts[i * dim + c] - pts[j * dim + c];
        d += t * t;
      }
      p.K(i, j) = std::exp(-d / (2 * h * h));
    }
    p.y[i] = (pts[i * dim] + 0.7 * nd(rng) > 0) ? 1 : -1;
  }
  p.y[0] = 1;
  p.y[1] = -1;
  return p;
}

inline std::vector<double> signed_gram(const QpProblem& p) {
  const std::size_t n = p.y.size();
  std::vector<double> Q(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) Q[i * n + j] = p.y[i] * p.y[j] * p.K(i, j);
  return Q;
}

}  // namespace testing

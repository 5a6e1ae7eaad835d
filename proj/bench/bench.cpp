// OpenMP kernels against their serial references. Thread count follows
// PRIQ_THREADS, else the OpenMP default.

#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "priq/corpus.hpp"
#include "priq/kernels.hpp"
#include "priq/mkl.hpp"
#include "priq/pairs.hpp"
#include "priq/quality.hpp"

using namespace priq;

namespace {

std::vector<double> random_rows(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> rows(n * kFeatureDim);
  for (double& v : rows) v = nd(rng);
  return rows;
}

std::array<double, kKernelCount> uniform_theta() {
  std::array<double, kKernelCount> t;
  t.fill(1.0 / kKernelCount);
  return t;
}

// Rows [Z; -Z] as the serial path sees them.
std::vector<double> mirrored(const std::vector<double>& half) {
  std::vector<double> all(half);
  for (double v : half) all.push_back(-v);
  return all;
}

void BM_GramCached(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto half = random_rows(n, 1);
  const auto theta = uniform_theta();
  DenseMatrix out(2 * n);
  for (auto _ : state) {
    MirrorKernelCache cache(half, n);
    cache.combined_gram(theta, out);
    benchmark::DoNotOptimize(out.a.data());
  }
}

void BM_GramSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto rows = mirrored(random_rows(n, 1));
  const auto bank = build_kernel_bank();
  const auto theta = uniform_theta();
  for (auto _ : state) benchmark::DoNotOptimize(serial::combined_gram(rows, 2 * n, bank, theta));
}

void BM_QuadraticsCached(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto half = random_rows(n, 2);
  const MirrorKernelCache cache(half, n);
  std::vector<double> w(n);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : w) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(cache.kernel_quadratics(w));
}

void BM_QuadraticsSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto rows = mirrored(random_rows(n, 2));
  const auto bank = build_kernel_bank();
  std::vector<double> alpha(2 * n);
  std::vector<int> y(2 * n);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    alpha[k] = alpha[n + k] = u(rng);
    y[k] = k % 2 ? 1 : -1;
    y[n + k] = -y[k];
  }
  for (auto _ : state) benchmark::DoNotOptimize(serial::kernel_quadratics(rows, 2 * n, bank, alpha, y));
}

std::filesystem::path corpus_dir() { return std::filesystem::temp_directory_path() / "priq_bench_corpus"; }

struct Corpus {
  std::filesystem::path dir;
  Manifest manifest;
  FeatureTable features;
  TrainedModel model;
};

const Corpus& corpus() {
  static const Corpus c = [] {
    Corpus k;
    k.dir = corpus_dir();
    SynthConfig cfg;
    cfg.n_refs = 4;
    cfg.out_dir = k.dir;
    k.manifest = synth_corpus(cfg, 5);
    k.features = serial::extract_features(k.manifest);
    const auto pairs = gen_pairs_from_scores(k.manifest, 10.0, 300, 5);
    k.model = mklgl_train(build_diffset(pairs, k.features), MklConfig{});
    k.model.train_features = k.features;
    return k;
  }();
  return c;
}

void BM_ExtractParallel(benchmark::State& state) {
  const auto& c = corpus();
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(c.manifest));
}

void BM_ExtractSerial(benchmark::State& state) {
  const auto& c = corpus();
  for (auto _ : state) benchmark::DoNotOptimize(serial::extract_features(c.manifest));
}

void BM_ScoreParallel(benchmark::State& state) {
  const auto& c = corpus();
  for (auto _ : state) benchmark::DoNotOptimize(score_batch(c.model, c.manifest, c.features));
}

void BM_ScoreSerial(benchmark::State& state) {
  const auto& c = corpus();
  for (auto _ : state) benchmark::DoNotOptimize(serial::score_batch(c.model, c.manifest, c.features));
}

}  // namespace

BENCHMARK(BM_GramCached)->Arg(250)->Arg(750)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramSerial)->Arg(250)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QuadraticsCached)->Arg(250)->Arg(750)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QuadraticsSerial)->Arg(250)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExtractParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ExtractSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreSerial)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("PRIQ_THREADS")) set_thread_count(std::atoi(env));
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  std::filesystem::remove_all(corpus_dir());
  return 0;
}

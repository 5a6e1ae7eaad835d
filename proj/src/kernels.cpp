#include "priq/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <string>

#include "priq/error.hpp"

namespace priq {

void set_thread_count(int threads) {
  omp_set_num_threads(threads >= 1 ? threads : omp_get_num_procs());
}

int thread_count() { return omp_get_max_threads(); }

MirrorKernelCache::MirrorKernelCache(std::span<const double> half_rows, std::size_t n_half)
    : n_(n_half) {
  if (half_rows.size() != n_half * kFeatureDim) {
    throw Error(ErrorKind::kInvalidArgument, "kernel cache rows do not match row count");
  }
  bases_.resize(n_ * (n_ + 1) / 2 * kStride);
  const std::int64_t n = static_cast<std::int64_t>(n_);

#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t k = 0; k < n; ++k) {
    const double* zk = half_rows.data() + k * kFeatureDim;
    for (std::int64_t l = k; l < n; ++l) {
      const double* zl = half_rows.data() + l * kFeatureDim;
      double* out = bases_.data() + packed(k, l) * kStride;
      double full_minus = 0.0, full_plus = 0.0;
      for (std::size_t g = 0; g < kFeatureGroups; ++g) {
        const auto& grp = kFeatureLayout[g];
        double dm = 0.0, dp = 0.0;
        for (std::size_t c = grp.offset; c < grp.offset + grp.size; ++c) {
          const double m = zk[c] - zl[c];
          const double p = zk[c] + zl[c];
          dm += m * m;
          dp += p * p;
        }
        full_minus += dm;
        full_plus += dp;
        const double scale = 1.0 / (32.0 * static_cast<double>(grp.size));
        out[g] = std::exp(-dm * scale);
        out[kSelectors + g] = std::exp(-dp * scale);
      }
      const double scale = 1.0 / (32.0 * static_cast<double>(kFeatureDim));
      out[kFeatureGroups] = std::exp(-full_minus * scale);
      out[kSelectors + kFeatureGroups] = std::exp(-full_plus * scale);
    }
  }
}

namespace {

// sum_m theta_m K_m for one sign, from the 9 selector bases.
inline double weighted_sum(const double* bases, const std::array<double, kKernelCount>& theta) {
  double acc = 0.0;
  double k5[kBandwidthCount];
  for (std::size_t s = 0; s <= kFeatureGroups; ++s) {
    const double* th = theta.data() + s * kBandwidthCount;
    if (th[0] == 0.0 && th[1] == 0.0 && th[2] == 0.0 && th[3] == 0.0 && th[4] == 0.0) continue;
    bandwidth_ladder(bases[s], k5);
    for (std::size_t b = 0; b < kBandwidthCount; ++b) acc += th[b] * k5[b];
  }
  return acc;
}

}  // namespace

void MirrorKernelCache::combined_gram(const std::array<double, kKernelCount>& theta,
                                      DenseMatrix& out) const {
  const std::size_t n2 = 2 * n_;
  if (out.n != n2) out = DenseMatrix(n2);
  const std::int64_t n = static_cast<std::int64_t>(n_);

#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t k = 0; k < n; ++k) {
    for (std::int64_t l = k; l < n; ++l) {
      const double* b = bases_.data() + packed(k, l) * kStride;
      const double same = weighted_sum(b, theta);
      const double cross = weighted_sum(b + kSelectors, theta);
      const std::size_t uk = k, ul = l, N = n_;
      out(uk, ul) = same;
      out(ul, uk) = same;
      out(N + uk, N + ul) = same;
      out(N + ul, N + uk) = same;
      out(uk, N + ul) = cross;
      out(N + ul, uk) = cross;
      out(ul, N + uk) = cross;
      out(N + uk, ul) = cross;
    }
  }
}

std::array<double, kKernelCount> MirrorKernelCache::kernel_quadratics(
    std::span<const double> weights) const {
  if (weights.size() != n_) {
    throw Error(ErrorKind::kInvalidArgument, "weight vector does not match cache size");
  }
  const std::int64_t n = static_cast<std::int64_t>(n_);
  // Per-row partial sums in a fixed order keep the result independent of the
  // thread schedule.
  std::vector<std::array<double, kKernelCount>> partial(n_);

#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t k = 0; k < n; ++k) {
    auto& acc = partial[k];
    acc.fill(0.0);
    const double wk = weights[k];
    if (wk == 0.0) continue;
    double km[kBandwidthCount], kp[kBandwidthCount];
    for (std::int64_t l = k; l < n; ++l) {
      const double wl = weights[l];
      if (wl == 0.0) continue;
      const double w = (l == k ? 1.0 : 2.0) * wk * wl;
      const double* b = bases_.data() + packed(k, l) * kStride;
      for (std::size_t s = 0; s <= kFeatureGroups; ++s) {
        bandwidth_ladder(b[s], km);
        bandwidth_ladder(b[kSelectors + s], kp);
        for (std::size_t bw = 0; bw < kBandwidthCount; ++bw) {
          acc[s * kBandwidthCount + bw] += w * (km[bw] - kp[bw]);
        }
      }
    }
  }

  std::array<double, kKernelCount> total{};
  for (const auto& row : partial) {
    for (std::size_t m = 0; m < kKernelCount; ++m) total[m] += row[m];
  }
  // Mirror blocks: [A B; B A] with weights (w, -w) gives 2 w'(A - B)w.
  for (double& t : total) t *= 2.0;
  return total;
}

FeatureTable extract_features(const Manifest& manifest) {
  const std::int64_t n = static_cast<std::int64_t>(manifest.size());
  std::vector<FeatureVector> rows(manifest.size());
  std::string failure;
  ErrorKind failure_kind = ErrorKind::kIo;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < n; ++k) {
    try {
      rows[k] = extract_all(read_image(manifest.images[k].path));
    } catch (const Error& e) {
#pragma omp critical(priq_extract_failure)
      if (failure.empty()) {
        failure = e.what();
        failure_kind = e.kind();
      }
    }
  }
  if (!failure.empty()) throw Error(failure_kind, failure);
  FeatureTable table;
  for (std::size_t k = 0; k < rows.size(); ++k) table.insert(manifest.images[k].id, rows[k]);
  return table;
}

namespace serial {

FeatureTable extract_features(const Manifest& manifest) {
  FeatureTable table;
  for (const auto& im : manifest.images) table.insert(im.id, extract_all(read_image(im.path)));
  return table;
}

DenseMatrix combined_gram(std::span<const double> rows, std::size_t n_rows,
                          const std::vector<KernelSpec>& bank,
                          const std::array<double, kKernelCount>& theta) {
  DenseMatrix K(n_rows);
  for (std::size_t a = 0; a < n_rows; ++a) {
    const auto xa = rows.subspan(a * kFeatureDim, kFeatureDim);
    for (std::size_t b = 0; b < n_rows; ++b) {
      const auto xb = rows.subspan(b * kFeatureDim, kFeatureDim);
      double acc = 0.0;
      for (std::size_t m = 0; m < bank.size(); ++m) {
        if (theta[m] != 0.0) acc += theta[m] * kernel_eval(bank[m], xa, xb);
      }
      K(a, b) = acc;
    }
  }
  return K;
}

std::array<double, kKernelCount> kernel_quadratics(std::span<const double> rows,
                                                   std::size_t n_rows,
                                                   const std::vector<KernelSpec>& bank,
                                                   std::span<const double> alpha,
                                                   std::span<const int> y) {
  std::array<double, kKernelCount> q{};
  for (std::size_t m = 0; m < bank.size(); ++m) {
    double acc = 0.0;
    for (std::size_t a = 0; a < n_rows; ++a) {
      if (alpha[a] == 0.0) continue;
      const auto xa = rows.subspan(a * kFeatureDim, kFeatureDim);
      for (std::size_t b = 0; b < n_rows; ++b) {
        if (alpha[b] == 0.0) continue;
        const auto xb = rows.subspan(b * kFeatureDim, kFeatureDim);
        acc += alpha[a] * alpha[b] * y[a] * y[b] * kernel_eval(bank[m], xa, xb);
      }
    }
    q[m] = acc;
  }
  return q;
}

}  // namespace serial

}  // namespace priq

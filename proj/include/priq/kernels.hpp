#pragma once

// Data-parallel kernels used by training, plus the straightforward serial
// versions they are checked against.

#include <array>
#include <span>
#include <vector>

#include "priq/corpus.hpp"
#include "priq/mkl.hpp"

namespace priq {

/// OpenMP thread count used by every parallel kernel. Values < 1 select the
/// runtime default.
void set_thread_count(int threads);
int thread_count();

/// Reads every manifest image and extracts its features, in parallel across
/// images. Rows are inserted in manifest order.
FeatureTable extract_features(const Manifest& manifest);

/// exp(-d / (32 d_g)) is the sigma = 4 kernel; squaring twice moves one step
/// down the bandwidth ladder. Writes the 5 kernels in ascending-sigma order.
inline void bandwidth_ladder(double base, double* out) {
  const double t4 = (base * base) * (base * base);
  const double t16 = (t4 * t4) * (t4 * t4);
  const double t64 = (t16 * t16) * (t16 * t16);
  const double t256 = (t64 * t64) * (t64 * t64);
  out[0] = t256;
  out[1] = t64;
  out[2] = t16;
  out[3] = t4;
  out[4] = base;
}

/// Caches, for every unordered pair (k, l) of the N half rows of a mirrored
/// training set, the 9 selector bases for z_k - z_l and for z_k + z_l. The
/// 2N x 2N Gram for any theta and the per-kernel quadratic forms are then
/// exp-free sweeps over the cache.
class MirrorKernelCache {
 public:
  /// `half_rows` holds N standardized rows of kFeatureDim values.
  MirrorKernelCache(std::span<const double> half_rows, std::size_t n_half);

  std::size_t half() const { return n_; }

  /// Fills the 2N x 2N Gram of sum_m theta_m K_m over rows [Z; -Z].
  void combined_gram(const std::array<double, kKernelCount>& theta, DenseMatrix& out) const;

  /// a'(yy' o K_m)a over the 2N rows for each kernel m, given symmetric
  /// coefficients (alpha_k = alpha_{N+k}); `weights` holds alpha_k y_k for
  /// the first N rows.
  std::array<double, kKernelCount> kernel_quadratics(std::span<const double> weights) const;

 private:
  static constexpr std::size_t kSelectors = kFeatureGroups + 1;
  static constexpr std::size_t kStride = 2 * kSelectors;

  std::size_t packed(std::size_t k, std::size_t l) const {
    return k * n_ - k * (k - 1) / 2 + (l - k);
  }

  std::size_t n_;
  std::vector<double> bases_;
};

namespace serial {

FeatureTable extract_features(const Manifest& manifest);

/// Direct Gram over explicit rows using kernel_eval for every kernel.
DenseMatrix combined_gram(std::span<const double> rows, std::size_t n_rows,
                          const std::vector<KernelSpec>& bank,
                          const std::array<double, kKernelCount>& theta);

/// Direct a'(yy' o K_m)a over explicit rows.
std::array<double, kKernelCount> kernel_quadratics(std::span<const double> rows,
                                                   std::size_t n_rows,
                                                   const std::vector<KernelSpec>& bank,
                                                   std::span<const double> alpha,
                                                   std::span<const int> y);

}  // namespace serial

}  // namespace priq

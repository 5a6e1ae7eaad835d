#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "priq/features.hpp"
#include "priq/pairs.hpp"

namespace priq {

inline constexpr std::size_t kKernelCount = 45;
inline constexpr std::size_t kBandwidthCount = 5;
inline constexpr std::array<double, kBandwidthCount> kBandwidths{0.25, 0.5, 1.0, 2.0, 4.0};
/// Selector index of the kernels that see the whole vector.
inline constexpr int kFullGroup = static_cast<int>(kFeatureGroups);

/// Gaussian kernel on one feature group (or on all dims for kFullGroup):
/// K(x, z) = exp(-|x_g - z_g|^2 / (2 sigma^2 d_g)), d_g = group size.
struct KernelSpec {
  int group = 0;
  std::size_t offset = 0;
  std::size_t size = 0;
  double sigma = 1.0;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// The 45 specs: each of the 8 groups with sigmas ascending, then the five
/// full-vector kernels. Throws Error(kInvalidArgument) unless the layout has
/// 8 contiguous groups covering kFeatureDim dims.
std::vector<KernelSpec> build_kernel_bank(std::span<const FeatureGroup> layout = kFeatureLayout);

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> z);

/// Square row-major matrix.
struct DenseMatrix {
  std::size_t n = 0;
  std::vector<double> a;

  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t size) : n(size), a(size * size, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
  const double* row(std::size_t i) const { return a.data() + i * n; }
};

struct SvmOptions {
  double C = 1.0;
  double tol = 1e-4;
  std::size_t max_updates = 100000;
  /// Rows [n/2, n) are negated copies of rows [0, n/2) with negated labels;
  /// the solution is symmetrized by averaging each mirrored pair.
  bool mirrored = false;
};

struct SvmSolution {
  std::vector<double> alpha;
  double objective = 0.0;      ///< dual value sum(a) - a'(yy' o K)a / 2
  double max_violation = 0.0;  ///< KKT gap of the pre-symmetrization iterate
  std::size_t updates = 0;
  bool converged = false;
  /// Set when the update cap was hit with violation > 10 tol.
  std::optional<std::string> warning;
};

/// Soft-margin SVM dual with bias constraint, solved by SMO with
/// second-order working-set selection. `warm_start` must be feasible.
SvmSolution svm_solve_dual(const DenseMatrix& K, std::span<const int> y, const SvmOptions& options,
                           std::span<const double> warm_start = {});

/// sum(a) - 1/2 a'(yy' o K)a.
double svm_dual_objective(const DenseMatrix& K, std::span<const int> y,
                          std::span<const double> alpha);

struct MklConfig {
  double C = 1.0;
  double p = 1.0;
  double outer_tol = 1e-3;
  int max_outer = 40;
  double inner_tol = 1e-4;
  std::size_t max_updates = 100000;

  friend bool operator==(const MklConfig&, const MklConfig&) = default;
};

/// Training-time diagnostics. Not written to model files.
struct TrainingTrace {
  std::vector<double> alpha;  ///< 2N dual coefficients after symmetrization
  std::vector<int> labels;    ///< 2N labels
  std::vector<double> objective_history;
  std::vector<std::array<double, kKernelCount>> theta_history;
  int outer_iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

struct TrainedModel {
  std::vector<KernelSpec> bank;
  std::array<double, kKernelCount> theta{};
  double bias = 0.0;
  std::array<double, kFeatureDim> norm_mu{};
  std::array<double, kFeatureDim> norm_sd{};
  /// Retained difference vectors (unstandardized), row-major, with their
  /// dual coefficients and labels.
  std::vector<double> sv_rows;
  std::vector<double> sv_alpha;
  std::vector<int> sv_labels;
  FeatureTable train_features;
  MklConfig config;
  /// Free-form provenance (JSON text) stored verbatim in model files.
  std::string notes = "{}";
  TrainingTrace trace;

  std::size_t sv_count() const { return sv_alpha.size(); }
  bool trained() const { return !bank.empty() && sv_count() > 0; }

  /// Rebuilds cached standardized support rows; call after mutating sv data.
  void prepare();

  /// Standardized copies of sv_rows; filled by prepare().
  std::vector<double> sv_standardized;
  /// Kernel indices with theta > 0.
  std::vector<std::size_t> active;
};

/// Alternating MKL: SVM dual on the theta-weighted Gram, then the
/// closed-form group-lasso weight update, until theta settles.
TrainedModel mklgl_train(const DiffSet& data, const MklConfig& config);

/// sum_k alpha_k y_k sum_m theta_m K_m(x, x_k) on standardized inputs, no bias.
double decision_value(const TrainedModel& model, std::span<const double> x);

/// 0 when x is exactly zero or the decision value is exactly 0, otherwise
/// its sign.
int predict_label(const TrainedModel& model, std::span<const double> x);

/// Evaluates all 45 kernels on (x, z) using the squaring identity between
/// neighbouring bandwidths; agrees with kernel_eval to ~1e-13 relative.
std::array<double, kKernelCount> kernel_bank_values(std::span<const double> x,
                                                    std::span<const double> z);

}  // namespace priq

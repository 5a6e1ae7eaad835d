#include "priq/mkl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "priq/error.hpp"
#include "priq/kernels.hpp"

namespace priq {

std::vector<KernelSpec> build_kernel_bank(std::span<const FeatureGroup> layout) {
  if (layout.size() != kFeatureGroups) {
    throw Error(ErrorKind::kInvalidArgument,
                "kernel bank needs " + std::to_string(kFeatureGroups) + " feature groups, got " +
                    std::to_string(layout.size()));
  }
  std::size_t next = 0;
  for (const auto& g : layout) {
    if (g.offset != next || g.size == 0) {
      throw Error(ErrorKind::kInvalidArgument, "feature groups must be contiguous and non-empty");
    }
    next += g.size;
  }
  if (next != kFeatureDim) {
    throw Error(ErrorKind::kInvalidArgument, "feature groups do not cover the feature vector");
  }
  std::vector<KernelSpec> bank;
  bank.reserve(kKernelCount);
  for (std::size_t g = 0; g < layout.size(); ++g) {
    for (double sigma : kBandwidths) {
      bank.push_back({static_cast<int>(g), layout[g].offset, layout[g].size, sigma});
    }
  }
  for (double sigma : kBandwidths) bank.push_back({kFullGroup, 0, kFeatureDim, sigma});
  return bank;
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> z) {
  double d = 0.0;
  for (std::size_t c = spec.offset; c < spec.offset + spec.size; ++c) {
    const double diff = x[c] - z[c];
    d += diff * diff;
  }
  return std::exp(-d / (2.0 * spec.sigma * spec.sigma * static_cast<double>(spec.size)));
}

std::array<double, kKernelCount> kernel_bank_values(std::span<const double> x,
                                                    std::span<const double> z) {
  std::array<double, kKernelCount> out{};
  double full = 0.0;
  for (std::size_t g = 0; g < kFeatureGroups; ++g) {
    const auto& grp = kFeatureLayout[g];
    double d = 0.0;
    for (std::size_t c = grp.offset; c < grp.offset + grp.size; ++c) {
      const double diff = x[c] - z[c];
      d += diff * diff;
    }
    full += d;
    bandwidth_ladder(std::exp(-d / (32.0 * static_cast<double>(grp.size))),
                     out.data() + g * kBandwidthCount);
  }
  bandwidth_ladder(std::exp(-full / (32.0 * static_cast<double>(kFeatureDim))),
                   out.data() + kFeatureGroups * kBandwidthCount);
  return out;
}

// ---------------------------------------------------------------------------
// SMO

double svm_dual_objective(const DenseMatrix& K, std::span<const int> y,
                          std::span<const double> alpha) {
  double linear = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < K.n; ++i) {
    linear += alpha[i];
    if (alpha[i] == 0.0) continue;
    const double* row = K.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < K.n; ++j) acc += alpha[j] * y[j] * row[j];
    quad += alpha[i] * y[i] * acc;
  }
  return linear - 0.5 * quad;
}

SvmSolution svm_solve_dual(const DenseMatrix& K, std::span<const int> y, const SvmOptions& opt,
                           std::span<const double> warm_start) {
  const std::size_t n = K.n;
  if (y.size() != n) throw Error(ErrorKind::kInvalidArgument, "label count does not match Gram");
  if (!(opt.C > 0.0)) throw Error(ErrorKind::kInvalidArgument, "C must be positive");
  if (opt.mirrored && n % 2 != 0) {
    throw Error(ErrorKind::kInvalidArgument, "mirrored problem needs an even row count");
  }
  constexpr double kTau = 1e-12;
  const double C = opt.C;

  SvmSolution sol;
  sol.alpha.assign(n, 0.0);
  if (!warm_start.empty()) {
    if (warm_start.size() != n) throw Error(ErrorKind::kInvalidArgument, "warm start size mismatch");
    double eq = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(warm_start[i] >= 0.0 && warm_start[i] <= C)) {
        throw Error(ErrorKind::kInvalidArgument, "warm start outside [0, C]");
      }
      eq += y[i] * warm_start[i];
      total += warm_start[i];
    }
    if (std::abs(eq) > 1e-8 * std::max(1.0, total)) {
      throw Error(ErrorKind::kInvalidArgument, "warm start violates the equality constraint");
    }
    std::copy(warm_start.begin(), warm_start.end(), sol.alpha.begin());
  }
  auto& alpha = sol.alpha;

  // Gradient of f(a) = a'Qa/2 - e'a with Q = yy' o K.
  std::vector<double> grad(n, -1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] == 0.0) continue;
    const double* row = K.row(i);
    for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * y[i] * row[t] * alpha[i];
  }

  auto in_up = [&](std::size_t t) { return y[t] > 0 ? alpha[t] < C : alpha[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return y[t] > 0 ? alpha[t] > 0.0 : alpha[t] < C; };

  double violation = std::numeric_limits<double>::infinity();
  std::size_t updates = 0;
  for (;;) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * grad[t] >= gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    std::size_t j = n;
    double best = std::numeric_limits<double>::infinity();
    if (i < n) {
      const double* ki = K.row(i);
      for (std::size_t t = 0; t < n; ++t) {
        if (!in_low(t)) continue;
        const double yg = y[t] * grad[t];
        gmax2 = std::max(gmax2, yg);
        const double b = gmax + yg;
        if (b <= 0.0) continue;
        double a = K(i, i) + K(t, t) - 2.0 * ki[t];
        if (a <= 0.0) a = kTau;
        const double obj = -(b * b) / a;
        if (obj <= best) {
          best = obj;
          j = t;
        }
      }
    }
    violation = (i < n && gmax2 > -std::numeric_limits<double>::infinity()) ? gmax + gmax2 : 0.0;
    if (violation < opt.tol || j == n) {
      sol.converged = true;
      break;
    }
    if (updates >= opt.max_updates) break;
    ++updates;

    const double old_i = alpha[i];
    const double old_j = alpha[j];
    double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
    if (quad <= 0.0) quad = kTau;
    if (y[i] != y[j]) {
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double di = (alpha[i] - old_i) * y[i];
    const double dj = (alpha[j] - old_j) * y[j];
    const double* ki = K.row(i);
    const double* kj = K.row(j);
    for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * (ki[t] * di + kj[t] * dj);
  }

  sol.updates = updates;
  sol.max_violation = violation;
  if (!sol.converged && violation > 10.0 * opt.tol) {
    sol.warning = "SMO stopped after " + std::to_string(updates) +
                  " updates with KKT violation " + std::to_string(violation);
  }
  if (opt.mirrored) {
    const std::size_t half = n / 2;
    for (std::size_t k = 0; k < half; ++k) {
      const double avg = 0.5 * (alpha[k] + alpha[half + k]);
      alpha[k] = avg;
      alpha[half + k] = avg;
    }
  }
  sol.objective = svm_dual_objective(K, y, alpha);
  return sol;
}

// ---------------------------------------------------------------------------
// MKLGL

void TrainedModel::prepare() {
  const std::size_t n = sv_count();
  sv_standardized.resize(n * kFeatureDim);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < kFeatureDim; ++c) {
      sv_standardized[r * kFeatureDim + c] =
          (sv_rows[r * kFeatureDim + c] - norm_mu[c]) / norm_sd[c];
    }
  }
  active.clear();
  for (std::size_t m = 0; m < kKernelCount; ++m) {
    if (theta[m] > 0.0) active.push_back(m);
  }
}

namespace {

void check_training_set(const DiffSet& data) {
  if (data.rows() == 0 || data.n_pairs == 0) {
    throw Error(ErrorKind::kInvalidArgument, "empty training set");
  }
  if (data.rows() != 2 * data.n_pairs || data.x.size() != data.rows() * kFeatureDim) {
    throw Error(ErrorKind::kInvariant, "training set is not mirror-closed");
  }
  const bool has_pos = std::find(data.y.begin(), data.y.end(), 1) != data.y.end();
  const bool has_neg = std::find(data.y.begin(), data.y.end(), -1) != data.y.end();
  if (!has_pos || !has_neg) {
    throw Error(ErrorKind::kInvalidArgument, "training labels contain a single class");
  }
  for (double v : data.x) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kInvalidArgument, "non-finite feature difference");
  }
}

// theta_m <- gamma_m^(1/(1+p)) / (sum_l gamma_l^(p/(1+p)))^(1/p), then
// tiny entries zeroed and the l_p norm restored to 1.
std::array<double, kKernelCount> update_weights(const std::array<double, kKernelCount>& theta,
                                                const std::array<double, kKernelCount>& quad,
                                                double p) {
  std::array<double, kKernelCount> gamma{};
  for (std::size_t m = 0; m < kKernelCount; ++m) {
    gamma[m] = std::max(0.0, theta[m] * theta[m] * quad[m]);
  }
  double denom = 0.0;
  for (double g : gamma) denom += std::pow(g, p / (1.0 + p));
  if (!(denom > 0.0)) return theta;
  denom = std::pow(denom, 1.0 / p);

  std::array<double, kKernelCount> next{};
  for (std::size_t m = 0; m < kKernelCount; ++m) {
    next[m] = std::pow(gamma[m], 1.0 / (1.0 + p)) / denom;
    if (next[m] < 1e-12) next[m] = 0.0;
  }
  double norm = 0.0;
  for (double t : next) norm += std::pow(t, p);
  norm = std::pow(norm, 1.0 / p);
  for (double& t : next) t /= norm;
  return next;
}

}  // namespace

TrainedModel mklgl_train(const DiffSet& data, const MklConfig& config) {
  check_training_set(data);
  if (!(config.p > 0.0)) throw Error(ErrorKind::kInvalidArgument, "p must be positive");

  const std::size_t n_half = data.n_pairs;
  const std::size_t n_rows = data.rows();

  TrainedModel model;
  model.config = config;
  model.bank = build_kernel_bank();

  // Column statistics. Mirrored rows cancel exactly in the pairwise sum, so
  // the mean of a mirror-closed set is exactly zero.
  for (std::size_t c = 0; c < kFeatureDim; ++c) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < n_half; ++k) {
      const double a = data.x[k * kFeatureDim + c];
      const double b = data.x[(n_half + k) * kFeatureDim + c];
      sum += a + b;
      sq += a * a + b * b;
    }
    const double mean = sum / static_cast<double>(n_rows);
    const double var = sq / static_cast<double>(n_rows) - mean * mean;
    model.norm_mu[c] = mean;
    model.norm_sd[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }

  std::vector<double> z_half(n_half * kFeatureDim);
  for (std::size_t k = 0; k < n_half; ++k) {
    for (std::size_t c = 0; c < kFeatureDim; ++c) {
      z_half[k * kFeatureDim + c] = (data.x[k * kFeatureDim + c] - model.norm_mu[c]) / model.norm_sd[c];
    }
  }
  const MirrorKernelCache cache(z_half, n_half);

  std::array<double, kKernelCount> theta;
  theta.fill(1.0 / static_cast<double>(kKernelCount));
  if (config.p != 1.0) {
    // Start on the unit l_p sphere.
    const double s = std::pow(static_cast<double>(kKernelCount), -1.0 / config.p);
    theta.fill(s);
  }

  SvmOptions svm;
  svm.C = config.C;
  svm.tol = config.inner_tol;
  svm.max_updates = config.max_updates;
  svm.mirrored = true;

  DenseMatrix gram;
  auto& trace = model.trace;
  auto solve = [&](std::span<const double> warm) {
    cache.combined_gram(theta, gram);
    SvmSolution s = svm_solve_dual(gram, data.y, svm, warm);
    if (s.warning) trace.warnings.push_back(*s.warning);
    trace.objective_history.push_back(s.objective);
    trace.theta_history.push_back(theta);
    return s;
  };

  SvmSolution sol = solve({});
  std::vector<double> weights(n_half);
  for (int outer = 1; outer <= config.max_outer; ++outer) {
    for (std::size_t k = 0; k < n_half; ++k) weights[k] = sol.alpha[k] * data.y[k];
    const auto quad = cache.kernel_quadratics(weights);
    const auto next = update_weights(theta, quad, config.p);
    double change = 0.0;
    for (std::size_t m = 0; m < kKernelCount; ++m) change = std::max(change, std::abs(next[m] - theta[m]));
    theta = next;
    sol = solve(sol.alpha);
    trace.outer_iterations = outer;
    if (change < config.outer_tol) {
      trace.converged = true;
      break;
    }
  }

  model.theta = theta;
  trace.alpha = sol.alpha;
  trace.labels = data.y;
  for (std::size_t r = 0; r < n_rows; ++r) {
    if (sol.alpha[r] < 1e-8) continue;
    const auto row = data.row(r);
    model.sv_rows.insert(model.sv_rows.end(), row.begin(), row.end());
    model.sv_alpha.push_back(sol.alpha[r]);
    model.sv_labels.push_back(data.y[r]);
  }
  model.prepare();
  return model;
}

double decision_value(const TrainedModel& model, std::span<const double> x) {
  if (!model.trained()) throw Error(ErrorKind::kNotTrained, "model has no support vectors");
  if (x.size() != kFeatureDim) throw Error(ErrorKind::kInvalidArgument, "feature size mismatch");

  std::array<double, kFeatureDim> z{};
  for (std::size_t c = 0; c < kFeatureDim; ++c) z[c] = (x[c] - model.norm_mu[c]) / model.norm_sd[c];

  // Selectors that carry weight; others are skipped entirely.
  bool need[kFeatureGroups + 1] = {};
  for (std::size_t m : model.active) need[m / kBandwidthCount] = true;
  const bool need_full = need[kFeatureGroups];

  double f = 0.0;
  double k5[kBandwidthCount];
  for (std::size_t r = 0; r < model.sv_count(); ++r) {
    const double* sv = model.sv_standardized.data() + r * kFeatureDim;
    double group_d[kFeatureGroups];
    double full = 0.0;
    for (std::size_t g = 0; g < kFeatureGroups; ++g) {
      if (!need[g] && !need_full) continue;
      const auto& grp = kFeatureLayout[g];
      double d = 0.0;
      for (std::size_t c = grp.offset; c < grp.offset + grp.size; ++c) {
        const double diff = z[c] - sv[c];
        d += diff * diff;
      }
      group_d[g] = d;
      full += d;
    }
    double k = 0.0;
    for (std::size_t s = 0; s <= kFeatureGroups; ++s) {
      if (!need[s]) continue;
      const double d = s == kFeatureGroups ? full : group_d[s];
      const double dim = s == kFeatureGroups ? static_cast<double>(kFeatureDim)
                                             : static_cast<double>(kFeatureLayout[s].size);
      bandwidth_ladder(std::exp(-d / (32.0 * dim)), k5);
      for (std::size_t b = 0; b < kBandwidthCount; ++b) k += model.theta[s * kBandwidthCount + b] * k5[b];
    }
    f += model.sv_alpha[r] * model.sv_labels[r] * k;
  }
  return f + model.bias;
}

int predict_label(const TrainedModel& model, std::span<const double> x) {
  if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; })) return 0;
  const double f = decision_value(model, x);
  return (f > 0.0) - (f < 0.0);
}

}  // namespace priq

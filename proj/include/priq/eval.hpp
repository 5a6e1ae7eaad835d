#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "priq/corpus.hpp"
#include "priq/features.hpp"
#include "priq/mkl.hpp"

namespace priq {

// ---------------------------------------------------------------------------
// Correlation metrics. Each sets *degenerate (when given) and returns 0 if
// either input is constant. Inputs must have equal length >= 3.

/// Average-tie ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> v);
double plcc(std::span<const double> a, std::span<const double> b, bool* degenerate = nullptr);
double srcc(std::span<const double> a, std::span<const double> b, bool* degenerate = nullptr);
/// Tau-b, O(n log n).
double krcc(std::span<const double> a, std::span<const double> b, bool* degenerate = nullptr);

// ---------------------------------------------------------------------------
// Logistic remapping

using LogisticParams = std::array<double, 5>;

/// b1 (1/2 - 1/(1 + exp(b2 (x - b3)))) + b4 x + b5
double vqeg_logistic(const LogisticParams& beta, double x);

struct LogisticFit {
  LogisticParams beta{};
  std::vector<double> remapped;
  double sse = 0.0;
  bool degenerate = false;
  std::optional<std::string> warning;
};

/// Least-squares fit of the logistic by Nelder-Mead, started from
/// (range(t), 1/std(p), mean(p), 0, mean(t)) and from the linear fit; keeps
/// whichever ends lower. Constant pred yields the identity with a warning.
LogisticFit logistic_remap(std::span<const double> pred, std::span<const double> target);

// ---------------------------------------------------------------------------
// Experiment protocol

struct Dataset {
  Manifest manifest;
  FeatureTable features;
  /// Scores used to label training pairs; empty means manifest scores. Lets
  /// callers train on noisy labels while evaluating against clean ones.
  std::vector<double> label_scores;
};

struct ProtocolEntry {
  int n_train_groups = 20;
  double threshold = 10.0;
  std::size_t n_pairs = 2000;
};

struct Protocol {
  std::vector<ProtocolEntry> per_dataset;  ///< one entry per dataset
  int trials = 100;
  MklConfig mkl;
};

struct DatasetMetrics {
  std::string name;
  std::size_t n_test = 0;
  double srcc = 0.0;
  double krcc = 0.0;
  double plcc = 0.0;
  std::map<std::string, double> breakdown;  ///< tag -> srcc
  friend bool operator==(const DatasetMetrics&, const DatasetMetrics&) = default;
};

struct TrialResult {
  int index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::size_t n_pairs = 0;
  std::size_t n_train = 0;
  /// Test-count-weighted means of the per-dataset values.
  double srcc = 0.0;
  double krcc = 0.0;
  double plcc = 0.0;
  std::map<std::string, double> breakdown;
  std::vector<DatasetMetrics> datasets;
  std::vector<std::string> warnings;
  friend bool operator==(const TrialResult&, const TrialResult&) = default;
};

struct ExperimentSummary {
  int trials_requested = 0;
  int trials_completed = 0;
  int trials_failed = 0;
  double median_srcc = 0.0;
  double median_krcc = 0.0;
  double median_plcc = 0.0;
  double srcc_std = 0.0;  ///< sample standard deviation (n - 1)
  std::map<std::string, double> median_breakdown;
  std::vector<TrialResult> trials;
  bool feasible() const { return trials_completed > 0; }
};

/// Per-trial seed, a pure function of (master seed, trial index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// Runs one trial: per-dataset group split, pair sampling, pooled training,
/// scoring of every held-out image, logistic remap and metrics.
TrialResult run_trial(std::span<const Dataset> datasets, const Protocol& protocol, int index,
                      std::uint64_t master_seed);

/// Throws Error(kInfeasible) when a dataset has too few groups. Trials that
/// throw are recorded with ok = false and left out of the medians.
ExperimentSummary run_trials(std::span<const Dataset> datasets, const Protocol& protocol,
                             std::uint64_t seed);

/// Recomputes medians and the srcc deviation from summary.trials.
void summarize(ExperimentSummary& summary);

struct SweepPoint {
  double threshold = 0.0;
  ExperimentSummary summary;
};

/// run_trials per threshold on a single dataset. Splits depend only on the
/// seed and trial index, so every threshold sees the same splits.
std::vector<SweepPoint> threshold_sweep(const Dataset& dataset, const Protocol& protocol,
                                        std::span<const double> thresholds, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Reports

std::string format_summary_table(const ExperimentSummary& summary);
std::string format_sweep_table(std::span<const SweepPoint> sweep);

/// JSON results file: config, one record per trial and a summary record.
void write_experiment_report(const std::filesystem::path& path, const std::string& config_json,
                             const ExperimentSummary& summary);
void write_sweep_report(const std::filesystem::path& path, const std::string& config_json,
                        std::span<const SweepPoint> sweep);

}  // namespace priq

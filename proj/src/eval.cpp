#include "priq/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <gsl/gsl_multimin.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "priq/error.hpp"
#include "priq/pairs.hpp"
#include "priq/quality.hpp"

namespace priq {

namespace {

void require_paired(std::span<const double> a, std::span<const double> b, std::size_t min_len,
                    const char* what) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kInvalidArgument, std::string(what) + ": length mismatch");
  }
  if (a.size() < min_len) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string(what) + ": needs at least " + std::to_string(min_len) + " values");
  }
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double da = a[k] - ma;
    const double db = b[k] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

// Pairs tied within runs of equal values, given a sorted sequence.
template <class Eq>
std::int64_t tied_pairs(std::size_t n, Eq equal) {
  std::int64_t total = 0;
  std::int64_t run = 1;
  for (std::size_t k = 1; k <= n; ++k) {
    if (k < n && equal(k - 1, k)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

// Sorts v ascending and returns the number of strict inversions.
std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                              std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, o = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<std::int64_t>(mid - i);
      buf[o++] = v[j++];
    } else {
      buf[o++] = v[i++];
    }
  }
  while (i < mid) buf[o++] = v[i++];
  while (j < hi) buf[o++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return inv;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
  std::vector<double> ranks(v.size());
  std::size_t k = 0;
  while (k < order.size()) {
    std::size_t e = k + 1;
    while (e < order.size() && v[order[e]] == v[order[k]]) ++e;
    // positions k..e-1 hold 1-based ranks k+1..e
    const double r = 0.5 * static_cast<double>(k + 1 + e);
    for (std::size_t t = k; t < e; ++t) ranks[order[t]] = r;
    k = e;
  }
  return ranks;
}

double plcc(std::span<const double> a, std::span<const double> b, bool* degenerate) {
  require_paired(a, b, 3, "plcc");
  const bool deg = is_constant(a) || is_constant(b);
  if (degenerate) *degenerate = deg;
  return deg ? 0.0 : pearson(a, b);
}

double srcc(std::span<const double> a, std::span<const double> b, bool* degenerate) {
  require_paired(a, b, 3, "srcc");
  const bool deg = is_constant(a) || is_constant(b);
  if (degenerate) *degenerate = deg;
  if (deg) return 0.0;
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

double krcc(std::span<const double> a, std::span<const double> b, bool* degenerate) {
  require_paired(a, b, 3, "krcc");
  const bool deg = is_constant(a) || is_constant(b);
  if (degenerate) *degenerate = deg;
  if (deg) return 0.0;

  const std::size_t n = a.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return a[x] < a[y] || (a[x] == a[y] && b[x] < b[y]);
  });

  const std::int64_t n1 = tied_pairs(n, [&](std::size_t p, std::size_t q) { return a[order[p]] == a[order[q]]; });
  const std::int64_t n3 = tied_pairs(n, [&](std::size_t p, std::size_t q) {
    return a[order[p]] == a[order[q]] && b[order[p]] == b[order[q]];
  });

  std::vector<double> bs(n), buf(n);
  for (std::size_t k = 0; k < n; ++k) bs[k] = b[order[k]];
  const std::int64_t swaps = count_inversions(bs, buf, 0, n);
  const std::int64_t n2 = tied_pairs(n, [&](std::size_t p, std::size_t q) { return bs[p] == bs[q]; });

  const std::int64_t n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const double num = static_cast<double>(n0 - n1 - n2 + n3 - 2 * swaps);
  const double den = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
  return std::clamp(num / den, -1.0, 1.0);
}

// ---------------------------------------------------------------------------

double vqeg_logistic(const LogisticParams& beta, double x) {
  return beta[0] * (0.5 - 1.0 / (1.0 + std::exp(beta[1] * (x - beta[2])))) + beta[3] * x + beta[4];
}

namespace {

struct FitData {
  std::span<const double> pred;
  std::span<const double> target;
};

double sse_of(const LogisticParams& beta, const FitData& d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d.pred.size(); ++k) {
    const double r = vqeg_logistic(beta, d.pred[k]) - d.target[k];
    s += r * r;
  }
  return std::isfinite(s) ? s : HUGE_VAL;
}

double gsl_sse(const gsl_vector* v, void* params) {
  LogisticParams beta;
  for (std::size_t k = 0; k < 5; ++k) beta[k] = gsl_vector_get(v, k);
  return sse_of(beta, *static_cast<const FitData*>(params));
}

struct Candidate {
  LogisticParams beta;
  double sse;
};

Candidate nelder_mead(const FitData& data, LogisticParams start, const LogisticParams& step) {
  gsl_multimin_function fn{&gsl_sse, 5, const_cast<FitData*>(&data)};
  gsl_vector* x = gsl_vector_alloc(5);
  gsl_vector* s = gsl_vector_alloc(5);
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 5);

  Candidate best{start, sse_of(start, data)};
  // Restarting from the previous optimum un-collapses a degenerate simplex.
  for (int restart = 0; restart < 3; ++restart) {
    for (std::size_t k = 0; k < 5; ++k) {
      gsl_vector_set(x, k, best.beta[k]);
      const double sk = std::max(std::abs(best.beta[k]) * 0.1, step[k]);
      gsl_vector_set(s, k, sk);
    }
    gsl_multimin_fminimizer_set(m, &fn, x, s);
    for (int it = 0; it < 5000; ++it) {
      if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
      if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-12) == GSL_SUCCESS) break;
    }
    const double f = gsl_multimin_fminimizer_minimum(m);
    if (!(f < best.sse)) break;
    const bool small_gain = best.sse - f <= 1e-12 * (1.0 + f);
    for (std::size_t k = 0; k < 5; ++k) best.beta[k] = gsl_vector_get(m->x, k);
    best.sse = f;
    if (small_gain) break;
  }

  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(s);
  gsl_vector_free(x);
  return best;
}

}  // namespace

LogisticFit logistic_remap(std::span<const double> pred, std::span<const double> target) {
  require_paired(pred, target, 5, "logistic_remap");
  LogisticFit fit;
  if (is_constant(pred)) {
    fit.beta = {0.0, 0.0, 0.0, 1.0, 0.0};
    fit.remapped.assign(pred.begin(), pred.end());
    fit.degenerate = true;
    fit.warning = "constant predictions; identity remap used";
    fit.sse = sse_of(fit.beta, {pred, target});
    return fit;
  }

  const FitData data{pred, target};
  const double mp = mean_of(pred);
  const double mt = mean_of(target);
  double vp = 0.0, cpt = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    vp += (pred[k] - mp) * (pred[k] - mp);
    cpt += (pred[k] - mp) * (target[k] - mt);
  }
  const double sd_p = std::sqrt(vp / static_cast<double>(pred.size()));
  const auto [tmin, tmax] = std::minmax_element(target.begin(), target.end());
  const auto [pmin, pmax] = std::minmax_element(pred.begin(), pred.end());
  const double range_t = std::max(*tmax - *tmin, 1e-12);
  const double range_p = *pmax - *pmin;

  const LogisticParams step{0.1 * range_t, 0.5 / sd_p, 0.5 * sd_p, 0.1 * range_t / range_p, 0.1 * range_t};

  const LogisticParams documented{range_t, 1.0 / sd_p, mp, 0.0, mt};
  const double slope = cpt / vp;
  const LogisticParams linear{0.0, 1.0 / sd_p, mp, slope, mt - slope * mp};

  std::vector<Candidate> cands{{linear, sse_of(linear, data)}};
  cands.push_back(nelder_mead(data, documented, step));
  cands.push_back(nelder_mead(data, linear, step));
  const auto best = std::min_element(cands.begin(), cands.end(),
                                     [](const Candidate& x, const Candidate& y) { return x.sse < y.sse; });

  fit.beta = best->beta;
  fit.sse = best->sse;
  fit.remapped.resize(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) fit.remapped[k] = vqeg_logistic(fit.beta, pred[k]);

  // A lower SSE implies a higher |PLCC| but not its sign; never do worse
  // than the affine fit.
  std::vector<double> lin(pred.size());
  for (std::size_t k = 0; k < pred.size(); ++k) lin[k] = vqeg_logistic(linear, pred[k]);
  if (pearson(fit.remapped, target) < pearson(lin, target)) {
    fit.beta = linear;
    fit.sse = cands.front().sse;
    fit.remapped = std::move(lin);
  }
  return fit;
}

// ---------------------------------------------------------------------------

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(master);
  h = mix(h ^ (stream * 0xd1b54a32d192ed03ULL));
  return mix(h ^ index);
}

namespace {

constexpr std::uint64_t kTrialStream = 0;
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kPairStream = 2;

std::vector<double> label_scores_for(const Dataset& ds, const Manifest& side) {
  if (ds.label_scores.empty()) return side.scores();
  if (ds.label_scores.size() != ds.manifest.size()) {
    throw Error(ErrorKind::kInvalidArgument, "label score count does not match manifest");
  }
  std::unordered_map<std::int64_t, std::size_t> pos;
  for (std::size_t k = 0; k < ds.manifest.size(); ++k) pos.emplace(ds.manifest.images[k].id, k);
  std::vector<double> out;
  out.reserve(side.size());
  for (const auto& im : side.images) out.push_back(ds.label_scores[pos.at(im.id)]);
  return out;
}

// Quality-oriented target: higher is better.
std::vector<double> quality_target(const Manifest& m) {
  auto t = m.scores();
  if (m.polarity() == Polarity::kDmos) {
    for (double& v : t) v = -v;
  }
  return t;
}

DatasetMetrics evaluate_side(const Manifest& test, std::span<const double> pred,
                             std::vector<std::string>& warnings) {
  DatasetMetrics dm;
  dm.name = test.name;
  dm.n_test = test.size();
  const auto target = quality_target(test);

  const LogisticFit fit = logistic_remap(pred, target);
  if (fit.warning) warnings.push_back(test.name + ": " + *fit.warning);
  bool deg = false;
  dm.srcc = srcc(pred, target, &deg);
  dm.krcc = krcc(pred, target);
  dm.plcc = plcc(fit.remapped, target);
  if (deg) warnings.push_back(test.name + ": constant input to correlation");

  std::map<std::string, std::vector<std::size_t>> by_tag;
  for (std::size_t k = 0; k < test.size(); ++k) {
    if (test.images[k].distortion_tag != "ref") by_tag[test.images[k].distortion_tag].push_back(k);
  }
  for (const auto& [tag, idx] : by_tag) {
    if (idx.size() < 3) continue;
    std::vector<double> p, t;
    for (std::size_t k : idx) {
      p.push_back(pred[k]);
      t.push_back(target[k]);
    }
    dm.breakdown[tag] = srcc(p, t);
  }
  return dm;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

void check_protocol(std::span<const Dataset> datasets, const Protocol& protocol) {
  if (datasets.empty()) throw Error(ErrorKind::kInvalidArgument, "no datasets given");
  if (protocol.per_dataset.size() != datasets.size()) {
    throw Error(ErrorKind::kInvalidArgument, "protocol needs one entry per dataset");
  }
  if (protocol.trials < 1) throw Error(ErrorKind::kInvalidArgument, "trials must be >= 1");
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const int g = datasets[d].manifest.group_count();
    const int ng = protocol.per_dataset[d].n_train_groups;
    if (ng < 1 || ng >= g) {
      throw Error(ErrorKind::kInfeasible, datasets[d].manifest.name + ": " + std::to_string(ng) +
                                              " training groups requested but the manifest has " +
                                              std::to_string(g));
    }
  }
}

}  // namespace

TrialResult run_trial(std::span<const Dataset> datasets, const Protocol& protocol, int index,
                      std::uint64_t master_seed) {
  TrialResult r;
  r.index = index;
  r.seed = derive_seed(master_seed, kTrialStream, static_cast<std::uint64_t>(index));

  FeatureTable pooled;
  std::vector<PrefPair> pairs;
  std::vector<Manifest> tests;
  std::int64_t next_key = 0;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const Dataset& ds = datasets[d];
    const ProtocolEntry& e = protocol.per_dataset[d];
    Split split = split_by_group(ds.manifest, e.n_train_groups, derive_seed(r.seed, kSplitStream, d));
    const auto scores = label_scores_for(ds, split.train);
    const auto local = sample_pairs(scores, ds.manifest.polarity(), e.threshold, e.n_pairs,
                                    derive_seed(r.seed, kPairStream, d));
    // Pool training images of all datasets under fresh keys; scores on
    // different scales are combined without realignment.
    const std::int64_t base = next_key;
    for (const auto& im : split.train.images) pooled.insert(next_key++, ds.features.at(im.id));
    for (const auto& p : local) pairs.push_back({base + p.i, base + p.j, p.y});
    tests.push_back(std::move(split.test));
  }
  r.n_pairs = pairs.size();
  r.n_train = pooled.size();

  TrainedModel model = mklgl_train(build_diffset(pairs, pooled), protocol.mkl);
  model.train_features = std::move(pooled);
  r.warnings = model.trace.warnings;

  double wsum = 0.0;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const auto reports = score_batch(model, tests[d], datasets[d].features);
    std::vector<double> pred;
    pred.reserve(reports.size());
    for (const auto& q : reports) pred.push_back(q.score);
    DatasetMetrics dm = evaluate_side(tests[d], pred, r.warnings);

    const double w = static_cast<double>(dm.n_test);
    r.srcc += w * dm.srcc;
    r.krcc += w * dm.krcc;
    r.plcc += w * dm.plcc;
    wsum += w;
    for (const auto& [tag, v] : dm.breakdown) {
      r.breakdown[datasets.size() > 1 ? dm.name + "/" + tag : tag] = v;
    }
    r.datasets.push_back(std::move(dm));
  }
  r.srcc /= wsum;
  r.krcc /= wsum;
  r.plcc /= wsum;
  r.ok = true;
  return r;
}

void summarize(ExperimentSummary& s) {
  std::vector<double> sr, kr, pl;
  std::map<std::string, std::vector<double>> bd;
  s.trials_completed = 0;
  s.trials_failed = 0;
  for (const auto& t : s.trials) {
    if (!t.ok) {
      ++s.trials_failed;
      continue;
    }
    ++s.trials_completed;
    sr.push_back(t.srcc);
    kr.push_back(t.krcc);
    pl.push_back(t.plcc);
    for (const auto& [tag, v] : t.breakdown) bd[tag].push_back(v);
  }
  s.median_srcc = median_of(sr);
  s.median_krcc = median_of(kr);
  s.median_plcc = median_of(pl);
  s.median_breakdown.clear();
  for (auto& [tag, v] : bd) s.median_breakdown[tag] = median_of(v);
  s.srcc_std = 0.0;
  if (sr.size() >= 2) {
    const double m = mean_of(sr);
    double acc = 0.0;
    for (double v : sr) acc += (v - m) * (v - m);
    s.srcc_std = std::sqrt(acc / static_cast<double>(sr.size() - 1));
  }
}

ExperimentSummary run_trials(std::span<const Dataset> datasets, const Protocol& protocol,
                             std::uint64_t seed) {
  check_protocol(datasets, protocol);
  ExperimentSummary s;
  s.trials_requested = protocol.trials;
  for (int t = 0; t < protocol.trials; ++t) {
    TrialResult r;
    try {
      r = run_trial(datasets, protocol, t, seed);
      spdlog::debug("trial {}: srcc {:.4f} krcc {:.4f} plcc {:.4f}", t, r.srcc, r.krcc, r.plcc);
    } catch (const Error& e) {
      r = TrialResult{};
      r.index = t;
      r.seed = derive_seed(seed, kTrialStream, static_cast<std::uint64_t>(t));
      r.error = std::string(to_string(e.kind())) + ": " + e.what();
      spdlog::warn("trial {} failed: {}", t, r.error);
    } catch (const std::exception& e) {
      r = TrialResult{};
      r.index = t;
      r.seed = derive_seed(seed, kTrialStream, static_cast<std::uint64_t>(t));
      r.error = e.what();
      spdlog::warn("trial {} failed: {}", t, r.error);
    }
    s.trials.push_back(std::move(r));
  }
  summarize(s);
  return s;
}

std::vector<SweepPoint> threshold_sweep(const Dataset& dataset, const Protocol& protocol,
                                        std::span<const double> thresholds, std::uint64_t seed) {
  std::vector<SweepPoint> out;
  std::span<const Dataset> one(&dataset, 1);
  for (double t : thresholds) {
    Protocol p = protocol;
    p.per_dataset.resize(1);
    p.per_dataset[0].threshold = t;
    spdlog::info("sweep: threshold {}", t);
    out.push_back({t, run_trials(one, p, seed)});
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string format_summary_table(const ExperimentSummary& s) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "trials: %d completed, %d failed (of %d)\n", s.trials_completed,
                s.trials_failed, s.trials_requested);
  out += line;
  std::snprintf(line, sizeof line, "%-12s %8s\n", "metric", "median");
  out += line;
  std::snprintf(line, sizeof line, "%-12s %8.4f  (std %.4f)\n", "SRCC", s.median_srcc, s.srcc_std);
  out += line;
  std::snprintf(line, sizeof line, "%-12s %8.4f\n", "KRCC", s.median_krcc);
  out += line;
  std::snprintf(line, sizeof line, "%-12s %8.4f\n", "PLCC", s.median_plcc);
  out += line;
  for (const auto& [tag, v] : s.median_breakdown) {
    std::snprintf(line, sizeof line, "  SRCC %-18s %8.4f\n", tag.c_str(), v);
    out += line;
  }
  return out;
}

std::string format_sweep_table(std::span<const SweepPoint> sweep) {
  std::string out = "threshold   SRCC      KRCC      PLCC      trials\n";
  char line[160];
  for (const auto& p : sweep) {
    if (!p.summary.feasible()) {
      std::snprintf(line, sizeof line, "%-10g  infeasible\n", p.threshold);
    } else {
      std::snprintf(line, sizeof line, "%-10g  %-8.4f  %-8.4f  %-8.4f  %d/%d\n", p.threshold,
                    p.summary.median_srcc, p.summary.median_krcc, p.summary.median_plcc,
                    p.summary.trials_completed, p.summary.trials_requested);
    }
    out += line;
  }
  return out;
}

namespace {

nlohmann::json trial_json(const TrialResult& t) {
  nlohmann::json j{{"index", t.index}, {"seed", t.seed}, {"ok", t.ok}};
  if (!t.ok) {
    j["error"] = t.error;
    return j;
  }
  j["srcc"] = t.srcc;
  j["krcc"] = t.krcc;
  j["plcc"] = t.plcc;
  j["n_pairs"] = t.n_pairs;
  j["n_train"] = t.n_train;
  j["breakdown"] = t.breakdown;
  nlohmann::json ds = nlohmann::json::array();
  for (const auto& d : t.datasets) {
    ds.push_back({{"name", d.name},
                  {"n_test", d.n_test},
                  {"srcc", d.srcc},
                  {"krcc", d.krcc},
                  {"plcc", d.plcc},
                  {"breakdown", d.breakdown}});
  }
  j["datasets"] = ds;
  if (!t.warnings.empty()) j["warnings"] = t.warnings;
  return j;
}

nlohmann::json summary_json(const ExperimentSummary& s) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : s.trials) trials.push_back(trial_json(t));
  return {{"summary",
           {{"trials_requested", s.trials_requested},
            {"trials_completed", s.trials_completed},
            {"trials_failed", s.trials_failed},
            {"feasible", s.feasible()},
            {"median_srcc", s.median_srcc},
            {"median_krcc", s.median_krcc},
            {"median_plcc", s.median_plcc},
            {"srcc_std", s.srcc_std},
            {"median_breakdown", s.median_breakdown}}},
          {"trials", trials}};
}

nlohmann::json parse_config(const std::string& config_json) {
  if (config_json.empty()) return nlohmann::json::object();
  return nlohmann::json::parse(config_json);
}

void dump(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

}  // namespace

void write_experiment_report(const std::filesystem::path& path, const std::string& config_json,
                             const ExperimentSummary& summary) {
  nlohmann::json j = summary_json(summary);
  j["config"] = parse_config(config_json);
  j["logistic_fit"] = "full test set";
  dump(path, j);
}

void write_sweep_report(const std::filesystem::path& path, const std::string& config_json,
                        std::span<const SweepPoint> sweep) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : sweep) {
    nlohmann::json e = summary_json(p.summary);
    e["threshold"] = p.threshold;
    points.push_back(std::move(e));
  }
  dump(path, {{"config", parse_config(config_json)}, {"logistic_fit", "full test set"}, {"sweep", points}});
}

}  // namespace priq

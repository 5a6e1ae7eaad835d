#include "priq/pairs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_set>

#include "priq/error.hpp"

namespace priq {

std::uint64_t max_pair_count(std::span<const double> scores, double threshold) {
  std::vector<double> q(scores.begin(), scores.end());
  std::sort(q.begin(), q.end());
  std::uint64_t count = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    // First index whose score exceeds q[i] + threshold; monotone in i.
    if (j < i + 1) j = i + 1;
    while (j < q.size() && !(q[j] - q[i] > threshold)) ++j;
    count += q.size() - j;
  }
  return count;
}

namespace {

int preference_label(double qi, double qj, Polarity polarity) {
  const int s = qi > qj ? 1 : -1;
  return polarity == Polarity::kMos ? s : -s;
}

std::vector<PrefPair> sample_by_enumeration(std::span<const double> q, Polarity polarity,
                                            double threshold, std::size_t want,
                                            std::mt19937_64& rng) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> eligible;
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (std::size_t j = i + 1; j < q.size(); ++j) {
      if (std::abs(q[i] - q[j]) > threshold) {
        eligible.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
      }
    }
  }
  want = std::min(want, eligible.size());
  for (std::size_t k = 0; k < want; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, eligible.size() - 1);
    std::swap(eligible[k], eligible[pick(rng)]);
  }
  std::vector<PrefPair> out;
  out.reserve(want);
  for (std::size_t k = 0; k < want; ++k) {
    auto [a, b] = eligible[k];
    if (rng() & 1) std::swap(a, b);
    out.push_back({a, b, preference_label(q[a], q[b], polarity)});
  }
  return out;
}

}  // namespace

std::vector<PrefPair> sample_pairs(std::span<const double> scores, Polarity polarity,
                                   double threshold, std::size_t n_pairs, std::uint64_t seed) {
  if (!(threshold >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "threshold must be >= 0");
  if (n_pairs < 1) throw Error(ErrorKind::kInvalidArgument, "pair count must be >= 1");
  const std::uint64_t eligible = max_pair_count(scores, threshold);
  if (eligible == 0) {
    throw Error(ErrorKind::kNoEligiblePairs,
                "no eligible pairs: no score gap exceeds threshold " + std::to_string(threshold));
  }
  const std::size_t n = scores.size();
  const double total = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  const double density = static_cast<double>(eligible) / total;
  const std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(n_pairs, eligible));

  std::mt19937_64 rng(seed);
  if (want == eligible || density < 0.01 || 2 * want > eligible) {
    return sample_by_enumeration(scores, polarity, threshold, want, rng);
  }

  // Rejection sampling over ordered pairs; accepted draws are uniform over
  // the not-yet-chosen eligible unordered pairs.
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::uniform_int_distribution<std::size_t> second(0, n - 2);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(2 * want);
  std::vector<PrefPair> out;
  out.reserve(want);
  const double cap = 20.0 * static_cast<double>(want) / density + 1000.0;
  for (double attempts = 0; out.size() < want; attempts += 1.0) {
    if (attempts > cap) return sample_by_enumeration(scores, polarity, threshold, want, rng);
    const std::size_t a = first(rng);
    std::size_t b = second(rng);
    if (b >= a) ++b;
    if (!(std::abs(scores[a] - scores[b]) > threshold)) continue;
    const std::uint64_t key = std::min(a, b) * static_cast<std::uint64_t>(n) + std::max(a, b);
    if (!seen.insert(key).second) continue;
    out.push_back({static_cast<std::int64_t>(a), static_cast<std::int64_t>(b),
                   preference_label(scores[a], scores[b], polarity)});
  }
  return out;
}

std::vector<PrefPair> gen_pairs_from_scores(const Manifest& manifest, double threshold,
                                            std::size_t n_pairs, std::uint64_t seed) {
  const std::vector<double> q = manifest.scores();
  auto pairs = sample_pairs(q, manifest.polarity(), threshold, n_pairs, seed);
  for (auto& p : pairs) {
    p.i = manifest.images[static_cast<std::size_t>(p.i)].id;
    p.j = manifest.images[static_cast<std::size_t>(p.j)].id;
  }
  return pairs;
}

int aggregate_votes(std::span<const int> votes) {
  if (votes.empty()) throw Error(ErrorKind::kInvalidArgument, "empty vote list");
  long sum = 0;
  for (int v : votes) {
    if (v < -1 || v > 1) throw Error(ErrorKind::kInvalidArgument, "vote outside {-1, 0, +1}");
    sum += v;
  }
  return (sum > 0) - (sum < 0);
}

std::vector<PrefPair> pairs_from_votes(std::span<const Vote> votes) {
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> slot;
  std::vector<std::pair<std::int64_t, std::int64_t>> keys;
  std::vector<std::vector<int>> grouped;
  for (const auto& v : votes) {
    if (v.i == v.j) throw Error(ErrorKind::kInvariant, "vote on an image paired with itself");
    const bool flip = v.i > v.j;
    const auto key = flip ? std::pair{v.j, v.i} : std::pair{v.i, v.j};
    auto [it, inserted] = slot.try_emplace(key, keys.size());
    if (inserted) {
      keys.push_back(key);
      grouped.emplace_back();
    }
    grouped[it->second].push_back(flip ? -v.label : v.label);
  }
  std::vector<PrefPair> out;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const int y = aggregate_votes(grouped[k]);
    if (y != 0) out.push_back({keys[k].first, keys[k].second, y});
  }
  return out;
}

DiffSet build_diffset(std::span<const PrefPair> pairs, const FeatureTable& features) {
  DiffSet d;
  const std::size_t n = pairs.size();
  d.n_pairs = n;
  d.x.resize(2 * n * kFeatureDim);
  d.y.resize(2 * n);
  d.pair_index.resize(2 * n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& p = pairs[k];
    if (p.i == p.j) throw Error(ErrorKind::kInvariant, "pair of an image with itself");
    if (p.y != 1 && p.y != -1) throw Error(ErrorKind::kInvariant, "pair label must be +1 or -1");
    const auto& fi = features.at(p.i);
    const auto& fj = features.at(p.j);
    double* fwd = d.x.data() + k * kFeatureDim;
    double* rev = d.x.data() + (n + k) * kFeatureDim;
    for (std::size_t c = 0; c < kFeatureDim; ++c) {
      fwd[c] = fi[c] - fj[c];
      rev[c] = -fwd[c];
    }
    d.y[k] = p.y;
    d.y[n + k] = -p.y;
    d.pair_index[k] = {k, false};
    d.pair_index[n + k] = {k, true};
  }
  return d;
}

// ---------------------------------------------------------------------------

void write_pair_file(const std::filesystem::path& path, std::span<const PrefPair> pairs,
                     const PairFileInfo& info) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.precision(17);
  out << "# source=" << info.source << " threshold=" << info.threshold
      << " pairs=" << info.n_requested << " seed=" << info.seed << '\n';
  out << "i,j,y\n";
  for (const auto& p : pairs) out << p.i << ',' << p.j << ',' << p.y << '\n';
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

namespace {

std::vector<std::vector<std::int64_t>> read_int_csv(const std::filesystem::path& path,
                                                    const std::string& header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingFile, "file not found: " + path.string());
  std::string line;
  bool seen_header = false;
  int line_no = 0;
  std::vector<std::vector<std::int64_t>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!seen_header) {
      if (line != header) {
        throw Error(ErrorKind::kParse, path.string() + ": expected header '" + header + "'");
      }
      seen_header = true;
      continue;
    }
    std::vector<std::int64_t> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        fields.push_back(std::stoll(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorKind::kParse,
                    path.string() + ":" + std::to_string(line_no) + ": bad integer '" + cell + "'");
      }
    }
    if (fields.size() != 3) {
      throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) +
                                         ": expected 3 fields");
    }
    rows.push_back(std::move(fields));
  }
  if (!seen_header) throw Error(ErrorKind::kParse, path.string() + ": missing header");
  return rows;
}

}  // namespace

std::vector<PrefPair> read_pair_file(const std::filesystem::path& path) {
  std::vector<PrefPair> pairs;
  for (const auto& r : read_int_csv(path, "i,j,y")) {
    if (r[2] != 1 && r[2] != -1) throw Error(ErrorKind::kParse, path.string() + ": label not +-1");
    pairs.push_back({r[0], r[1], static_cast<int>(r[2])});
  }
  return pairs;
}

std::vector<Vote> read_vote_file(const std::filesystem::path& path) {
  std::vector<Vote> votes;
  for (const auto& r : read_int_csv(path, "i,j,label")) {
    if (r[2] < -1 || r[2] > 1) throw Error(ErrorKind::kParse, path.string() + ": vote not in {-1,0,1}");
    votes.push_back({r[0], r[1], static_cast<int>(r[2])});
  }
  return votes;
}

}  // namespace priq

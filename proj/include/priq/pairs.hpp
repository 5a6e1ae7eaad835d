#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "priq/corpus.hpp"
#include "priq/features.hpp"

namespace priq {

/// Ordered image pair with label +1 (image i better) or -1 (image j better).
struct PrefPair {
  std::int64_t i = 0;
  std::int64_t j = 0;
  int y = 0;

  friend bool operator==(const PrefPair&, const PrefPair&) = default;
};

/// Number of unordered pairs with |q_i - q_j| > threshold. O(n log n).
std::uint64_t max_pair_count(std::span<const double> scores, double threshold);

/// Samples min(n_pairs, M) distinct unordered pairs uniformly among those
/// whose score gap strictly exceeds the threshold, with a random orientation.
/// Labels follow the manifest polarity (sign(q_i - q_j) for MOS, negated for
/// DMOS). Throws Error(kNoEligiblePairs) when M = 0.
std::vector<PrefPair> gen_pairs_from_scores(const Manifest& manifest, double threshold,
                                            std::size_t n_pairs, std::uint64_t seed);

/// Same sampler over a bare score vector; returned i/j are positions into
/// `scores`. Used when labels come from scores other than the manifest's own.
std::vector<PrefPair> sample_pairs(std::span<const double> scores, Polarity polarity,
                                   double threshold, std::size_t n_pairs, std::uint64_t seed);

/// sign(sum of votes). Votes must lie in {-1, 0, +1}; the list must not be
/// empty. A result of 0 means the pair is not used for training.
int aggregate_votes(std::span<const int> votes);

/// One subject's judgement of the ordered pair (i, j).
struct Vote {
  std::int64_t i = 0;
  std::int64_t j = 0;
  int label = 0;
};

/// Groups votes by unordered pair (a vote on (j, i) counts as the negated
/// vote on (i, j)), aggregates each group and drops ties. Output is ordered
/// by first appearance.
std::vector<PrefPair> pairs_from_votes(std::span<const Vote> votes);

/// Symmetric training set: rows [0, N) hold f_i - f_j with label y, rows
/// [N, 2N) hold the negated copies with negated labels.
struct DiffSet {
  std::size_t n_pairs = 0;
  std::vector<double> x;  ///< 2N x kFeatureDim, row-major
  std::vector<int> y;     ///< 2N labels
  struct Source {
    std::size_t pair;
    bool mirrored;
  };
  std::vector<Source> pair_index;

  std::size_t rows() const { return y.size(); }
  std::span<const double> row(std::size_t r) const {
    return {x.data() + r * kFeatureDim, kFeatureDim};
  }
};

DiffSet build_diffset(std::span<const PrefPair> pairs, const FeatureTable& features);

/// Pair file: '#'-prefixed metadata line(s), then the header `i,j,y`.
struct PairFileInfo {
  std::string source;
  double threshold = 0.0;
  std::size_t n_requested = 0;
  std::uint64_t seed = 0;
};

void write_pair_file(const std::filesystem::path& path, std::span<const PrefPair> pairs,
                     const PairFileInfo& info);
std::vector<PrefPair> read_pair_file(const std::filesystem::path& path);

/// Vote file: header `i,j,label`, one row per subject judgement.
std::vector<Vote> read_vote_file(const std::filesystem::path& path);

}  // namespace priq

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "priq/image.hpp"

namespace priq {

enum class Polarity { kMos, kDmos };

std::string to_string(Polarity p);
Polarity parse_polarity(const std::string& text);

struct ScoredImage {
  std::int64_t id = 0;
  std::filesystem::path path;  ///< absolute, or relative to the working directory
  int group_id = 0;
  std::string distortion_tag;
  int level = 0;
  double score = 0.0;
  Polarity polarity = Polarity::kDmos;
};

/// Validated set of scored images. Construct through make_manifest or
/// load_manifest; both enforce the invariants below.
///   - ids are unique
///   - group ids form the contiguous set {0, ..., G-1}
///   - one polarity for the whole manifest
///   - every score inside [score_min, score_max]
///   - level == 0 exactly for the "ref" tag
struct Manifest {
  std::string name;
  double score_min = 0.0;
  double score_max = 100.0;
  std::vector<ScoredImage> images;

  Polarity polarity() const;
  int group_count() const;
  std::size_t size() const { return images.size(); }
  std::vector<double> scores() const;
};

/// Checks every manifest invariant. Throws Error(kInvariant) on violation.
/// When check_files is set, also requires every image path to exist.
void validate_manifest(const Manifest& m, bool check_files);

/// Builds a manifest from rows with arbitrary group ids, renumbering groups
/// into a contiguous 0-based range (first-seen order).
Manifest make_manifest(std::string name, double score_min, double score_max,
                       std::vector<ScoredImage> images);

/// Reads `<stem>.csv` plus the `<stem>.meta.json` sidecar. Image paths in the
/// CSV are relative to the manifest's directory and are resolved here.
Manifest load_manifest(const std::filesystem::path& csv_path);

/// Writes the CSV and sidecar. Paths are written relative to the CSV's
/// directory when possible.
void save_manifest(const Manifest& m, const std::filesystem::path& csv_path);

// ---------------------------------------------------------------------------
// Synthetic corpus

inline constexpr double kDefaultMseCap = 2000.0;

/// 100 * min(1, log(1 + MSE) / log(1 + mse_cap)). Throws on size mismatch.
double synthetic_score(const ImageMatrix& reference, const ImageMatrix& distorted,
                       double mse_cap = kDefaultMseCap);

/// Closed form of synthetic_score given the MSE directly.
double synthetic_score_from_mse(double mse, double mse_cap = kDefaultMseCap);

struct SynthConfig {
  int n_refs = 12;
  int levels = 5;
  int width = 128;
  int height = 128;
  std::vector<std::string> distortions{"wn", "gblur", "jpegq", "contrast"};
  double mse_cap = kDefaultMseCap;
  std::filesystem::path out_dir = "corpus";
  std::string name = "synthetic";
};

/// Procedural reference texture: low-pass filtered noise, a linear gradient
/// and a few hard-edged shapes. Deterministic in seed.
ImageMatrix make_reference(int width, int height, std::uint64_t seed);

/// Applies one distortion at level >= 1 (level 0 returns the input). The
/// result is quantized to 8 bits. `levels` is the family size, used to
/// position the level inside its strength schedule.
ImageMatrix apply_distortion(const ImageMatrix& reference, const std::string& tag, int level,
                             int levels, std::uint64_t seed);

/// Writes references and all (distortion, level) variants as PGM files plus
/// the manifest (`<out_dir>/<name>.csv`) and returns it. Scores are DMOS.
Manifest synth_corpus(const SynthConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Group splitting

struct Split {
  Manifest train;
  Manifest test;
};

/// Uniformly picks n_train_groups whole groups for training; the rest go to
/// test. Requires 1 <= n_train_groups < group count. Group ids are kept as in
/// the source manifest (sides are not renumbered).
Split split_by_group(const Manifest& manifest, int n_train_groups, std::uint64_t seed);

}  // namespace priq

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "priq/mkl.hpp"

namespace priq {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Binary little-endian model container.
///
///   magic "PRIQM1" | u32 version | u64 n_train | u64 n_sv | u32 dim
///   f64 p | f64 C
///   f64 norm_mu[dim] | f64 norm_sd[dim] | f64 theta[45] | f64 bias
///   n_sv x { f64 row[dim] | f64 alpha | i32 label }
///   n_train x { i64 id | f64 row[dim] }
///   u64 len | config snapshot (UTF-8 JSON, len bytes)
void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

/// Lossless JSON export (every double printed with 17 significant digits).
std::string model_to_text(const TrainedModel& model);

/// FNV-1a 64 of a file's bytes, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

}  // namespace priq

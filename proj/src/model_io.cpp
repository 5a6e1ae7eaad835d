#include "priq/model_io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "le_io.hpp"
#include "priq/error.hpp"

namespace priq {

using nlohmann::json;

namespace {

constexpr char kMagic[6] = {'P', 'R', 'I', 'Q', 'M', '1'};

json config_json(const TrainedModel& m) {
  json notes = json::parse(m.notes, nullptr, false);
  if (notes.is_discarded()) notes = m.notes;
  return {{"C", m.config.C},
          {"p", m.config.p},
          {"outer_tol", m.config.outer_tol},
          {"max_outer", m.config.max_outer},
          {"inner_tol", m.config.inner_tol},
          {"max_updates", m.config.max_updates},
          {"notes", notes}};
}

}  // namespace

void save_model(const std::filesystem::path& path, const TrainedModel& m) {
  if (!m.trained()) throw Error(ErrorKind::kNotTrained, "refusing to save an untrained model");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());

  out.write(kMagic, sizeof kMagic);
  le::put<std::uint32_t>(out, kModelFormatVersion);
  le::put<std::uint64_t>(out, m.train_features.size());
  le::put<std::uint64_t>(out, m.sv_count());
  le::put<std::uint32_t>(out, static_cast<std::uint32_t>(kFeatureDim));
  le::put<double>(out, m.config.p);
  le::put<double>(out, m.config.C);
  for (double v : m.norm_mu) le::put<double>(out, v);
  for (double v : m.norm_sd) le::put<double>(out, v);
  for (double v : m.theta) le::put<double>(out, v);
  le::put<double>(out, m.bias);
  for (std::size_t r = 0; r < m.sv_count(); ++r) {
    for (std::size_t c = 0; c < kFeatureDim; ++c) le::put<double>(out, m.sv_rows[r * kFeatureDim + c]);
    le::put<double>(out, m.sv_alpha[r]);
    le::put<std::int32_t>(out, m.sv_labels[r]);
  }
  for (std::size_t i = 0; i < m.train_features.size(); ++i) {
    le::put<std::int64_t>(out, m.train_features.ids()[i]);
    for (double v : m.train_features.rows()[i]) le::put<double>(out, v);
  }
  const std::string cfg = config_json(m).dump();
  le::put<std::uint64_t>(out, cfg.size());
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingFile, "model not found: " + path.string());
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (in.gcount() != sizeof magic || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw Error(ErrorKind::kParse, path.string() + ": not a model file");
  }
  const char* what = "model file";
  const auto version = le::get<std::uint32_t>(in, what);
  if (version != kModelFormatVersion) {
    throw Error(ErrorKind::kParse, path.string() + ": unsupported model version " + std::to_string(version));
  }
  const auto n_train = le::get<std::uint64_t>(in, what);
  const auto n_sv = le::get<std::uint64_t>(in, what);
  const auto dim = le::get<std::uint32_t>(in, what);
  if (dim != kFeatureDim) throw Error(ErrorKind::kParse, path.string() + ": feature dimension mismatch");

  TrainedModel m;
  m.bank = build_kernel_bank();
  m.config.p = le::get<double>(in, what);
  m.config.C = le::get<double>(in, what);
  for (double& v : m.norm_mu) v = le::get<double>(in, what);
  for (double& v : m.norm_sd) v = le::get<double>(in, what);
  for (double& v : m.theta) v = le::get<double>(in, what);
  m.bias = le::get<double>(in, what);
  m.sv_rows.resize(n_sv * kFeatureDim);
  m.sv_alpha.resize(n_sv);
  m.sv_labels.resize(n_sv);
  for (std::size_t r = 0; r < n_sv; ++r) {
    for (std::size_t c = 0; c < kFeatureDim; ++c) m.sv_rows[r * kFeatureDim + c] = le::get<double>(in, what);
    m.sv_alpha[r] = le::get<double>(in, what);
    m.sv_labels[r] = le::get<std::int32_t>(in, what);
  }
  for (std::size_t i = 0; i < n_train; ++i) {
    const auto id = le::get<std::int64_t>(in, what);
    FeatureVector f{};
    for (double& v : f) v = le::get<double>(in, what);
    m.train_features.insert(id, f);
  }
  const auto len = le::get<std::uint64_t>(in, what);
  std::string cfg(len, '\0');
  in.read(cfg.data(), static_cast<std::streamsize>(len));
  if (in.gcount() != static_cast<std::streamsize>(len)) {
    throw Error(ErrorKind::kParse, path.string() + ": truncated config snapshot");
  }
  try {
    const json j = json::parse(cfg);
    m.config.outer_tol = j.at("outer_tol").get<double>();
    m.config.max_outer = j.at("max_outer").get<int>();
    m.config.inner_tol = j.at("inner_tol").get<double>();
    m.config.max_updates = j.at("max_updates").get<std::size_t>();
    const auto& notes = j.at("notes");
    m.notes = notes.is_string() ? notes.get<std::string>() : notes.dump();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path.string() + ": bad config snapshot: " + e.what());
  }
  m.prepare();
  return m;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string model_to_text(const TrainedModel& m) {
  // Doubles go through %.17g strings so the export round-trips bit-exactly.
  auto arr = [](auto begin, auto end) {
    json a = json::array();
    for (auto it = begin; it != end; ++it) a.push_back(num(*it));
    return a;
  };
  json j;
  j["format"] = "PRIQM1";
  j["version"] = kModelFormatVersion;
  j["dim"] = kFeatureDim;
  j["config"] = config_json(m);
  j["norm_mu"] = arr(m.norm_mu.begin(), m.norm_mu.end());
  j["norm_sd"] = arr(m.norm_sd.begin(), m.norm_sd.end());
  j["theta"] = arr(m.theta.begin(), m.theta.end());
  j["bias"] = num(m.bias);
  json svs = json::array();
  for (std::size_t r = 0; r < m.sv_count(); ++r) {
    const auto* row = m.sv_rows.data() + r * kFeatureDim;
    svs.push_back({{"alpha", num(m.sv_alpha[r])},
                   {"label", m.sv_labels[r]},
                   {"row", arr(row, row + kFeatureDim)}});
  }
  j["support_vectors"] = std::move(svs);
  json train = json::array();
  for (std::size_t i = 0; i < m.train_features.size(); ++i) {
    const auto& f = m.train_features.rows()[i];
    train.push_back({{"id", m.train_features.ids()[i]}, {"features", arr(f.begin(), f.end())}});
  }
  j["train_features"] = std::move(train);
  return j.dump(1);
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingFile, "cannot hash missing file " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
    h ^= static_cast<unsigned char>(*it);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace priq

// priq: stage-per-subcommand driver. Files hand off between stages:
// manifest -> features -> pairs -> model -> scores.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "priq/corpus.hpp"
#include "priq/error.hpp"
#include "priq/eval.hpp"
#include "priq/features.hpp"
#include "priq/kernels.hpp"
#include "priq/mkl.hpp"
#include "priq/model_io.hpp"
#include "priq/pairs.hpp"
#include "priq/quality.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Global {
  int threads = 0;  // 0: runtime default
  std::string log_level = "info";
  std::uint64_t seed = 1;
};

int exit_code(priq::ErrorKind k) {
  switch (k) {
    case priq::ErrorKind::kInvalidArgument: return 2;
    case priq::ErrorKind::kParse: return 3;
    case priq::ErrorKind::kMissingFile: return 4;
    case priq::ErrorKind::kInvariant: return 5;
    case priq::ErrorKind::kNoEligiblePairs: return 6;
    case priq::ErrorKind::kInfeasible: return 7;
    case priq::ErrorKind::kIo: return 8;
    case priq::ErrorKind::kNotTrained: return 9;
  }
  return 1;
}

void echo_config(const std::string& command, const Global& g, json params) {
  params["command"] = command;
  params["threads"] = priq::thread_count();
  params["log_level"] = g.log_level;
  params["seed"] = g.seed;
  std::cerr << "config " << params.dump() << '\n';
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw priq::Error(priq::ErrorKind::kMissingFile, "no such file: " + p.string());
}

fs::path default_features_path(const fs::path& manifest) {
  fs::path p = manifest;
  return p.replace_extension(".features.bin");
}

// Cached features when the file exists, else fresh extraction.
priq::FeatureTable features_for(const priq::Manifest& m, const std::string& cache) {
  if (!cache.empty()) {
    require_file(cache);
    auto table = priq::read_feature_cache(cache);
    for (const auto& im : m.images) {
      if (!table.contains(im.id)) {
        throw priq::Error(priq::ErrorKind::kInvalidArgument,
                          "feature cache " + cache + " lacks image " + std::to_string(im.id));
      }
    }
    return table;
  }
  spdlog::info("extracting features for {} images", m.size());
  return priq::extract_features(m);
}

priq::Manifest load_checked(const std::string& path) {
  require_file(path);
  return priq::load_manifest(path);
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out = "corpus";
  std::string name = "synthetic";
  int refs = 12;
  int levels = 5;
  int size = 128;
  std::vector<std::string> distortions{"wn", "gblur", "jpegq", "contrast"};
  double mse_cap = priq::kDefaultMseCap;
};

int cmd_synth(const SynthArgs& a, const Global& g) {
  echo_config("synth", g,
              {{"out", a.out}, {"name", a.name}, {"refs", a.refs}, {"levels", a.levels},
               {"size", a.size}, {"distortions", a.distortions}, {"mse_cap", a.mse_cap}});
  priq::SynthConfig c;
  c.n_refs = a.refs;
  c.levels = a.levels;
  c.width = c.height = a.size;
  c.distortions = a.distortions;
  c.mse_cap = a.mse_cap;
  c.out_dir = a.out;
  c.name = a.name;
  const auto m = priq::synth_corpus(c, g.seed);
  std::cout << "wrote " << m.size() << " images, manifest " << (fs::path(a.out) / (a.name + ".csv")).string()
            << '\n';
  return 0;
}

struct ExtractArgs {
  std::string manifest;
  std::string out;
  std::string csv;
};

int cmd_extract(ExtractArgs a, const Global& g) {
  if (a.out.empty()) a.out = default_features_path(a.manifest).string();
  echo_config("extract", g, {{"manifest", a.manifest}, {"out", a.out}, {"csv", a.csv}});
  const auto m = load_checked(a.manifest);
  const auto table = priq::extract_features(m);
  priq::write_feature_cache(a.out, table);
  if (!a.csv.empty()) priq::write_feature_csv(a.csv, table);
  std::cout << "extracted " << table.size() << " feature vectors to " << a.out << '\n';
  return 0;
}

struct PairsArgs {
  std::string manifest;
  std::string votes;
  std::string out = "pairs.csv";
  double threshold = 10.0;
  std::size_t n_pairs = 2000;
};

int cmd_pairs(const PairsArgs& a, const Global& g) {
  echo_config("pairs", g,
              {{"manifest", a.manifest}, {"votes", a.votes}, {"out", a.out},
               {"threshold", a.threshold}, {"pairs", a.n_pairs}});
  std::vector<priq::PrefPair> pairs;
  priq::PairFileInfo info;
  info.seed = g.seed;
  if (!a.votes.empty()) {
    require_file(a.votes);
    const auto votes = priq::read_vote_file(a.votes);
    pairs = priq::pairs_from_votes(votes);
    if (pairs.empty()) throw priq::Error(priq::ErrorKind::kNoEligiblePairs, "every voted pair is tied");
    info.source = fs::path(a.votes).filename().string();
    info.n_requested = pairs.size();
  } else {
    if (a.manifest.empty()) throw priq::Error(priq::ErrorKind::kInvalidArgument, "--manifest or --votes is required");
    const auto m = load_checked(a.manifest);
    pairs = priq::gen_pairs_from_scores(m, a.threshold, a.n_pairs, g.seed);
    info.source = m.name;
    info.threshold = a.threshold;
    info.n_requested = a.n_pairs;
  }
  priq::write_pair_file(a.out, pairs, info);
  std::cout << "wrote " << pairs.size() << " pairs to " << a.out << '\n';
  return 0;
}

struct TrainArgs {
  std::string manifest;
  std::string features;
  std::string pairs;
  std::string out = "model.priqm";
  std::string text;
  priq::MklConfig mkl;
};

int cmd_train(const TrainArgs& a, const Global& g) {
  echo_config("train", g,
              {{"manifest", a.manifest}, {"features", a.features}, {"pairs", a.pairs},
               {"out", a.out}, {"text", a.text}, {"C", a.mkl.C}, {"p", a.mkl.p},
               {"outer_tol", a.mkl.outer_tol}, {"max_outer", a.mkl.max_outer},
               {"inner_tol", a.mkl.inner_tol}, {"max_updates", a.mkl.max_updates}});
  const auto m = load_checked(a.manifest);
  require_file(a.pairs);
  const auto pairs = priq::read_pair_file(a.pairs);
  auto table = features_for(m, a.features);

  // Only the manifest's images are training images, in manifest order.
  priq::FeatureTable train;
  for (const auto& im : m.images) train.insert(im.id, table.at(im.id));

  const auto scores = m.scores();
  const auto cover = priq::check_score_coverage(scores, m.score_min, m.score_max);
  if (cover.warn) {
    spdlog::warn("training scores span {:.0f}% of the declared range; the gain mapping assumes they cover it",
                 100.0 * cover.span_ratio);
  }

  auto model = priq::mklgl_train(priq::build_diffset(pairs, train), a.mkl);
  model.train_features = std::move(train);
  model.notes = json{{"manifest", m.name},
                     {"pairs", pairs.size()},
                     {"seed", g.seed},
                     {"score_span_ratio", cover.span_ratio},
                     {"assumes_full_range_coverage", true},
                     {"span_warning", cover.warn}}
                    .dump();
  for (const auto& w : model.trace.warnings) spdlog::warn("{}", w);
  priq::save_model(a.out, model);
  if (!a.text.empty()) {
    std::ofstream t(a.text);
    if (!t) throw priq::Error(priq::ErrorKind::kIo, "cannot write " + a.text);
    t << priq::model_to_text(model) << '\n';
  }
  std::cout << "trained on " << pairs.size() << " pairs: " << model.sv_count() << " support rows, "
            << model.trace.outer_iterations << " outer iterations" << (model.trace.converged ? "" : " (not converged)")
            << "; model " << a.out << '\n';
  return 0;
}

struct ScoreArgs {
  std::string model;
  std::string manifest;
  std::string features;
  std::string out = "scores.csv";
};

int cmd_score(const ScoreArgs& a, const Global& g) {
  echo_config("score", g,
              {{"model", a.model}, {"manifest", a.manifest}, {"features", a.features}, {"out", a.out}});
  require_file(a.model);
  const auto model = priq::load_model(a.model);
  const auto m = load_checked(a.manifest);
  const auto table = features_for(m, a.features);
  const auto reports = priq::score_batch(model, m, table);
  priq::write_scores(a.out, reports, {priq::file_hash(a.model), m.name});
  std::cout << "scored " << reports.size() << " images to " << a.out << '\n';
  return 0;
}

struct EvalArgs {
  std::string scores;
  std::string manifest;
  std::string out;
};

int cmd_eval(const EvalArgs& a, const Global& g) {
  echo_config("eval", g, {{"scores", a.scores}, {"manifest", a.manifest}, {"out", a.out}});
  const auto m = load_checked(a.manifest);
  require_file(a.scores);
  const auto reports = priq::read_scores(a.scores);
  std::unordered_map<std::int64_t, double> by_id;
  for (const auto& r : reports) by_id[r.id] = r.score;

  std::vector<double> pred, target;
  for (const auto& im : m.images) {
    auto it = by_id.find(im.id);
    if (it == by_id.end()) {
      throw priq::Error(priq::ErrorKind::kInvalidArgument, "no score for image " + std::to_string(im.id));
    }
    pred.push_back(it->second);
    target.push_back(m.polarity() == priq::Polarity::kDmos ? -im.score : im.score);
  }
  const auto fit = priq::logistic_remap(pred, target);
  if (fit.warning) spdlog::warn("{}", *fit.warning);
  const double s = priq::srcc(pred, target);
  const double k = priq::krcc(pred, target);
  const double p = priq::plcc(fit.remapped, target);
  std::printf("images %zu\nSRCC %.6f\nKRCC %.6f\nPLCC %.6f\n", pred.size(), s, k, p);
  if (!a.out.empty()) {
    std::ofstream o(a.out);
    if (!o) throw priq::Error(priq::ErrorKind::kIo, "cannot write " + a.out);
    o << json{{"images", pred.size()}, {"srcc", s}, {"krcc", k}, {"plcc", p},
              {"logistic_beta", fit.beta}, {"logistic_fit", "full set"}}
             .dump(2)
      << '\n';
  }
  return 0;
}

struct ExperimentArgs {
  std::vector<std::string> manifests;
  std::vector<std::string> features;
  std::vector<int> groups{20};
  std::vector<double> thresholds{10.0};
  std::vector<std::size_t> pairs{2000};
  int trials = 100;
  priq::MklConfig mkl;
  std::vector<double> sweep;
  double label_noise = 0.0;
  std::string out = "experiment.json";
};

template <class T>
T per_dataset(const std::vector<T>& v, std::size_t d, const char* flag) {
  if (v.size() == 1) return v.front();
  if (d < v.size()) return v[d];
  throw priq::Error(priq::ErrorKind::kInvalidArgument,
                    std::string(flag) + " takes one value or one per manifest");
}

int cmd_experiment(const ExperimentArgs& a, const Global& g) {
  json cfg{{"manifests", a.manifests}, {"features", a.features}, {"groups", a.groups},
           {"thresholds", a.thresholds}, {"pairs", a.pairs}, {"trials", a.trials},
           {"C", a.mkl.C}, {"p", a.mkl.p}, {"outer_tol", a.mkl.outer_tol},
           {"max_outer", a.mkl.max_outer}, {"inner_tol", a.mkl.inner_tol},
           {"max_updates", a.mkl.max_updates}, {"sweep", a.sweep},
           {"label_noise", a.label_noise}, {"out", a.out}};
  echo_config("experiment", g, cfg);
  cfg["seed"] = g.seed;

  if (!a.features.empty() && a.features.size() != a.manifests.size()) {
    throw priq::Error(priq::ErrorKind::kInvalidArgument, "--features needs one cache per manifest");
  }
  priq::Protocol protocol;
  protocol.trials = a.trials;
  protocol.mkl = a.mkl;
  std::vector<priq::Dataset> datasets;
  for (std::size_t d = 0; d < a.manifests.size(); ++d) {
    priq::Dataset ds;
    ds.manifest = load_checked(a.manifests[d]);
    ds.features = features_for(ds.manifest, a.features.empty() ? std::string() : a.features[d]);
    if (a.label_noise > 0.0) {
      std::mt19937_64 rng(priq::derive_seed(g.seed, 3, d));
      std::normal_distribution<double> noise(0.0, a.label_noise);
      for (double s : ds.manifest.scores()) ds.label_scores.push_back(s + noise(rng));
    }
    protocol.per_dataset.push_back({per_dataset(a.groups, d, "--groups"),
                                    per_dataset(a.thresholds, d, "--threshold"),
                                    per_dataset(a.pairs, d, "--pairs")});
    datasets.push_back(std::move(ds));
  }

  if (!a.sweep.empty()) {
    if (datasets.size() != 1) throw priq::Error(priq::ErrorKind::kInvalidArgument, "--sweep takes a single manifest");
    const auto sweep = priq::threshold_sweep(datasets.front(), protocol, a.sweep, g.seed);
    std::cout << priq::format_sweep_table(sweep);
    priq::write_sweep_report(a.out, cfg.dump(), sweep);
  } else {
    const auto summary = priq::run_trials(datasets, protocol, g.seed);
    std::cout << priq::format_summary_table(summary);
    priq::write_experiment_report(a.out, cfg.dump(), summary);
    if (!summary.feasible()) throw priq::Error(priq::ErrorKind::kInfeasible, "every trial failed");
  }
  std::cout << "report " << a.out << '\n';
  return 0;
}

void add_mkl_flags(CLI::App* cmd, priq::MklConfig& c) {
  cmd->add_option("--C", c.C, "SVM box constraint")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--p", c.p, "group-lasso norm")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--outer-tol", c.outer_tol, "theta change tolerance")->capture_default_str();
  cmd->add_option("--max-outer", c.max_outer, "outer iteration cap")->capture_default_str();
  cmd->add_option("--inner-tol", c.inner_tol, "SMO KKT tolerance")->capture_default_str();
  cmd->add_option("--max-updates", c.max_updates, "SMO pair-update cap")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"priq: pairwise-preference blind image quality"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--threads", g.threads, "worker threads (0: all available)")->capture_default_str();
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")->capture_default_str();
  app.add_option("--seed", g.seed, "master random seed")->capture_default_str();

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "write a synthetic distorted corpus");
  c_synth->add_option("--out", synth.out)->capture_default_str();
  c_synth->add_option("--name", synth.name)->capture_default_str();
  c_synth->add_option("--refs", synth.refs)->capture_default_str();
  c_synth->add_option("--levels", synth.levels)->capture_default_str();
  c_synth->add_option("--size", synth.size)->capture_default_str();
  c_synth->add_option("--distortions", synth.distortions)->delimiter(',')->capture_default_str();
  c_synth->add_option("--mse-cap", synth.mse_cap)->capture_default_str();

  ExtractArgs extract;
  auto* c_extract = app.add_subcommand("extract", "extract and cache features");
  c_extract->add_option("--manifest", extract.manifest)->required();
  c_extract->add_option("--out", extract.out, "cache path (default <manifest>.features.bin)");
  c_extract->add_option("--csv", extract.csv, "also write a CSV dump");

  PairsArgs pairs;
  auto* c_pairs = app.add_subcommand("pairs", "sample preference pairs");
  c_pairs->add_option("--manifest", pairs.manifest);
  c_pairs->add_option("--votes", pairs.votes, "vote file (i,j,label) instead of scores");
  c_pairs->add_option("--threshold", pairs.threshold)->capture_default_str();
  c_pairs->add_option("--pairs", pairs.n_pairs)->capture_default_str();
  c_pairs->add_option("--out", pairs.out)->capture_default_str();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "train a preference model");
  c_train->add_option("--manifest", train.manifest)->required();
  c_train->add_option("--pairs", train.pairs)->required();
  c_train->add_option("--features", train.features, "feature cache (extracted if omitted)");
  c_train->add_option("--out", train.out)->capture_default_str();
  c_train->add_option("--text", train.text, "also write the text export");
  add_mkl_flags(c_train, train.mkl);

  ScoreArgs score;
  auto* c_score = app.add_subcommand("score", "score manifest images");
  c_score->add_option("--model", score.model)->required();
  c_score->add_option("--manifest", score.manifest)->required();
  c_score->add_option("--features", score.features, "feature cache (extracted if omitted)");
  c_score->add_option("--out", score.out)->capture_default_str();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "correlate scores with manifest scores");
  c_eval->add_option("--scores", ev.scores)->required();
  c_eval->add_option("--manifest", ev.manifest)->required();
  c_eval->add_option("--out", ev.out, "JSON metrics file");

  ExperimentArgs ex;
  auto* c_exp = app.add_subcommand("experiment", "repeated group-split train/test trials");
  c_exp->add_option("--manifest", ex.manifests, "repeat for hybrid training")->required();
  c_exp->add_option("--features", ex.features, "one cache per manifest");
  c_exp->add_option("--groups", ex.groups, "training groups per manifest")->capture_default_str();
  c_exp->add_option("--threshold", ex.thresholds, "score-gap threshold per manifest")->capture_default_str();
  c_exp->add_option("--pairs", ex.pairs, "pairs per manifest")->capture_default_str();
  c_exp->add_option("--trials", ex.trials)->capture_default_str();
  c_exp->add_option("--sweep", ex.sweep, "threshold grid, e.g. 0,10,20")->delimiter(',');
  c_exp->add_option("--label-noise", ex.label_noise, "Gaussian noise sd added to training labels' scores")
      ->capture_default_str();
  c_exp->add_option("--out", ex.out)->capture_default_str();
  add_mkl_flags(c_exp, ex.mkl);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return 2;
  }

  try {
    auto logger = spdlog::stderr_color_mt("priq");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const auto level = spdlog::level::from_str(g.log_level);
    if (level == spdlog::level::off && g.log_level != "off") {
      throw priq::Error(priq::ErrorKind::kInvalidArgument, "unknown log level " + g.log_level);
    }
    spdlog::set_level(level);

    // --threads beats PRIQ_THREADS, which beats the runtime default.
    int threads = g.threads;
    if (threads == 0) {
      if (const char* env = std::getenv("PRIQ_THREADS")) {
        try {
          threads = std::stoi(env);
        } catch (const std::exception&) {
          throw priq::Error(priq::ErrorKind::kInvalidArgument, std::string("bad PRIQ_THREADS value ") + env);
        }
      }
    }
    priq::set_thread_count(threads);

    if (*c_synth) return cmd_synth(synth, g);
    if (*c_extract) return cmd_extract(extract, g);
    if (*c_pairs) return cmd_pairs(pairs, g);
    if (*c_train) return cmd_train(train, g);
    if (*c_score) return cmd_score(score, g);
    if (*c_eval) return cmd_eval(ev, g);
    if (*c_exp) return cmd_experiment(ex, g);
  } catch (const priq::Error& e) {
    std::cerr << "error: " << priq::to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

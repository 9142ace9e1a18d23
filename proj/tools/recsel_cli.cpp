// recsel: per-user recommender selection pipeline.

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "recsel/code_metrics.hpp"
#include "recsel/csv.hpp"
#include "recsel/dataset.hpp"
#include "recsel/error.hpp"
#include "recsel/experiment.hpp"
#include "recsel/ground_truth.hpp"
#include "recsel/hash.hpp"
#include "recsel/meta_learner.hpp"
#include "recsel/portfolio.hpp"
#include "recsel/user_features.hpp"

#ifndef RECSEL_SOURCE_DIR
#define RECSEL_SOURCE_DIR "."
#endif

namespace fs = std::filesystem;
using namespace recsel;

namespace {

struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what) : std::runtime_error(stage + ": " + what) {}
};

template <class Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

struct Globals {
  std::size_t threads = 1;
  std::uint64_t seed = 42;
  std::string cache_dir;
  bool quiet = false;
};

struct DataOptions {
  std::string input;
  std::string format = "auto";
  std::string user_col = "user_id";
  std::string item_col = "item_id";
  std::string time_col = "timestamp";
  std::string rating_col;
  bool lenient = false;
  std::size_t min_interactions = 10;
  double train_fraction = 0.8;
  std::size_t k = 10;
  std::string portfolio;

  void add_to(CLI::App* cmd, bool with_portfolio) {
    cmd->add_option("-i,--input", input, "Interaction file (CSV or TSV with header)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--format", format, "csv, tsv or auto (by extension)")
        ->check(CLI::IsMember({"auto", "csv", "tsv"}))
        ->capture_default_str();
    cmd->add_option("--user-col", user_col, "User id column")->capture_default_str();
    cmd->add_option("--item-col", item_col, "Item id column")->capture_default_str();
    cmd->add_option("--time-col", time_col, "Timestamp column (epoch seconds or ISO-8601)")->capture_default_str();
    cmd->add_option("--rating-col", rating_col, "Rating column; omit for implicit feedback");
    cmd->add_flag("--lenient", lenient, "Skip malformed rows instead of failing");
    cmd->add_option("--min-interactions", min_interactions, "Drop users with fewer interactions")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--train-fraction", train_fraction, "Per-user chronological training share")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("-k,--k", k, "Ranking cutoff for NDCG")->check(CLI::PositiveNumber)->capture_default_str();
    if (with_portfolio) {
      cmd->add_option("--portfolio", portfolio, "Portfolio manifest (default: built-in nine recommenders)")
          ->check(CLI::ExistingFile);
    }
  }

  FileFormat file_format() const {
    if (format == "csv") return FileFormat::csv;
    if (format == "tsv") return FileFormat::tsv;
    const auto ext = fs::path(input).extension().string();
    return ext == ".tsv" || ext == ".tab" ? FileFormat::tsv : FileFormat::csv;
  }

  Schema schema() const {
    Schema s;
    s.user = user_col;
    s.item = item_col;
    s.timestamp = time_col;
    if (!rating_col.empty()) s.rating = rating_col;
    return s;
  }
};

struct Loaded {
  Dataset raw;
  Dataset filtered;
  std::size_t skipped = 0;
  SplitDataset split;
};

Loaded load(const DataOptions& d) {
  Loaded out;
  stage("ingest", [&] {
    auto r = load_interactions(d.input, d.file_format(), d.schema(), d.lenient ? ParseMode::lenient : ParseMode::strict);
    out.raw = std::move(r.dataset);
    out.skipped = r.skipped_rows;
    out.filtered = filter_min_interactions(out.raw, d.min_interactions);
    out.split = temporal_split(out.filtered, d.train_fraction);
    return 0;
  });
  return out;
}

std::vector<RecommenderSpec> portfolio_of(const DataOptions& d, std::uint64_t seed) {
  return stage("portfolio", [&] {
    if (!d.portfolio.empty()) return load_portfolio_manifest(d.portfolio);
    auto specs = default_portfolio(RECSEL_SOURCE_DIR);
    for (auto& s : specs) s.seed = seed;
    return specs;
  });
}

nlohmann::json stats_json(const DatasetStats& s) {
  return {{"n_users", s.n_users}, {"n_items", s.n_items}, {"n_interactions", s.n_interactions}, {"sparsity", s.sparsity}};
}

std::optional<ModelCache> cache_of(const Globals& g, const fs::path& out_dir) {
  if (g.cache_dir == "none") return std::nullopt;
  return ModelCache(g.cache_dir.empty() ? out_dir / "cache" : fs::path(g.cache_dir));
}

std::string config_hash(const Loaded& l, const DataOptions& d, const std::vector<RecommenderSpec>& specs) {
  Fnv1a h;
  h.u64(dataset_hash(l.split.train));
  for (const auto& test : l.split.test) {
    h.u64(test.size());
    for (const auto& it : test) h.str(it.item_id).u64(static_cast<std::uint64_t>(it.timestamp));
  }
  h.u64(d.k);
  for (const auto& s : specs) h.u64(spec_hash(s));
  return hex64(h.value());
}

void say(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

void write_json(const fs::path& path, const nlohmann::json& j) { csv::write_file(path, j.dump(2) + "\n"); }

// ---- subcommands ----

void cmd_ingest(const Globals& g, const DataOptions& d, const fs::path& out) {
  const auto l = load(d);
  stage("ingest", [&] {
    std::string rows = "user_id,item_id,timestamp" + std::string(l.filtered.has_ratings() ? ",rating" : "") + "\n";
    for (const auto& it : l.filtered.interactions()) {
      rows += csv::escape(it.user_id) + "," + csv::escape(it.item_id) + "," + std::to_string(it.timestamp);
      if (l.filtered.has_ratings()) rows += "," + (it.rating ? csv::format_double(*it.rating) : std::string());
      rows += "\n";
    }
    csv::write_file(out / "interactions.csv", rows);
    std::size_t test_rows = 0;
    for (const auto& t : l.split.test) test_rows += t.size();
    write_json(out / "stats.json", {{"raw", stats_json(dataset_stats(l.raw))},
                                    {"filtered", stats_json(dataset_stats(l.filtered))},
                                    {"skipped_rows", l.skipped},
                                    {"min_interactions", d.min_interactions},
                                    {"train_fraction", d.train_fraction},
                                    {"train_interactions", l.split.train.size()},
                                    {"test_interactions", test_rows}});
    const auto s = dataset_stats(l.filtered);
    say(g, "ingest: " + std::to_string(s.n_users) + " users, " + std::to_string(s.n_items) + " items, " +
               std::to_string(s.n_interactions) + " interactions after filtering (" + std::to_string(l.skipped) +
               " rows skipped)");
    return 0;
  });
}

void cmd_ground_truth(const Globals& g, const DataOptions& d, const fs::path& out) {
  const auto l = load(d);
  const auto specs = portfolio_of(d, g.seed);
  const auto cache = cache_of(g, out);
  GroundTruthOptions opts;
  opts.k = d.k;
  opts.threads = g.threads;
  opts.cache = cache ? &*cache : nullptr;
  std::mutex mu;
  opts.on_model = [&](const std::string& id, bool cached) {
    std::lock_guard lock(mu);
    say(g, "ground-truth: " + id + (cached ? " (cached)" : " (fitted)"));
  };
  const auto P = stage("ground-truth", [&] { return build_performance_matrix(l.split, specs, opts); });
  stage("ground-truth", [&] {
    write_performance_matrix(P, out / "performance.csv", config_hash(l, d, specs));
    const auto b = baselines(P);
    nlohmann::json means;
    for (std::size_t a = 0; a < P.n_algos(); ++a) means[P.algo_ids[a]] = P.column_mean(a);
    write_json(out / "ground_truth_stats.json", {{"dataset", stats_json(dataset_stats(l.filtered))},
                                                  {"n_users", P.n_users()},
                                                  {"n_algos", P.n_algos()},
                                                  {"k", d.k},
                                                  {"sba_algo", b.sba_algo},
                                                  {"sba_perf", b.sba_perf},
                                                  {"vba_perf", b.vba_perf},
                                                  {"zero_row_rate", zero_row_rate(P)},
                                                  {"column_means", means}});
    say(g, "ground-truth: " + std::to_string(P.n_users()) + " users x " + std::to_string(P.n_algos()) +
               " algorithms; SBA " + b.sba_algo);
    return 0;
  });
}

void cmd_features(const Globals& g, const DataOptions& d, const fs::path& out) {
  const auto l = load(d);
  const auto specs = portfolio_of(d, g.seed);
  stage("features", [&] {
    const auto F = to_feature_table(extract_user_features(l.split, g.threads));
    write_feature_table(F, "user_id", out / "user_features.csv");
    const auto A = algo_feature_table(specs);
    write_feature_table(A, "algo_id", out / "algo_features.csv");
    // Reload to catch anything that would not survive the round trip.
    read_feature_table(out / "user_features.csv", "user_id").validate_finite();
    code::load_feature_manifest(out / "algo_features.csv");
    say(g, "features: " + std::to_string(F.keys.size()) + " users, " + std::to_string(A.keys.size()) + " algorithms");
    return 0;
  });
}

void cmd_code_metrics(const Globals& g, const std::vector<std::string>& files, const std::string& manifest,
                      const std::string& profile_name, const std::string& ast_json, const std::string& out) {
  stage("code-metrics", [&] {
    std::vector<std::pair<std::string, fs::path>> sources;
    if (!manifest.empty()) {
      for (const auto& s : load_portfolio_manifest(manifest)) sources.emplace_back(s.algo_id, s.source_path);
    }
    for (const auto& f : files) sources.emplace_back(fs::path(f).stem().string(), f);
    if (sources.empty()) throw ValidationError("no source files given");
    if (!ast_json.empty() && sources.size() != 1) throw ValidationError("--ast-json needs exactly one source file");
    std::vector<code::AlgoFeatureVector> rows;
    for (const auto& [id, path] : sources) {
      const auto& prof = profile_name.empty() ? code::profile_for(path) : code::profile(profile_name);
      auto f = code::extract_algo_features(id, path, prof, ast_json);
      code::validate(f);
      rows.push_back(std::move(f));
    }
    if (out.empty() || out == "-") {
      std::cout << code::feature_manifest_csv(rows);
    } else {
      code::write_feature_manifest(rows, out);
      say(g, "code-metrics: wrote " + std::to_string(rows.size()) + " rows to " + out);
    }
    return 0;
  });
}

struct Precomputed {
  std::string performance;
  std::string user_features;
  std::string algo_features;
};

void cmd_train(const Globals& g, const Precomputed& pre, const std::vector<GBTParams>& grid, const fs::path& out) {
  const auto P = stage("train", [&] { return read_performance_matrix(pre.performance); });
  const auto F = stage("train", [&] { return read_feature_table(pre.user_features, "user_id"); });
  const auto A = stage("train", [&] { return code::to_feature_table(code::load_feature_manifest(pre.algo_features)); });
  stage("train", [&] {
    const auto F_p = select_feature_rows(F, P.user_ids);
    const auto uo = build_user_only_dataset(P, F_p);
    const auto ua = build_user_algo_dataset(P, F_p, A);
    auto seeded = grid;
    for (auto& p : seeded) p.seed = g.seed;
    const auto p_uo = tune_gbt(uo, seeded, g.seed, g.threads);
    const auto p_ua = tune_gbt(ua, seeded, g.seed, g.threads);
    write_meta_model(train_meta_model(uo, p_uo, g.threads), out / "meta_user_only.json");
    write_meta_model(train_meta_model(ua, p_ua, g.threads), out / "meta_user_algo.json");
    say(g, "train: user_only " + to_string(p_uo) + "\ntrain: user_algo " + to_string(p_ua));
    return 0;
  });
}

void write_report(const ExperimentReport& report, const fs::path& out, bool print) {
  csv::write_file(out / "report.csv", report_csv(report));
  csv::write_file(out / "report.txt", report_table(report));
  csv::write_file(out / "report.json", report_json(report));
  if (print) std::cout << report_table(report);
}

void cmd_run(const Globals& g, const DataOptions& d, ExperimentConfig cfg, const std::string& name,
             const fs::path& out) {
  const auto l = load(d);
  const auto specs = portfolio_of(d, g.seed);
  const auto cache = cache_of(g, out);
  GroundTruthOptions opts;
  opts.k = d.k;
  opts.threads = g.threads;
  opts.cache = cache ? &*cache : nullptr;
  const auto P = stage("ground-truth", [&] { return build_performance_matrix(l.split, specs, opts); });
  const auto F = stage("features", [&] { return to_feature_table(extract_user_features(l.split, g.threads)); });
  const auto A = stage("features", [&] { return algo_feature_table(specs); });
  cfg.threads = g.threads;
  cfg.seed = g.seed;
  const auto row = stage("experiment", [&] { return run_experiment(name, P, F, A, cfg); });
  ExperimentReport report;
  report.tie_mode = to_string(cfg.tie_mode);
  report.sba_global = cfg.sba_global;
  report.rows.push_back(row);
  stage("report", [&] {
    write_performance_matrix(P, out / "performance.csv", config_hash(l, d, specs));
    write_report(report, out, !g.quiet);
    return 0;
  });
}

void cmd_report(const Globals& g, const std::vector<std::string>& inputs, const std::string& out) {
  stage("report", [&] {
    std::vector<ExperimentReport> parts;
    for (const auto& p : inputs) parts.push_back(parse_report_json(csv::read_file(p)));
    const auto merged = merge_reports(parts);
    if (out.empty()) {
      std::cout << report_table(merged);
    } else {
      write_report(merged, out, !g.quiet);
    }
    return 0;
  });
}

std::vector<GBTParams> grid_from(const std::string& name) {
  if (name == "default") return default_grid();
  // Single point, for quick runs.
  GBTParams p;
  p.n_trees = 100;
  p.max_depth = 3;
  p.learning_rate = 0.1;
  p.min_samples_leaf = 20;
  p.subsample = 0.8;
  return {p};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recsel: per-user recommender algorithm selection"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value config file; flags override it");
  app.option_defaults()->always_capture_default();

  Globals g;
  if (const char* env = std::getenv("RECSEL_CACHE_DIR")) g.cache_dir = env;
  app.add_option("--threads", g.threads, "Worker cap (0 = all cores)")->capture_default_str();
  app.add_option("--seed", g.seed, "Base random seed")->capture_default_str();
  app.add_option("--cache-dir", g.cache_dir, "Fitted-model cache (env RECSEL_CACHE_DIR; 'none' disables)");
  app.add_flag("-q,--quiet", g.quiet, "Suppress progress messages");

  std::string out_dir = "out";
  auto add_out = [&](CLI::App* cmd) { cmd->add_option("-o,--out", out_dir, "Output directory")->capture_default_str(); };

  DataOptions data;
  auto* ingest = app.add_subcommand("ingest", "Load, filter and split interactions; write stats");
  data.add_to(ingest, false);
  add_out(ingest);

  auto* gt = app.add_subcommand("ground-truth", "Fit the portfolio and write the NDCG performance matrix");
  data.add_to(gt, true);
  add_out(gt);

  auto* feats = app.add_subcommand("features", "Write user and algorithm meta-feature tables");
  data.add_to(feats, true);
  add_out(feats);

  std::vector<std::string> cm_files;
  std::string cm_manifest, cm_profile, cm_ast, cm_out;
  auto* cm = app.add_subcommand("code-metrics", "Static code metrics of recommender sources");
  cm->add_option("files", cm_files, "Source files (algo_id = file stem)")->check(CLI::ExistingFile);
  cm->add_option("--manifest", cm_manifest, "Portfolio manifest naming the sources")->check(CLI::ExistingFile);
  cm->add_option("--profile", cm_profile, "Language profile (cpp, python); default by extension")
      ->check(CLI::IsMember(code::profile_names()));
  cm->add_option("--ast-json", cm_ast, "External syntax tree JSON replacing the built-in tree")
      ->check(CLI::ExistingFile);
  cm->add_option("-o,--out", cm_out, "Output CSV (default stdout)");

  Precomputed pre;
  std::string grid_name = "default";
  auto* train = app.add_subcommand("train", "Tune and train both meta-learners on all users");
  train->add_option("--performance", pre.performance, "Performance matrix CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--user-features", pre.user_features, "User feature CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--algo-features", pre.algo_features, "Algorithm feature CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--grid", grid_name, "Tuning grid: default (8 points) or single")
      ->check(CLI::IsMember({"default", "single"}));
  add_out(train);

  ExperimentConfig cfg;
  std::string name = "dataset";
  std::string tie_mode = "value";
  auto* run = app.add_subcommand("run", "Full pipeline with user-grouped cross-validation and report");
  data.add_to(run, true);
  run->add_option("--folds", cfg.n_folds, "Cross-validation folds")->check(CLI::Range(2, 1000))->capture_default_str();
  run->add_flag("--sba-global", cfg.sba_global, "Choose SBA on the full matrix instead of per training fold");
  run->add_option("--tie-mode", tie_mode, "Top-1 tie counting: value or index")
      ->check(CLI::IsMember({"value", "index"}));
  run->add_option("--grid", grid_name, "Tuning grid: default (8 points) or single")
      ->check(CLI::IsMember({"default", "single"}));
  run->add_option("--name", name, "Dataset label in the report")->capture_default_str();
  add_out(run);

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* rep = app.add_subcommand("report", "Merge report JSON files into one table");
  rep->add_option("reports", report_inputs, "report.json files")->required()->check(CLI::ExistingFile);
  rep->add_option("-o,--out", report_out, "Output directory (default: print table only)");

  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path out = out_dir;
    if (*ingest) cmd_ingest(g, data, out);
    if (*gt) cmd_ground_truth(g, data, out);
    if (*feats) cmd_features(g, data, out);
    if (*cm) cmd_code_metrics(g, cm_files, cm_manifest, cm_profile, cm_ast, cm_out);
    if (*train) cmd_train(g, pre, grid_from(grid_name), out);
    if (*run) {
      cfg.tie_mode = tie_mode_from_string(tie_mode);
      cfg.grid = grid_from(grid_name);
      cmd_run(g, data, cfg, name, out);
    }
    if (*rep) cmd_report(g, report_inputs, report_out);
  } catch (const std::exception& e) {
    std::cerr << "recsel: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "recsel/code_metrics.hpp"
#include "recsel/dataset.hpp"
#include "recsel/error.hpp"
#include "recsel/experiment.hpp"
#include "recsel/gbt.hpp"
#include "recsel/ground_truth.hpp"
#include "recsel/portfolio.hpp"
#include "recsel/user_features.hpp"

namespace py = pybind11;
using namespace recsel;

namespace {

SplitDataset load_split(const std::filesystem::path& path, const std::optional<std::string>& rating_col,
                        std::size_t min_interactions, double train_fraction) {
  Schema schema;
  schema.rating = rating_col;
  const auto ext = path.extension().string();
  const auto fmt = ext == ".tsv" || ext == ".tab" ? FileFormat::tsv : FileFormat::csv;
  auto ds = load_interactions(path, fmt, schema).dataset;
  return temporal_split(filter_min_interactions(ds, min_interactions), train_fraction);
}

std::vector<RecommenderSpec> specs_for(const std::optional<std::filesystem::path>& manifest, std::uint64_t seed) {
  if (manifest) return load_portfolio_manifest(*manifest);
  auto specs = default_portfolio(RECSEL_SOURCE_DIR);
  for (auto& s : specs) s.seed = seed;
  return specs;
}

py::dict algo_features_dict(const code::AlgoFeatureVector& f) {
  py::dict d;
  const auto v = f.values();
  for (std::size_t k = 0; k < code::kAlgoFeatureCount; ++k) d[py::str(std::string(code::kAlgoFeatureNames[k]))] = v[k];
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Per-user recommender algorithm selection";

  py::register_exception<Error>(m, "RecselError", PyExc_RuntimeError);

  m.def(
      "ndcg_at_k",
      [](const std::vector<std::size_t>& ranked, const std::vector<std::size_t>& relevant, std::size_t k) {
        return ndcg_at_k(std::span<const std::size_t>(ranked), std::span<const std::size_t>(relevant), k);
      },
      py::arg("ranked"), py::arg("relevant"), py::arg("k") = 10);
  m.def(
      "sparsity",
      [](std::size_t users, std::size_t items, std::size_t interactions) {
        return dataset_stats(users, items, interactions).sparsity;
      },
      py::arg("users"), py::arg("items"), py::arg("interactions"));
  m.def("relative_gain", &relative_gain, py::arg("value"), py::arg("reference"));
  m.def("gap_closed", py::overload_cast<double, double, double>(&gap_closed), py::arg("perf"), py::arg("sba"),
        py::arg("vba"));

  m.def(
      "code_metrics",
      [](const std::filesystem::path& path, std::optional<std::string> profile) {
        const auto& p = profile ? code::profile(*profile) : code::profile_for(path);
        return algo_features_dict(code::extract_algo_features(path.stem().string(), path, p));
      },
      py::arg("path"), py::arg("profile") = py::none());

  py::class_<GBTParams>(m, "GBTParams")
      .def(py::init<>())
      .def_readwrite("n_trees", &GBTParams::n_trees)
      .def_readwrite("max_depth", &GBTParams::max_depth)
      .def_readwrite("learning_rate", &GBTParams::learning_rate)
      .def_readwrite("min_samples_leaf", &GBTParams::min_samples_leaf)
      .def_readwrite("subsample", &GBTParams::subsample)
      .def_readwrite("seed", &GBTParams::seed)
      .def("__repr__", [](const GBTParams& p) { return "GBTParams(" + to_string(p) + ")"; });

  py::class_<GBTEnsemble>(m, "GBTEnsemble")
      .def_readonly("base", &GBTEnsemble::base)
      .def_readonly("n_features", &GBTEnsemble::n_features)
      .def_property_readonly("n_trees", [](const GBTEnsemble& e) { return e.trees.size(); })
      .def("predict", &GBTEnsemble::predict, py::arg("X"))
      .def("to_json", [](const GBTEnsemble& e) { return e.to_json().dump(); })
      .def_static("from_json", [](const std::string& s) { return GBTEnsemble::from_json(nlohmann::json::parse(s)); });

  m.def(
      "fit_gbt",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GBTParams& params) {
        py::gil_scoped_release release;
        return fit_gbt(X, y, params);
      },
      py::arg("X"), py::arg("y"), py::arg("params") = GBTParams{});

  m.def(
      "dataset_stats",
      [](const std::filesystem::path& path, std::optional<std::string> rating_col, std::size_t min_interactions) {
        Schema schema;
        schema.rating = rating_col;
        const auto raw = load_interactions(path, FileFormat::csv, schema).dataset;
        const auto s = dataset_stats(filter_min_interactions(raw, min_interactions));
        py::dict d;
        d["n_users"] = s.n_users;
        d["n_items"] = s.n_items;
        d["n_interactions"] = s.n_interactions;
        d["sparsity"] = s.sparsity;
        return d;
      },
      py::arg("path"), py::arg("rating_col") = py::none(), py::arg("min_interactions") = 10);

  m.def(
      "run",
      [](const std::filesystem::path& path, const std::string& name, std::optional<std::string> rating_col,
         std::uint64_t seed, std::size_t folds, bool sba_global, const std::string& tie_mode, std::size_t threads,
         std::optional<std::filesystem::path> portfolio, std::optional<std::filesystem::path> cache_dir) {
        ExperimentReport report;
        {
          py::gil_scoped_release release;
          const auto split = load_split(path, rating_col, 10, 0.8);
          ExperimentConfig cfg;
          cfg.seed = seed;
          cfg.n_folds = folds;
          cfg.sba_global = sba_global;
          cfg.tie_mode = tie_mode_from_string(tie_mode);
          cfg.threads = threads;
          std::optional<ModelCache> cache;
          if (cache_dir) cache.emplace(*cache_dir);
          report.tie_mode = to_string(cfg.tie_mode);
          report.sba_global = sba_global;
          report.rows.push_back(run_experiment(name, split, specs_for(portfolio, seed), cfg, cache ? &*cache : nullptr));
        }
        return report_json(report);
      },
      py::arg("path"), py::arg("name") = "dataset", py::arg("rating_col") = py::none(), py::arg("seed") = 42,
      py::arg("folds") = 5, py::arg("sba_global") = false, py::arg("tie_mode") = "value", py::arg("threads") = 1,
      py::arg("portfolio") = py::none(), py::arg("cache_dir") = py::none());

  m.def("report_csv", [](const std::string& json) { return report_csv(parse_report_json(json)); });
  m.def("report_table", [](const std::string& json) { return report_table(parse_report_json(json)); });
  m.attr("report_columns") = kReportColumns;
  m.attr("source_dir") = std::string(RECSEL_SOURCE_DIR);
}

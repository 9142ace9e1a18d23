#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "recsel/dataset.hpp"

namespace recsel {

enum class Family { popularity, itemknn, bpr, implicitmf, ease, fpmc };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

using Params = std::map<std::string, double>;

struct RecommenderSpec {
  std::string algo_id;
  Family family = Family::popularity;
  // Built-in implementation that fits this spec (e.g. "bpr_b"). Several
  // implementations may share a family.
  std::string implementation;
  Params params;
  std::filesystem::path source_path;
  std::uint64_t seed = 0;

  double param(const std::string& name, double fallback) const {
    auto it = params.find(name);
    return it == params.end() ? fallback : it->second;
  }
};

struct RankedList {
  std::vector<std::size_t> items;
  std::vector<double> scores;
};

// Named dense matrices holding everything a fitted model needs to score.
using ModelState = std::map<std::string, Eigen::MatrixXd>;

class FittedModel {
 public:
  FittedModel() = default;
  FittedModel(std::string algo_id, std::string implementation, std::size_t n_items,
              ModelState state, std::vector<std::vector<std::size_t>> history);

  const std::string& algo_id() const { return algo_id_; }
  const std::string& implementation() const { return implementation_; }
  std::size_t n_users() const { return history_.size(); }
  std::size_t n_items() const { return n_items_; }
  const ModelState& state() const { return state_; }
  const Eigen::MatrixXd& matrix(const std::string& name) const;
  // Distinct training items of `user`, ascending.
  const std::vector<std::size_t>& history(std::size_t user) const { return history_[user]; }
  const std::vector<std::vector<std::size_t>>& histories() const { return history_; }

  // Raw scores over the whole catalog for `user`.
  Eigen::VectorXd scores(std::size_t user) const;

 private:
  std::string algo_id_;
  std::string implementation_;
  std::size_t n_items_ = 0;
  ModelState state_;
  std::vector<std::vector<std::size_t>> history_;
};

// One built-in recommender implementation.
struct Implementation {
  std::string name;
  Family family;
  Params defaults;
  // Source file, relative to the project root, for code-metric extraction.
  std::string source_file;
  std::function<ModelState(const RecommenderSpec&, const Dataset&)> fit;
  std::function<void(const FittedModel&, std::size_t user, Eigen::Ref<Eigen::VectorXd> out)> score;
};

const std::vector<Implementation>& implementations();
const Implementation& find_implementation(const std::string& name);

FittedModel fit(const RecommenderSpec& spec, const Dataset& train);

// Top-k unseen items, scores non-increasing, ties by ascending item index.
RankedList recommend(const FittedModel& model, std::size_t user, std::size_t k);

// Ranks a precomputed score vector, excluding `exclude` (sorted ascending).
RankedList top_k(const Eigen::VectorXd& scores, std::span<const std::size_t> exclude, std::size_t k);

// Nine-member portfolio: pop_a, pop_b, itemknn_a, itemknn_b, bpr_a, bpr_b,
// implicitmf, ease, fpmc. Source paths are resolved against `source_root`.
std::vector<RecommenderSpec> default_portfolio(const std::filesystem::path& source_root);

// Key-value portfolio manifest (INI sections, one per algo_id).
std::vector<RecommenderSpec> load_portfolio_manifest(const std::filesystem::path& path);
std::string write_portfolio_manifest(const std::vector<RecommenderSpec>& specs,
                                     const std::filesystem::path& relative_to);

// Content hashes used as cache keys.
std::uint64_t dataset_hash(const Dataset& ds);
std::uint64_t spec_hash(const RecommenderSpec& spec);

// Versioned binary (CBOR) model cache format.
std::vector<std::uint8_t> serialize_model(const FittedModel& model);
FittedModel deserialize_model(std::span<const std::uint8_t> bytes);

// Directory cache keyed by (dataset hash, spec hash).
class ModelCache {
 public:
  explicit ModelCache(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::filesystem::path path_for(std::uint64_t data_hash, std::uint64_t spec_hash) const;
  std::optional<FittedModel> load(std::uint64_t data_hash, std::uint64_t spec_hash) const;
  void store(std::uint64_t data_hash, std::uint64_t spec_hash, const FittedModel& model) const;

 private:
  std::filesystem::path dir_;
};

// Implementation-specific helpers shared with tests.
namespace detail {

// Binary user x item co-occurrence counts of distinct consumption.
std::vector<std::size_t> item_user_counts(const Dataset& train);

// Weighted regularized squared loss minimized by the ALS implementation.
double implicit_mf_objective(const Dataset& train, const Eigen::MatrixXd& user_factors,
                             const Eigen::MatrixXd& item_factors, double alpha, double reg);

}  // namespace detail

}  // namespace recsel

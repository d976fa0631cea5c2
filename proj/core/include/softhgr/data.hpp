#pragma once

#include "softhgr/distribution.hpp"
#include "softhgr/linalg.hpp"
#include "softhgr/modal_batch.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace softhgr::data {

/// m x cardinality indicator matrix, one 1 per row.
Matrix one_hot(const std::vector<int>& indices, Eigen::Index cardinality);

/// Normalized Gamma(concentration) weights per cell (symmetric Dirichlet).
DiscreteJoint gen_random_joint(Eigen::Index card_x, Eigen::Index card_y, double concentration,
                               std::uint64_t seed);

struct LatentClassParams {
  int classes = 5;
  std::vector<Eigen::Index> dims{10, 10};  // one width per view
  double noise = 0.5;                      // isotropic noise standard deviation
  double centroid_scale = 1.0;             // centroid entries ~ N(0, scale^2)
  Eigen::Index n = 1000;
  double label_fraction = 1.0;
  std::vector<double> missing;             // per-view missing fraction; empty = none
  std::uint64_t seed = 0;
};

struct LatentClassData {
  ModalBatch batch;
  std::vector<Matrix> centroids;  // per view: classes x dim
};

/// z uniform; view j = centroid_j(z) + noise * N(0, I), views conditionally
/// independent given z. Labels are z; a seeded label_fraction of rows is
/// flagged as labeled. Missing masks are disjoint across views.
LatentClassData gen_latent_class(const LatentClassParams& params);

/// Bayes-rule class for one view of a latent-class sample (equal priors,
/// isotropic noise): nearest centroid.
int bayes_class(const Matrix& centroids, const RowVector& x);

/// Seeded smooth random vectors (a few low-frequency harmonics plus small
/// white noise) split into left and right halves as two modalities.
ModalBatch gen_split_vector(Eigen::Index dim, Eigen::Index n, std::uint64_t seed);

/// Splits each row into its left and right halves as a bimodal batch.
ModalBatch split_halves(const Matrix& vectors);

/// Marks per-row missing modalities. For each row at most one modality is
/// dropped; fractions must sum to at most 1.
Mask disjoint_missing_mask(Eigen::Index n, const std::vector<double>& fractions, std::uint64_t seed);

enum class ColumnKind { categorical, continuous, raw };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  std::vector<std::string> vocabulary;  // categorical only
};

struct ModalitySpec {
  std::string name;
  std::vector<ColumnSpec> columns;
};

struct LabelSpec {
  std::string column;
  std::vector<std::string> vocabulary;
};

struct ColumnStats {
  double mean = 0.0;
  double stddev = 1.0;
};

enum class RecipeKind { random_joint, latent_class, split_vector };

/// Generator parameters; unused fields are ignored by the chosen kind.
struct SyntheticRecipe {
  RecipeKind kind = RecipeKind::latent_class;
  Eigen::Index card_x = 10;
  Eigen::Index card_y = 10;
  double concentration = 1.0;
  int classes = 5;
  std::vector<Eigen::Index> dims{10, 10};
  double noise = 0.5;
  double centroid_scale = 1.0;
  Eigen::Index dim = 56;
  Eigen::Index n = 1000;
  double label_fraction = 1.0;
  std::vector<double> missing;
  std::uint64_t seed = 0;

  static SyntheticRecipe from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Where a dataset comes from and how its columns map to modalities.
struct DatasetSpec {
  std::optional<std::filesystem::path> path;
  std::optional<SyntheticRecipe> synthetic;
  std::vector<ModalitySpec> modalities;
  std::optional<LabelSpec> label;
  double train_fraction = 1.0;  // leading rows used for normalization statistics
  std::map<std::string, ColumnStats> normalization;  // frozen statistics, if any
  std::uint64_t seed = 0;

  /// Relative paths in `j` are resolved against `base_dir`.
  static DatasetSpec from_json(const nlohmann::json& j,
                               const std::filesystem::path& base_dir = {});
  nlohmann::json to_json() const;
};

struct LoadedDataset {
  ModalBatch batch;
  std::map<std::string, ColumnStats> normalization;
};

/// Reads an RFC-4180 CSV with a header row. Categorical columns are one-hot
/// encoded, continuous columns standardized, raw columns copied. An empty
/// field marks its modality missing for that row (or the row unlabeled).
LoadedDataset load_csv(const std::filesystem::path& path, const DatasetSpec& spec);

/// Synthetic or file-backed load, by spec.
LoadedDataset load_dataset(const DatasetSpec& spec);

/// Writes a batch as CSV with raw columns "m<j>_<c>" (empty when missing)
/// and an optional "label" column; returns the matching spec.
DatasetSpec write_csv(const ModalBatch& batch, const std::filesystem::path& path);

}  // namespace softhgr::data

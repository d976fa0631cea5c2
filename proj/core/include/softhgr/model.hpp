#pragma once

#include "softhgr/linalg.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace softhgr {

enum class Activation { identity, relu };

/// Layer widths [p, h1, ..., k] plus one activation per affine layer.
/// A linear map is the special case widths = {p, k}.
struct Architecture {
  std::vector<Eigen::Index> widths;
  std::vector<Activation> activations;

  /// Rectifier on every hidden layer, identity on the output layer.
  static Architecture mlp(std::vector<Eigen::Index> widths);
  static Architecture linear(Eigen::Index in, Eigen::Index out) { return mlp({in, out}); }

  Eigen::Index input_width() const { return widths.front(); }
  Eigen::Index output_width() const { return widths.back(); }
  std::size_t layer_count() const { return widths.size() - 1; }

  void validate() const;

  nlohmann::json to_json() const;
  static Architecture from_json(const nlohmann::json& j);

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct Layer {
  Matrix weight;  // fan_in x fan_out
  RowVector bias;
  Activation activation = Activation::identity;
};

/// Parametric map R^p -> R^k, evaluated row-wise on a batch.
struct FeatureMap {
  Architecture architecture;
  std::vector<Layer> layers;
  std::uint64_t seed = 0;

  Eigen::Index input_width() const { return architecture.input_width(); }
  Eigen::Index output_width() const { return architecture.output_width(); }
  Eigen::Index parameter_count() const;

  /// Parameters flattened layer by layer: weight (row-major), then bias.
  Vector parameters() const;
  void set_parameters(const Vector& flat);
};

/// Gradients laid out exactly like FeatureMap::layers.
struct MapGradients {
  std::vector<Matrix> weight;
  std::vector<RowVector> bias;

  static MapGradients zeros_like(const FeatureMap& map);
  Vector flatten() const;
  MapGradients& operator+=(const MapGradients& other);
  MapGradients& operator*=(double scale);
};

/// m x k features, optionally flagged as column-centered.
struct FeatureBatch {
  Matrix features;
  bool centered = false;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

struct CovarianceEstimate {
  Matrix cov;
};

/// Intermediate values of one forward pass, kept for backward().
struct ForwardTrace {
  std::vector<Matrix> layer_inputs;  // layer_inputs[0] is the network input
  std::vector<Matrix> pre_activations;
  Matrix output;
};

/// Glorot-uniform weights, zero biases, deterministic per seed.
FeatureMap init(const Architecture& architecture, std::uint64_t seed);

FeatureBatch forward(const FeatureMap& map, const Matrix& inputs);
ForwardTrace forward_trace(const FeatureMap& map, const Matrix& inputs);

/// Reverse-mode gradient of sum_rows <output, output_gradients>. The
/// rectifier subgradient at 0 is 0.
MapGradients backward(const FeatureMap& map, const ForwardTrace& trace,
                      const Matrix& output_gradients);
MapGradients backward(const FeatureMap& map, const Matrix& inputs, const Matrix& output_gradients);

/// Subtracts column means (requires m >= 2).
FeatureBatch center(const FeatureBatch& batch);

/// 1/(m-1) * sum_i f_i f_i^T over a centered batch.
CovarianceEstimate batch_covariance(const FeatureBatch& batch);

inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json to_json(const FeatureMap& map);
FeatureMap feature_map_from_json(const nlohmann::json& j);

/// {"format_version", "seed", "maps": [...]}; callers may attach extra keys.
nlohmann::json checkpoint_json(const std::vector<FeatureMap>& maps, std::uint64_t seed);
std::vector<FeatureMap> maps_from_checkpoint(const nlohmann::json& j);

}  // namespace softhgr

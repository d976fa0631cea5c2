#pragma once

#include "softhgr/linalg.hpp"
#include "softhgr/modal_batch.hpp"
#include "softhgr/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace softhgr {

enum class ObjectiveKind { soft_hgr, multimodal, semi_supervised, whitened };

/// Per unordered modality pair (i < j). `value` is inner - trace / 2 for the
/// pair; the ordered-pair objective counts it twice.
struct PairTerm {
  std::size_t first = 0;
  std::size_t second = 0;
  Eigen::Index co_present = 0;
  double inner = 0.0;
  double trace = 0.0;
  double value = 0.0;
};

/// Objective value, its additive terms, and gradients.
///
/// How `value` is assembled from the terms depends on `kind`:
///   soft_hgr / multimodal:  inner - trace / 2
///   semi_supervised:        (lambda - 1) * supervised - lambda * inner + lambda / 2 * trace
///   whitened:               inner (the sum of canonical correlations), trace = 0
/// Gradients are of `value` itself, in the sign it is reported.
struct ObjectiveReport {
  ObjectiveKind kind = ObjectiveKind::soft_hgr;
  double value = 0.0;
  double inner_term = 0.0;
  double trace_term = 0.0;
  std::optional<double> supervised_term;  // mean log-posterior over labeled rows
  double lambda = 0.0;

  std::vector<Matrix> feature_gradients;   // one m x k matrix per modality
  std::vector<MapGradients> map_gradients; // filled by the parametric overloads
  std::optional<Matrix> head_gradient;
  std::vector<PairTerm> pairs;

  /// Value recomputed from the stored terms.
  double reconstruct() const;
};

/// Two-view soft objective on a mini-batch: center both views, then
/// 1/(m-1) sum_i f_i.g_i - tr(cov f * cov g) / 2 with 1/(m-1) covariances.
ObjectiveReport soft_hgr(const FeatureBatch& f, const FeatureBatch& g);

/// Sum over ordered modality pairs. The inner term of pair (i, j) uses the
/// samples where both are present, normalized by (m_ij - 1); each covariance
/// uses every sample where that modality is present.
ObjectiveReport multimodal_soft_hgr(const std::vector<FeatureBatch>& features, const Mask& presence);
ObjectiveReport multimodal_soft_hgr(const ModalBatch& batch, const std::vector<FeatureMap>& maps);

/// Which features the softmax head consumes.
enum class HeadInput { concatenated, first_only };

/// Linear softmax classifier without bias: theta is (input width) x classes.
struct SoftmaxHead {
  Matrix theta;
  HeadInput input = HeadInput::concatenated;

  int class_count() const { return static_cast<int>(theta.cols()); }
  Eigen::Index input_width() const { return theta.rows(); }

  static SoftmaxHead zeros(Eigen::Index input_width, int classes, HeadInput input);
  static SoftmaxHead random(Eigen::Index input_width, int classes, HeadInput input,
                            std::uint64_t seed);

  nlohmann::json to_json() const;
  static SoftmaxHead from_json(const nlohmann::json& j);
};

/// Class posterior for one sample. `g_feat` is ignored for first_only heads.
Vector softmax_posterior(const SoftmaxHead& head, const RowVector& f_feat, const RowVector& g_feat);

/// Row-wise posteriors for a batch; returns m x classes.
Matrix softmax_posteriors(const SoftmaxHead& head, const Matrix& f_feat, const Matrix& g_feat);

/// Composite loss (to be minimized). The soft terms use every sample, the
/// supervised term averages log Q over labeled samples only.
ObjectiveReport semi_supervised_loss(const FeatureBatch& f, const FeatureBatch& g,
                                     const std::vector<int>& labels, const RowMask& labeled,
                                     const SoftmaxHead& head, double lambda);
ObjectiveReport semi_supervised_loss(const ModalBatch& batch, const FeatureMap& f,
                                     const FeatureMap& g, const SoftmaxHead& head, double lambda);

inline constexpr double kDefaultWhiteningRidge = 1e-8;

/// Hard-whitened baseline: nuclear norm of cov(f)^-1/2 crosscov(f,g) cov(g)^-1/2
/// with `ridge` added to both auto-covariances. Propagates
/// Error(singular_covariance) from the inverse square root.
ObjectiveReport whitened_correlation(const FeatureBatch& f, const FeatureBatch& g,
                                     double ridge = kDefaultWhiteningRidge);

}  // namespace softhgr

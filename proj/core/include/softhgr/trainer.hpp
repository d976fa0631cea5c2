#pragma once

#include "softhgr/error.hpp"
#include "softhgr/modal_batch.hpp"
#include "softhgr/model.hpp"
#include "softhgr/objective.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace softhgr {

struct TrainConfig {
  Eigen::Index batch_size = 256;
  double learning_rate = 0.01;
  double momentum = 0.9;
  int epochs = 10;
  std::uint64_t seed = 0;
  ObjectiveKind objective = ObjectiveKind::soft_hgr;
  double lambda = 0.5;                   // semi_supervised only
  Eigen::Index k = 3;
  std::vector<Architecture> architectures;  // one per modality, output width k
  bool shuffle = true;
  HeadInput head_input = HeadInput::concatenated;  // semi_supervised only
  double ridge = kDefaultWhiteningRidge;            // whitened only
  bool evaluate_full_data = true;  // score final parameters on all samples

  /// Throws Error(invalid_argument) if the config cannot run on `data`.
  void validate(const ModalBatch& data) const;

  nlohmann::json to_json() const;
  /// Collects every schema problem before throwing a single Error(schema)
  /// whose message lists them all, one per line.
  static TrainConfig from_json(const nlohmann::json& j);
};

struct FailureRecord {
  Eigen::Index step = 0;  // global step index
  int epoch = 0;
  ErrorKind kind = ErrorKind::invalid_input;
  std::string message;
};

/// Training history. Objectives are always reported so that larger means
/// more correlation (the semi-supervised loss is negated).
struct TrainTrace {
  std::vector<double> epoch_objectives;
  std::vector<double> step_objectives;
  std::vector<double> step_seconds;
  std::vector<FailureRecord> failures;
  Eigen::Index steps_per_epoch = 0;
  std::optional<double> final_objective;  // full-data score of the final parameters
  std::string checkpoint;                 // path of the saved checkpoint, if any

  /// One JSON object per epoch: {epoch, objective, mean_step_seconds, failures}.
  std::string to_jsonl() const;
};

struct TrainResult {
  TrainTrace trace;
  std::vector<FeatureMap> maps;
  std::optional<SoftmaxHead> head;

  nlohmann::json checkpoint(std::uint64_t seed) const;
};

/// Parameters under training for one objective.
struct ModelState {
  std::vector<FeatureMap> maps;
  std::optional<SoftmaxHead> head;
};

ModelState init_state(const TrainConfig& config, const ModalBatch& data);

/// Objective with parameter gradients for `batch` under `state`.
ObjectiveReport evaluate_objective(const TrainConfig& config, const ModelState& state,
                                   const ModalBatch& batch);

/// Objective in reporting sign (larger = better).
double reported_objective(const ObjectiveReport& report);

/// Mini-batch SGD with momentum. Maximizes the correlation objectives,
/// minimizes the semi-supervised loss. The last incomplete batch of each
/// epoch is dropped. A numerical failure stops training and is recorded.
TrainResult train(const TrainConfig& config, const ModalBatch& data);

struct TimingStats {
  double median_seconds = 0.0;
  double min_seconds = 0.0;
  double max_seconds = 0.0;
  double iqr_seconds = 0.0;
  std::size_t samples = 0;
  std::optional<FailureRecord> failure;
};

struct StepTiming {
  TimingStats soft;
  TimingStats baseline;
};

/// Wall time of one full SGD step (forward, objective, backward, update) on
/// the first `config.batch_size` rows, for the soft objective and for the
/// whitened baseline with the same maps. One warm-up step precedes the
/// timed repetitions.
StepTiming time_step(const TrainConfig& config, const ModalBatch& data, int repetitions);

}  // namespace softhgr

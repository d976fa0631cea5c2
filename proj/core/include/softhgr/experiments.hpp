#pragma once

#include "softhgr/distribution.hpp"
#include "softhgr/report.hpp"
#include "softhgr/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace softhgr::experiments {

/// Exact oracle on a distribution file. Metrics: sigma (series), sigma_sum,
/// soft_optimum. Series f_table / g_table hold the optimal features.
ExperimentReport oracle(const DiscreteJoint& joint, Eigen::Index k);
ExperimentReport oracle(const std::filesystem::path& dist_file, Eigen::Index k);

struct LinearityParams {
  Eigen::Index card = 30;
  Eigen::Index n = 100000;
  Eigen::Index k = 5;
  std::uint64_t seed = 0;
  double concentration = 1.0;
  int epochs = 300;
  Eigen::Index batch_size = 0;  // 0 = full batch
  // 0 = scale with the alphabet: each one-hot column only sees ~n/card
  // rows, so the usable step grows with card. Auto picks 2/3 * card.
  double learning_rate = 0.0;
  double momentum = 0.9;
};

/// Samples from a seeded random joint, solves the exact problem on the
/// empirical joint, trains linear soft maps on one-hot data, and reports the
/// four CCA sums plus the upper bound k.
ExperimentReport linearity(const LinearityParams& params);

struct BenchParams {
  Eigen::Index m = 1000;
  std::vector<Eigen::Index> k_list{50, 100, 200, 400};
  double ridge = 0.0;
  int repetitions = 5;
  Eigen::Index dim = 1024;  // split-vector width; each modality gets dim / 2
  std::uint64_t seed = 0;
};

/// Step timing of the soft objective and the whitened baseline per k, with
/// the first k at which the baseline fails.
ExperimentReport bench(const BenchParams& params);

struct SemiParams {
  int classes = 5;
  Eigen::Index dim = 10;
  double noise = 0.5;
  // Keeps the classes overlapping (Bayes accuracy ~0.83 at the defaults);
  // at 1.0 every method saturates near 100% and nothing can be compared.
  double centroid_scale = 0.35;
  Eigen::Index n = 20000;
  double test_fraction = 0.2;
  std::vector<double> lambdas{0.0, 0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> label_fractions{0.1};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  Eigen::Index k = 4;
  Eigen::Index hidden = 32;
  int epochs = 10;
  Eigen::Index batch_size = 200;
  double learning_rate = 0.05;
  double momentum = 0.9;
};

/// Held-out accuracy of the semi-supervised model (view-1 features only at
/// test time) per (label fraction, lambda), averaged over seeds.
ExperimentReport semi(const SemiParams& params);

/// Accuracy of one trained semi-supervised model on a held-out batch.
double heldout_accuracy(const TrainResult& model, const ModalBatch& test);

struct TrainRun {
  ExperimentReport report;
  TrainResult result;
};

/// Runs a JSON training config ({...TrainConfig fields, "data": DatasetSpec}).
/// Writes trace.jsonl and checkpoint.json to `out_dir` when given.
TrainRun train_from_config(const nlohmann::json& config, const std::filesystem::path& base_dir,
                           const std::optional<std::filesystem::path>& out_dir);

}  // namespace softhgr::experiments

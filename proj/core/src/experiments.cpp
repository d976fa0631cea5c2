#include "softhgr/experiments.hpp"

#include "softhgr/data.hpp"
#include "softhgr/error.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

namespace softhgr::experiments {

namespace {

using clock = std::chrono::steady_clock;

double seconds_since(clock::time_point t0) {
  return std::chrono::duration<double>(clock::now() - t0).count();
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

Series table_series(const std::string& name, const Matrix& table) {
  Series s;
  s.name = name;
  s.columns.push_back("symbol");
  for (Eigen::Index i = 0; i < table.cols(); ++i) s.columns.push_back("feature_" + std::to_string(i + 1));
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    std::vector<double> row{static_cast<double>(r)};
    for (Eigen::Index c = 0; c < table.cols(); ++c) row.push_back(table(r, c));
    s.rows.push_back(std::move(row));
  }
  return s;
}

Matrix lookup_rows(const Matrix& table, const std::vector<int>& index) {
  Matrix out(static_cast<Eigen::Index>(index.size()), table.cols());
  for (std::size_t i = 0; i < index.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = table.row(index[i]);
  return out;
}

std::string fraction_tag(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", f);
  return buf;
}

}  // namespace

ExperimentReport oracle(const DiscreteJoint& joint, Eigen::Index k) {
  const auto t0 = clock::now();
  const HgrSolution s = exact_hgr(joint, k);
  ExperimentReport r;
  r.experiment = "oracle";
  r.config = {{"k", k}, {"card_x", joint.card_x()}, {"card_y", joint.card_y()}};
  r.add("sigma", "correlation", std::vector<double>(s.sigmas.data(), s.sigmas.data() + s.sigmas.size()));
  r.add("sigma_sum", "correlation", s.sigmas.sum());
  r.add("soft_optimum", "objective", 0.5 * s.sigmas.squaredNorm());
  r.series.push_back(table_series("f_table", s.f_table));
  r.series.push_back(table_series("g_table", s.g_table));
  r.wall_clock_seconds = seconds_since(t0);
  return r;
}

ExperimentReport oracle(const std::filesystem::path& dist_file, Eigen::Index k) {
  std::ifstream in(dist_file);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open " + dist_file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, dist_file.string() + ": " + e.what());
  }
  ExperimentReport r = oracle(DiscreteJoint::from_json(j), k);
  r.config["dist"] = dist_file.string();
  return r;
}

ExperimentReport linearity(const LinearityParams& p) {
  require(p.card >= 2, ErrorKind::invalid_argument, "linearity: card must be >= 2");
  require(p.k >= 1 && p.k <= p.card - 1, ErrorKind::invalid_argument,
          "linearity: k must lie in [1, card - 1]");
  const auto t0 = clock::now();

  const DiscreteJoint joint = data::gen_random_joint(p.card, p.card, p.concentration, p.seed);
  const IndexSamples s = sample(joint, static_cast<std::size_t>(p.n), p.seed + 1);
  const DiscreteJoint empirical = DiscreteJoint::empirical(s.x, s.y, p.card, p.card);
  const HgrSolution hgr = exact_hgr(empirical, p.k);

  const Matrix x = data::one_hot(s.x, p.card);
  const Matrix y = data::one_hot(s.y, p.card);
  const ModalBatch batch = ModalBatch::complete({x, y});

  TrainConfig cfg;
  cfg.objective = ObjectiveKind::soft_hgr;
  cfg.k = p.k;
  cfg.batch_size = p.batch_size > 0 ? p.batch_size : p.n;
  cfg.learning_rate = p.learning_rate > 0.0 ? p.learning_rate : 2.0 * static_cast<double>(p.card) / 3.0;
  cfg.momentum = p.momentum;
  cfg.epochs = p.epochs;
  cfg.seed = p.seed;
  cfg.architectures = {Architecture::linear(p.card, p.k), Architecture::linear(p.card, p.k)};
  const TrainResult trained = train(cfg, batch);
  require(trained.trace.failures.empty(), ErrorKind::singular_covariance,
          "linearity: soft training failed: " +
              (trained.trace.failures.empty() ? std::string{} : trained.trace.failures.front().message));

  const Matrix f_hgr = lookup_rows(hgr.f_table, s.x);
  const Matrix g_hgr = lookup_rows(hgr.g_table, s.y);
  const Matrix f_soft = forward(trained.maps[0], x).features;
  const Matrix g_soft = forward(trained.maps[1], y).features;

  ExperimentReport r;
  r.experiment = "linearity";
  r.seed = p.seed;
  r.config = {{"card", p.card}, {"n", p.n}, {"k", p.k}, {"seed", p.seed},
              {"concentration", p.concentration}, {"epochs", p.epochs},
              {"batch_size", cfg.batch_size}, {"learning_rate", cfg.learning_rate},
              {"momentum", p.momentum}};
  r.add("upper_bound", "correlation", static_cast<double>(p.k));
  r.add("cca_hgr_f_g", "correlation", sum(linalg::linear_cca(f_hgr, g_hgr, p.k)));
  r.add("cca_soft_f_g", "correlation", sum(linalg::linear_cca(f_soft, g_soft, p.k)));
  r.add("cca_soft_hgr_f", "correlation", sum(linalg::linear_cca(f_soft, f_hgr, p.k)));
  r.add("cca_soft_hgr_g", "correlation", sum(linalg::linear_cca(g_soft, g_hgr, p.k)));
  r.add("soft_objective", "objective", trained.trace.final_objective.value_or(0.0));
  r.add("soft_optimum_empirical", "objective", soft_hgr_optimum(empirical, p.k));
  r.add("epoch_objective", "objective", trained.trace.epoch_objectives);
  Series curve{"training", {"epoch", "objective"}, {}};
  for (std::size_t e = 0; e < trained.trace.epoch_objectives.size(); ++e) {
    curve.rows.push_back({static_cast<double>(e), trained.trace.epoch_objectives[e]});
  }
  r.series.push_back(std::move(curve));
  r.wall_clock_seconds = seconds_since(t0);
  return r;
}

ExperimentReport bench(const BenchParams& p) {
  require(!p.k_list.empty(), ErrorKind::invalid_argument, "bench: k list is empty");
  require(p.m >= 2, ErrorKind::invalid_argument, "bench: m must be >= 2");
  const auto t0 = clock::now();
  const ModalBatch data = data::gen_split_vector(p.dim, p.m, p.seed);
  const Eigen::Index half = p.dim / 2;

  ExperimentReport r;
  r.experiment = "bench";
  r.seed = p.seed;
  r.config = {{"m", p.m}, {"k_list", p.k_list}, {"ridge", p.ridge}, {"reps", p.repetitions},
              {"dim", p.dim}, {"seed", p.seed}};

  std::vector<double> ks;
  std::vector<double> soft_median;
  std::vector<double> base_median;
  std::vector<double> base_failed;
  std::vector<double> soft_failed;
  double first_failure = -1.0;
  Series steps{"steps",
               {"k", "soft_median_s", "soft_iqr_s", "baseline_median_s", "baseline_iqr_s",
                "baseline_failed"},
               {}};
  for (const Eigen::Index k : p.k_list) {
    TrainConfig cfg;
    cfg.batch_size = p.m;
    cfg.k = k;
    cfg.learning_rate = 1e-3;
    cfg.momentum = 0.0;
    cfg.ridge = p.ridge;
    cfg.seed = p.seed;
    cfg.architectures = {Architecture::linear(half, k), Architecture::linear(half, k)};
    const StepTiming t = time_step(cfg, data, p.repetitions);
    const bool failed = t.baseline.failure.has_value();
    if (failed && first_failure < 0.0) first_failure = static_cast<double>(k);
    ks.push_back(static_cast<double>(k));
    soft_median.push_back(t.soft.median_seconds);
    soft_failed.push_back(t.soft.failure ? 1.0 : 0.0);
    base_median.push_back(failed ? 0.0 : t.baseline.median_seconds);
    base_failed.push_back(failed ? 1.0 : 0.0);
    steps.rows.push_back({static_cast<double>(k), t.soft.median_seconds, t.soft.iqr_seconds,
                          failed ? std::nan("") : t.baseline.median_seconds,
                          failed ? std::nan("") : t.baseline.iqr_seconds, failed ? 1.0 : 0.0});
  }
  r.add("k", "count", ks);
  r.add("soft_median_step", "seconds", soft_median);
  r.add("soft_failed", "flag", soft_failed);
  r.add("baseline_median_step", "seconds", base_median);
  r.add("baseline_failed", "flag", base_failed);
  r.add("baseline_first_failure_k", "count", first_failure);
  r.series.push_back(std::move(steps));
  r.wall_clock_seconds = seconds_since(t0);
  return r;
}

double heldout_accuracy(const TrainResult& model, const ModalBatch& test) {
  require(model.head.has_value(), ErrorKind::invalid_argument, "model has no softmax head");
  require(test.has_labels(), ErrorKind::invalid_argument, "test batch has no labels");
  const Matrix f = forward(model.maps[0], test.inputs[0]).features;
  Matrix g;
  if (model.head->input == HeadInput::concatenated) g = forward(model.maps[1], test.inputs[1]).features;
  const Matrix q = softmax_posteriors(*model.head, f, g);
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    Eigen::Index best = 0;
    q.row(i).maxCoeff(&best);
    if (best == test.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(q.rows());
}

ExperimentReport semi(const SemiParams& p) {
  require(!p.lambdas.empty() && !p.label_fractions.empty() && !p.seeds.empty(),
          ErrorKind::invalid_argument, "semi: lambda, fraction and seed lists must be non-empty");
  require(p.test_fraction > 0.0 && p.test_fraction < 1.0, ErrorKind::invalid_argument,
          "semi: test fraction must lie in (0, 1)");
  const auto t0 = clock::now();

  ExperimentReport r;
  r.experiment = "semi";
  r.seed = p.seeds.front();
  r.config = {{"classes", p.classes}, {"dim", p.dim}, {"noise", p.noise},
              {"centroid_scale", p.centroid_scale}, {"n", p.n}, {"test_fraction", p.test_fraction},
              {"lambdas", p.lambdas}, {"label_fractions", p.label_fractions}, {"seeds", p.seeds},
              {"k", p.k}, {"hidden", p.hidden}, {"epochs", p.epochs},
              {"batch_size", p.batch_size}, {"learning_rate", p.learning_rate},
              {"momentum", p.momentum}};

  Series runs{"runs", {"label_fraction", "lambda", "seed", "accuracy"}, {}};
  const auto n_test = static_cast<Eigen::Index>(std::round(p.test_fraction * static_cast<double>(p.n)));
  const Eigen::Index n_train = p.n - n_test;
  std::vector<double> bayes;

  for (const double fraction : p.label_fractions) {
    std::vector<double> mean_acc(p.lambdas.size(), 0.0);
    for (const auto seed : p.seeds) {
      data::LatentClassParams gen;
      gen.classes = p.classes;
      gen.dims = {p.dim, p.dim};
      gen.noise = p.noise;
      gen.centroid_scale = p.centroid_scale;
      gen.n = p.n;
      gen.label_fraction = fraction;
      gen.seed = seed;
      const data::LatentClassData generated = data::gen_latent_class(gen);

      std::vector<Eigen::Index> train_rows(static_cast<std::size_t>(n_train));
      std::iota(train_rows.begin(), train_rows.end(), Eigen::Index{0});
      std::vector<Eigen::Index> test_rows(static_cast<std::size_t>(n_test));
      std::iota(test_rows.begin(), test_rows.end(), n_train);
      const ModalBatch train_set = generated.batch.select(train_rows);
      const ModalBatch test_set = generated.batch.select(test_rows);

      if (fraction == p.label_fractions.front()) {
        Eigen::Index hit = 0;
        for (Eigen::Index i = 0; i < test_set.size(); ++i) {
          hit += data::bayes_class(generated.centroids[0], test_set.inputs[0].row(i)) ==
                 test_set.labels[static_cast<std::size_t>(i)];
        }
        bayes.push_back(static_cast<double>(hit) / static_cast<double>(test_set.size()));
      }

      for (std::size_t li = 0; li < p.lambdas.size(); ++li) {
        TrainConfig cfg;
        cfg.objective = ObjectiveKind::semi_supervised;
        cfg.lambda = p.lambdas[li];
        cfg.head_input = HeadInput::first_only;
        cfg.k = p.k;
        cfg.batch_size = p.batch_size;
        cfg.learning_rate = p.learning_rate;
        cfg.momentum = p.momentum;
        cfg.epochs = p.epochs;
        cfg.seed = seed;
        cfg.evaluate_full_data = false;
        cfg.architectures = {Architecture::mlp({p.dim, p.hidden, p.k}),
                             Architecture::mlp({p.dim, p.hidden, p.k})};
        const TrainResult trained = train(cfg, train_set);
        const double acc = trained.trace.failures.empty() ? heldout_accuracy(trained, test_set) : 0.0;
        mean_acc[li] += acc / static_cast<double>(p.seeds.size());
        runs.rows.push_back({fraction, p.lambdas[li], static_cast<double>(seed), acc});
      }
    }
    const std::string tag = fraction_tag(fraction);
    r.add("accuracy_mean@" + tag, "fraction", mean_acc);
    std::size_t best = 0;
    double best_positive = -1.0;
    for (std::size_t li = 0; li < p.lambdas.size(); ++li) {
      if (p.lambdas[li] > 0.0 && mean_acc[li] > best_positive) {
        best_positive = mean_acc[li];
        best = li;
      }
    }
    if (best_positive >= 0.0) {
      r.add("best_lambda@" + tag, "lambda", p.lambdas[best]);
      r.add("best_accuracy@" + tag, "fraction", best_positive);
    }
    for (std::size_t li = 0; li < p.lambdas.size(); ++li) {
      if (p.lambdas[li] == 0.0) r.add("supervised_accuracy@" + tag, "fraction", mean_acc[li]);
    }
  }
  r.add("lambda", "lambda", p.lambdas);
  r.add("bayes_accuracy", "fraction", sum(bayes) / static_cast<double>(bayes.size()));
  r.series.push_back(std::move(runs));
  r.wall_clock_seconds = seconds_since(t0);
  return r;
}

TrainRun train_from_config(const nlohmann::json& config, const std::filesystem::path& base_dir,
                           const std::optional<std::filesystem::path>& out_dir) {
  const auto t0 = clock::now();
  std::vector<std::string> problems;
  std::optional<TrainConfig> cfg;
  std::optional<data::DatasetSpec> spec;
  try {
    cfg = TrainConfig::from_json(config);
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  if (!config.is_object() || !config.contains("data")) {
    problems.push_back("missing required field \"data\"");
  } else {
    try {
      spec = data::DatasetSpec::from_json(config["data"], base_dir);
    } catch (const Error& e) {
      problems.push_back(std::string("data: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
      problems.push_back(std::string("data: ") + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "\n") + p;
    fail(ErrorKind::schema, msg);
  }

  const data::LoadedDataset loaded = data::load_dataset(*spec);
  TrainRun run;
  run.result = train(*cfg, loaded.batch);

  ExperimentReport& r = run.report;
  r.experiment = "train";
  r.seed = cfg->seed;
  r.config = config;
  const TrainTrace& trace = run.result.trace;
  r.add("epoch_objective", "objective", trace.epoch_objectives);
  r.add("steps_per_epoch", "count", static_cast<double>(trace.steps_per_epoch));
  r.add("failure_count", "count", static_cast<double>(trace.failures.size()));
  if (trace.final_objective) r.add("final_objective", "objective", *trace.final_objective);

  if (trace.failures.empty()) {
    ModelState state{run.result.maps, run.result.head};
    const ObjectiveReport full = evaluate_objective(*cfg, state, loaded.batch);
    for (const auto& pair : full.pairs) {
      const std::string tag = std::to_string(pair.first) + "_" + std::to_string(pair.second);
      r.add("pair_value@" + tag, "objective", pair.value);
      r.add("pair_count@" + tag, "count", static_cast<double>(pair.co_present));
    }
  }

  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    {
      std::ofstream out(*out_dir / "trace.jsonl");
      require(static_cast<bool>(out), ErrorKind::io, "cannot write trace to " + out_dir->string());
      out << trace.to_jsonl();
    }
    {
      std::ofstream out(*out_dir / "checkpoint.json");
      require(static_cast<bool>(out), ErrorKind::io, "cannot write checkpoint to " + out_dir->string());
      out << run.result.checkpoint(cfg->seed).dump(2) << '\n';
    }
    run.result.trace.checkpoint = (*out_dir / "checkpoint.json").string();
  }
  r.wall_clock_seconds = seconds_since(t0);
  return run;
}

}  // namespace softhgr::experiments

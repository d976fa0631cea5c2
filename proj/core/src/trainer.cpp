#include "softhgr/trainer.hpp"

#include "softhgr/random.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <sstream>

namespace softhgr {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string_view objective_name(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::soft_hgr: return "soft_hgr";
    case ObjectiveKind::multimodal: return "multimodal";
    case ObjectiveKind::semi_supervised: return "semi";
    case ObjectiveKind::whitened: return "whitened_baseline";
  }
  return "soft_hgr";
}

std::optional<ObjectiveKind> parse_objective(const std::string& s) {
  if (s == "soft_hgr") return ObjectiveKind::soft_hgr;
  if (s == "multimodal") return ObjectiveKind::multimodal;
  if (s == "semi") return ObjectiveKind::semi_supervised;
  if (s == "whitened_baseline") return ObjectiveKind::whitened;
  return std::nullopt;
}

// Parameter vector and velocity for every trainable block.
struct Optimizer {
  std::vector<Vector> velocity;

  void step(ModelState& state, const ObjectiveReport& report, double sign, double lr,
            double momentum) {
    std::vector<Vector> grads;
    for (const auto& g : report.map_gradients) grads.push_back(g.flatten());
    if (state.head && report.head_gradient) {
      grads.emplace_back(Eigen::Map<const Vector>(report.head_gradient->data(),
                                                  report.head_gradient->size()));
    }
    if (velocity.empty()) {
      for (const auto& g : grads) velocity.push_back(Vector::Zero(g.size()));
    }
    for (std::size_t b = 0; b < grads.size(); ++b) {
      velocity[b] = momentum * velocity[b] + sign * grads[b];
    }
    for (std::size_t j = 0; j < state.maps.size(); ++j) {
      Vector p = state.maps[j].parameters();
      p += lr * velocity[j];
      state.maps[j].set_parameters(p);
    }
    if (state.head && report.head_gradient) {
      Eigen::Map<Vector> theta(state.head->theta.data(), state.head->theta.size());
      theta += lr * velocity.back();
    }
  }
};

TimingStats summarize(std::vector<double> seconds) {
  TimingStats s;
  s.samples = seconds.size();
  if (seconds.empty()) return s;
  std::sort(seconds.begin(), seconds.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(seconds.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, seconds.size() - 1);
    return seconds[lo] + (pos - static_cast<double>(lo)) * (seconds[hi] - seconds[lo]);
  };
  s.median_seconds = quantile(0.5);
  s.min_seconds = seconds.front();
  s.max_seconds = seconds.back();
  s.iqr_seconds = quantile(0.75) - quantile(0.25);
  return s;
}

}  // namespace

void TrainConfig::validate(const ModalBatch& data) const {
  require(batch_size >= 2, ErrorKind::invalid_argument, "batch_size must be >= 2");
  require(learning_rate >= 0.0, ErrorKind::invalid_argument, "learning_rate must be >= 0");
  require(momentum >= 0.0 && momentum < 1.0, ErrorKind::invalid_argument,
          "momentum must lie in [0, 1)");
  require(epochs >= 1, ErrorKind::invalid_argument, "epochs must be >= 1");
  require(k >= 1, ErrorKind::invalid_argument, "k must be >= 1");
  require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::invalid_argument, "lambda must lie in [0, 1]");
  data.validate();
  require(data.size() >= batch_size, ErrorKind::invalid_argument,
          "data holds " + std::to_string(data.size()) + " samples, fewer than one batch of " +
              std::to_string(batch_size));
  require(architectures.size() == data.modality_count(), ErrorKind::invalid_argument,
          "one architecture per modality required");
  for (std::size_t j = 0; j < architectures.size(); ++j) {
    architectures[j].validate();
    require(architectures[j].input_width() == data.inputs[j].cols(), ErrorKind::invalid_argument,
            "architecture " + std::to_string(j) + " input width does not match the data");
    require(architectures[j].output_width() == k, ErrorKind::invalid_argument,
            "architecture " + std::to_string(j) + " output width must equal k");
  }
  if (objective != ObjectiveKind::multimodal) {
    require(data.modality_count() == 2, ErrorKind::invalid_argument,
            "this objective needs exactly two modalities");
  }
  if (objective == ObjectiveKind::semi_supervised && lambda < 1.0) {
    require(data.labeled_count() > 0, ErrorKind::no_supervision,
            "semi-supervised training with lambda < 1 needs labeled samples");
  }
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json archs = nlohmann::json::array();
  for (const auto& a : architectures) archs.push_back(a.to_json());
  return {{"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"momentum", momentum},
          {"epochs", epochs},
          {"seed", seed},
          {"objective", objective_name(objective)},
          {"lambda", lambda},
          {"k", k},
          {"architectures", archs},
          {"shuffle", shuffle},
          {"head_input", head_input == HeadInput::first_only ? "first_only" : "concatenated"},
          {"ridge", ridge},
          {"evaluate_full_data", evaluate_full_data}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  std::vector<std::string> problems;
  TrainConfig c;
  if (!j.is_object()) fail(ErrorKind::schema, "train config must be a JSON object");

  auto required = [&](const char* key) {
    if (!j.contains(key)) {
      problems.push_back(std::string("missing required field \"") + key + "\"");
      return false;
    }
    return true;
  };
  auto integer = [&](const char* key, auto& out, long long min) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer() || j[key].get<long long>() < min) {
      problems.push_back(std::string("field \"") + key + "\" must be an integer >= " + std::to_string(min));
      return;
    }
    out = static_cast<std::remove_reference_t<decltype(out)>>(j[key].get<long long>());
  };
  auto number = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) {
      problems.push_back(std::string("field \"") + key + "\" must be a number");
      return;
    }
    out = j[key].get<double>();
  };

  required("batch_size");
  required("learning_rate");
  required("epochs");
  required("k");
  required("architectures");
  integer("batch_size", c.batch_size, 2);
  number("learning_rate", c.learning_rate);
  if (j.contains("learning_rate") && !(c.learning_rate > 0.0)) {
    problems.push_back("field \"learning_rate\" must be > 0");
  }
  number("momentum", c.momentum);
  if (c.momentum < 0.0 || c.momentum >= 1.0) problems.push_back("field \"momentum\" must lie in [0, 1)");
  integer("epochs", c.epochs, 1);
  if (j.contains("seed")) {
    if (j["seed"].is_number_unsigned()) c.seed = j["seed"].get<std::uint64_t>();
    else problems.push_back("field \"seed\" must be a nonnegative integer");
  }
  integer("k", c.k, 1);
  number("lambda", c.lambda);
  if (c.lambda < 0.0 || c.lambda > 1.0) problems.push_back("field \"lambda\" must lie in [0, 1]");
  number("ridge", c.ridge);
  if (c.ridge < 0.0) problems.push_back("field \"ridge\" must be >= 0");
  if (j.contains("objective")) {
    const auto parsed = j["objective"].is_string() ? parse_objective(j["objective"].get<std::string>())
                                                   : std::nullopt;
    if (parsed) c.objective = *parsed;
    else problems.push_back("field \"objective\" must be one of soft_hgr, multimodal, semi, whitened_baseline");
  }
  if (j.contains("shuffle")) {
    if (j["shuffle"].is_boolean()) c.shuffle = j["shuffle"].get<bool>();
    else problems.push_back("field \"shuffle\" must be a boolean");
  }
  if (j.contains("evaluate_full_data")) {
    if (j["evaluate_full_data"].is_boolean()) c.evaluate_full_data = j["evaluate_full_data"].get<bool>();
    else problems.push_back("field \"evaluate_full_data\" must be a boolean");
  }
  if (j.contains("head_input")) {
    const auto s = j["head_input"].is_string() ? j["head_input"].get<std::string>() : std::string{};
    if (s == "first_only") c.head_input = HeadInput::first_only;
    else if (s == "concatenated") c.head_input = HeadInput::concatenated;
    else problems.push_back("field \"head_input\" must be \"concatenated\" or \"first_only\"");
  }
  if (j.contains("architectures")) {
    if (!j["architectures"].is_array() || j["architectures"].empty()) {
      problems.push_back("field \"architectures\" must be a non-empty array");
    } else {
      for (std::size_t i = 0; i < j["architectures"].size(); ++i) {
        try {
          c.architectures.push_back(Architecture::from_json(j["architectures"][i]));
        } catch (const Error& e) {
          problems.push_back("architectures[" + std::to_string(i) + "]: " + e.what());
        }
      }
    }
  }

  if (!problems.empty()) {
    std::string msg = "train config has " + std::to_string(problems.size()) + " problem(s):";
    for (const auto& p : problems) msg += "\n  - " + p;
    fail(ErrorKind::schema, msg);
  }
  return c;
}

std::string TrainTrace::to_jsonl() const {
  std::ostringstream out;
  for (std::size_t e = 0; e < epoch_objectives.size(); ++e) {
    const std::size_t begin = e * static_cast<std::size_t>(steps_per_epoch);
    const std::size_t end = std::min(begin + static_cast<std::size_t>(steps_per_epoch), step_seconds.size());
    double total = 0.0;
    for (std::size_t s = begin; s < end; ++s) total += step_seconds[s];
    const double mean = end > begin ? total / static_cast<double>(end - begin) : 0.0;
    nlohmann::json fails = nlohmann::json::array();
    for (const auto& f : failures) {
      if (f.epoch != static_cast<int>(e)) continue;
      fails.push_back({{"step", f.step}, {"kind", to_string(f.kind)}, {"message", f.message}});
    }
    nlohmann::json rec{{"epoch", e},
                       {"objective", epoch_objectives[e]},
                       {"mean_step_seconds", mean},
                       {"failures", fails}};
    out << rec.dump() << '\n';
  }
  return out.str();
}

nlohmann::json TrainResult::checkpoint(std::uint64_t seed) const {
  nlohmann::json j = checkpoint_json(maps, seed);
  if (head) j["head"] = head->to_json();
  return j;
}

ModelState init_state(const TrainConfig& config, const ModalBatch& data) {
  ModelState s;
  for (std::size_t j = 0; j < config.architectures.size(); ++j) {
    s.maps.push_back(init(config.architectures[j], mix_seed(config.seed, j + 1)));
  }
  if (config.objective == ObjectiveKind::semi_supervised) {
    const Eigen::Index width =
        config.head_input == HeadInput::first_only ? config.k : 2 * config.k;
    s.head = SoftmaxHead::random(width, std::max(data.class_count, 2), config.head_input,
                                 mix_seed(config.seed, 0x4ead));
  }
  return s;
}

ObjectiveReport evaluate_objective(const TrainConfig& config, const ModelState& state,
                                   const ModalBatch& batch) {
  switch (config.objective) {
    case ObjectiveKind::multimodal:
      return multimodal_soft_hgr(batch, state.maps);
    case ObjectiveKind::semi_supervised:
      return semi_supervised_loss(batch, state.maps[0], state.maps[1], *state.head, config.lambda);
    case ObjectiveKind::soft_hgr:
    case ObjectiveKind::whitened: {
      const ForwardTrace tf = forward_trace(state.maps[0], batch.inputs[0]);
      const ForwardTrace tg = forward_trace(state.maps[1], batch.inputs[1]);
      const FeatureBatch fb{tf.output, false};
      const FeatureBatch gb{tg.output, false};
      ObjectiveReport r = config.objective == ObjectiveKind::soft_hgr
                              ? soft_hgr(fb, gb)
                              : whitened_correlation(fb, gb, config.ridge);
      r.map_gradients.push_back(backward(state.maps[0], tf, r.feature_gradients[0]));
      r.map_gradients.push_back(backward(state.maps[1], tg, r.feature_gradients[1]));
      return r;
    }
  }
  fail(ErrorKind::invalid_argument, "unknown objective");
}

double reported_objective(const ObjectiveReport& report) {
  return report.kind == ObjectiveKind::semi_supervised ? -report.value : report.value;
}

TrainResult train(const TrainConfig& config, const ModalBatch& data) {
  config.validate(data);
  using clock = std::chrono::steady_clock;

  TrainResult result;
  ModelState state = init_state(config, data);
  Optimizer optimizer;
  const double sign = config.objective == ObjectiveKind::semi_supervised ? -1.0 : 1.0;

  const Eigen::Index n = data.size();
  const Eigen::Index steps = n / config.batch_size;
  TrainTrace& trace = result.trace;
  trace.steps_per_epoch = steps;

  Rng shuffle_rng(mix_seed(config.seed, 0x5eed));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  Eigen::Index global_step = 0;
  bool halted = false;
  for (int epoch = 0; epoch < config.epochs && !halted; ++epoch) {
    if (config.shuffle) {
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[shuffle_rng.below(i)]);
      }
    }
    double sum = 0.0;
    Eigen::Index done = 0;
    for (Eigen::Index s = 0; s < steps; ++s, ++global_step) {
      // A full batch is order-independent, so it is used in place.
      const bool full_batch = config.batch_size == n;
      ModalBatch selected;
      if (!full_batch) {
        const auto first = order.begin() + s * config.batch_size;
        selected = data.select(std::vector<Eigen::Index>(first, first + config.batch_size));
      }
      const ModalBatch& batch = full_batch ? data : selected;
      const auto t0 = clock::now();
      try {
        const ObjectiveReport report = evaluate_objective(config, state, batch);
        optimizer.step(state, report, sign, config.learning_rate, config.momentum);
        sum += reported_objective(report);
        trace.step_objectives.push_back(reported_objective(report));
        ++done;
      } catch (const Error& e) {
        trace.failures.push_back(FailureRecord{global_step, epoch, e.kind(), e.what()});
        halted = true;
      }
      trace.step_seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
      if (halted) break;
    }
    if (done > 0 || !halted) {
      trace.epoch_objectives.push_back(done > 0 ? sum / static_cast<double>(done) : 0.0);
    }
  }

  if (config.evaluate_full_data && !halted) {
    try {
      trace.final_objective = reported_objective(evaluate_objective(config, state, data));
    } catch (const Error& e) {
      trace.failures.push_back(FailureRecord{global_step, config.epochs, e.kind(), e.what()});
    }
  }
  result.maps = std::move(state.maps);
  result.head = std::move(state.head);
  return result;
}

StepTiming time_step(const TrainConfig& config, const ModalBatch& data, int repetitions) {
  require(repetitions >= 1, ErrorKind::invalid_argument, "repetitions must be >= 1");
  TrainConfig soft_cfg = config;
  soft_cfg.objective = ObjectiveKind::soft_hgr;
  soft_cfg.validate(data);
  TrainConfig base_cfg = soft_cfg;
  base_cfg.objective = ObjectiveKind::whitened;

  std::vector<Eigen::Index> rows(static_cast<std::size_t>(config.batch_size));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  const ModalBatch batch = data.select(rows);

  auto measure = [&](const TrainConfig& cfg) {
    using clock = std::chrono::steady_clock;
    ModelState state = init_state(cfg, data);
    Optimizer optimizer;
    std::vector<double> seconds;
    TimingStats stats;
    for (int r = 0; r <= repetitions; ++r) {
      const auto t0 = clock::now();
      try {
        const ObjectiveReport report = evaluate_objective(cfg, state, batch);
        optimizer.step(state, report, 1.0, cfg.learning_rate, cfg.momentum);
      } catch (const Error& e) {
        stats.failure = FailureRecord{r, 0, e.kind(), e.what()};
        break;
      }
      const double dt = std::chrono::duration<double>(clock::now() - t0).count();
      if (r > 0) seconds.push_back(dt);
    }
    auto failure = stats.failure;
    stats = summarize(std::move(seconds));
    stats.failure = failure;
    return stats;
  };

  return StepTiming{measure(soft_cfg), measure(base_cfg)};
}

}  // namespace softhgr

#pragma once

// Finite-difference checks of the objective gradients with respect to every
// map (and head) parameter. Shared by the unit tests and the acceptance run.

#include <softhgr/data.hpp>
#include <softhgr/model.hpp>
#include <softhgr/objective.hpp>

#include "oracles.hpp"

#include <string>
#include <vector>

namespace gradcheck {

using namespace softhgr;

inline constexpr double kStep = 1e-5;

/// Shifts `x` until no pre-activation of `map` lies within `margin` of 0.
inline Matrix away_from_kinks(const FeatureMap& map, Matrix x, double margin = 1e-3) {
  for (int round = 0; round < 200; ++round) {
    const auto t = forward_trace(map, x);
    bool ok = true;
    for (std::size_t l = 0; l < t.pre_activations.size(); ++l)
      if (map.layers[l].activation == Activation::relu && (t.pre_activations[l].array().abs() < margin).any())
        ok = false;
    if (ok) return x;
    x.array() += 0.0137;
  }
  return x;
}

inline FeatureMap seeded_map(const std::vector<Eigen::Index>& widths, std::uint64_t seed) {
  auto map = init(Architecture::mlp(widths), seed);
  for (std::size_t l = 0; l < map.layers.size(); ++l)
    map.layers[l].bias = oracle::random_matrix(1, map.layers[l].bias.size(), unsigned(seed * 31 + l), 0.2);
  return map;
}

/// Concatenated parameters of several maps plus an optional trailing head.
struct Packed {
  std::vector<FeatureMap>* maps;
  SoftmaxHead* head;

  Vector get() const {
    std::vector<Vector> parts;
    Eigen::Index total = 0;
    for (const auto& m : *maps) {
      parts.push_back(m.parameters());
      total += parts.back().size();
    }
    if (head) {
      parts.push_back(Eigen::Map<const Vector>(head->theta.data(), head->theta.size()));
      total += head->theta.size();
    }
    Vector out(total);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
      out.segment(at, p.size()) = p;
      at += p.size();
    }
    return out;
  }
  void set(const Vector& flat) {
    Eigen::Index at = 0;
    for (auto& m : *maps) {
      const Eigen::Index n = m.parameter_count();
      m.set_parameters(flat.segment(at, n));
      at += n;
    }
    if (head) Eigen::Map<Vector>(head->theta.data(), head->theta.size()) = flat.segment(at, head->theta.size());
  }
};

inline Vector analytic(const ObjectiveReport& r, const SoftmaxHead* head) {
  std::vector<Vector> parts;
  Eigen::Index total = 0;
  for (const auto& g : r.map_gradients) {
    parts.push_back(g.flatten());
    total += parts.back().size();
  }
  if (head) {
    parts.push_back(Eigen::Map<const Vector>(r.head_gradient->data(), r.head_gradient->size()));
    total += parts.back().size();
  }
  Vector out(total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

/// One (architecture, batch) case: returns max relative error.
struct Case {
  std::string name;
  std::vector<std::vector<Eigen::Index>> widths;  // one per modality
  Eigen::Index m = 10;
  std::uint64_t seed = 0;
};

inline std::vector<Matrix> seeded_inputs(const Case& c, std::vector<FeatureMap>& maps) {
  std::vector<Matrix> xs;
  for (std::size_t j = 0; j < c.widths.size(); ++j) {
    maps.push_back(seeded_map(c.widths[j], c.seed * 10 + j));
    xs.push_back(away_from_kinks(maps.back(), oracle::random_matrix(c.m, c.widths[j].front(),
                                                                   unsigned(c.seed * 100 + j))));
  }
  return xs;
}

inline double soft_hgr_error(const Case& c) {
  std::vector<FeatureMap> maps;
  const auto xs = seeded_inputs(c, maps);
  auto eval = [&](bool grads) {
    ObjectiveReport r = soft_hgr(forward(maps[0], xs[0]), forward(maps[1], xs[1]));
    if (grads) {
      r.map_gradients.push_back(backward(maps[0], xs[0], r.feature_gradients[0]));
      r.map_gradients.push_back(backward(maps[1], xs[1], r.feature_gradients[1]));
    }
    return r;
  };
  const Vector a = analytic(eval(true), nullptr);
  Packed p{&maps, nullptr};
  const Vector theta = p.get();
  const Vector n = oracle::central_gradient([&](const Vector& v) { p.set(v); return eval(false).value; }, theta, kStep);
  p.set(theta);
  return oracle::max_relative_error(a, n);
}

inline double multimodal_error(const Case& c, double missing) {
  std::vector<FeatureMap> maps;
  ModalBatch batch = ModalBatch::complete(seeded_inputs(c, maps));
  if (missing > 0.0) {
    batch.presence =
        data::disjoint_missing_mask(c.m, std::vector<double>(c.widths.size(), missing), c.seed + 7);
  }
  const Vector a = analytic(multimodal_soft_hgr(batch, maps), nullptr);
  Packed p{&maps, nullptr};
  const Vector theta = p.get();
  const Vector n = oracle::central_gradient(
      [&](const Vector& v) { p.set(v); return multimodal_soft_hgr(batch, maps).value; }, theta, kStep);
  p.set(theta);
  return oracle::max_relative_error(a, n);
}

inline double semi_error(const Case& c, double lambda, HeadInput input, double labeled_fraction = 0.5,
                         int classes = 4) {
  std::vector<FeatureMap> maps;
  ModalBatch batch = ModalBatch::complete(seeded_inputs(c, maps));
  batch.class_count = classes;
  batch.labels.resize(c.m);
  batch.labeled = RowMask::Zero(c.m);
  std::mt19937 gen(unsigned(c.seed + 3));
  for (Eigen::Index i = 0; i < c.m; ++i) {
    batch.labels[i] = int(gen() % classes);
    batch.labeled(i) = (i < Eigen::Index(labeled_fraction * c.m + 0.5));
  }
  const Eigen::Index kf = c.widths[0].back(), kg = c.widths[1].back();
  const Eigen::Index width = input == HeadInput::concatenated ? kf + kg : kf;
  SoftmaxHead head = SoftmaxHead::random(width, classes, input, c.seed + 11);
  auto eval = [&] { return semi_supervised_loss(batch, maps[0], maps[1], head, lambda); };
  const Vector a = analytic(eval(), &head);
  Packed p{&maps, &head};
  const Vector theta = p.get();
  const Vector n = oracle::central_gradient([&](const Vector& v) { p.set(v); return eval().value; }, theta, kStep);
  p.set(theta);
  return oracle::max_relative_error(a, n);
}

inline double whitened_error(const Case& c, double ridge = kDefaultWhiteningRidge) {
  std::vector<FeatureMap> maps;
  const auto xs = seeded_inputs(c, maps);
  auto eval = [&](bool grads) {
    ObjectiveReport r = whitened_correlation(forward(maps[0], xs[0]), forward(maps[1], xs[1]), ridge);
    if (grads) {
      r.map_gradients.push_back(backward(maps[0], xs[0], r.feature_gradients[0]));
      r.map_gradients.push_back(backward(maps[1], xs[1], r.feature_gradients[1]));
    }
    return r;
  };
  const Vector a = analytic(eval(true), nullptr);
  Packed p{&maps, nullptr};
  const Vector theta = p.get();
  const Vector n = oracle::central_gradient([&](const Vector& v) { p.set(v); return eval(false).value; }, theta, kStep);
  p.set(theta);
  return oracle::max_relative_error(a, n);
}

/// The seeded (architecture, batch) matrix: 12 bimodal and 12 trimodal cases.
inline std::vector<Case> bimodal_matrix() {
  const std::vector<std::vector<std::vector<Eigen::Index>>> archs{
      {{3, 2}, {4, 2}},
      {{3, 5, 3}, {2, 4, 3}},
      {{4, 6, 4, 2}, {3, 2}},
      {{5, 8, 3}, {5, 8, 3}},
  };
  std::vector<Case> out;
  for (std::size_t a = 0; a < archs.size(); ++a)
    for (Eigen::Index m : {12, 20, 33})
      out.push_back({"arch" + std::to_string(a) + "_m" + std::to_string(m), archs[a], m, 1000 + a * 10 + std::uint64_t(m)});
  return out;
}

inline std::vector<Case> trimodal_matrix() {
  const std::vector<std::vector<std::vector<Eigen::Index>>> archs{
      {{3, 2}, {4, 2}, {2, 2}},
      {{3, 5, 3}, {2, 4, 3}, {4, 3}},
      {{4, 6, 2}, {3, 2}, {5, 4, 2}},
      {{2, 3, 3, 2}, {2, 2}, {3, 2}},
  };
  std::vector<Case> out;
  for (std::size_t a = 0; a < archs.size(); ++a)
    for (Eigen::Index m : {20, 30, 41})
      out.push_back({"tri" + std::to_string(a) + "_m" + std::to_string(m), archs[a], m, 2000 + a * 10 + std::uint64_t(m)});
  return out;
}

}  // namespace gradcheck

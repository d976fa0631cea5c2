#include "softhgr/model.hpp"

#include "softhgr/error.hpp"
#include "softhgr/random.hpp"

#include <cmath>
#include <string>

namespace softhgr {

namespace {

std::string_view activation_name(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  fail(ErrorKind::schema, "unknown activation \"" + s + "\"");
}

std::vector<double> row_major(const Matrix& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

Matrix from_row_major(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                      const char* what) {
  require(j.is_array() && static_cast<Eigen::Index>(j.size()) == rows * cols, ErrorKind::schema,
          std::string(what) + ": expected " + std::to_string(rows * cols) + " numbers");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = j[static_cast<std::size_t>(r * cols + c)].get<double>();
  return m;
}

Matrix apply(Activation a, const Matrix& z) {
  if (a == Activation::relu) return z.cwiseMax(0.0);
  return z;
}

}  // namespace

Architecture Architecture::mlp(std::vector<Eigen::Index> widths) {
  Architecture a;
  a.widths = std::move(widths);
  if (a.widths.size() >= 2) {
    a.activations.assign(a.widths.size() - 1, Activation::relu);
    a.activations.back() = Activation::identity;
  }
  return a;
}

void Architecture::validate() const {
  require(widths.size() >= 2, ErrorKind::invalid_argument,
          "architecture needs at least an input and an output width");
  for (const auto w : widths) require(w >= 1, ErrorKind::invalid_argument, "widths must be >= 1");
  require(activations.size() == widths.size() - 1, ErrorKind::invalid_argument,
          "one activation per layer required");
}

nlohmann::json Architecture::to_json() const {
  nlohmann::json acts = nlohmann::json::array();
  for (const auto a : activations) acts.push_back(activation_name(a));
  return {{"widths", widths}, {"activations", acts}};
}

Architecture Architecture::from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("widths") && j["widths"].is_array(), ErrorKind::schema,
          "architecture requires a \"widths\" array");
  std::vector<Eigen::Index> widths;
  for (const auto& w : j["widths"]) {
    require(w.is_number_integer(), ErrorKind::schema, "architecture widths must be integers");
    widths.push_back(w.get<Eigen::Index>());
  }
  Architecture a = mlp(widths);
  if (j.contains("activations")) {
    a.activations.clear();
    for (const auto& s : j["activations"]) a.activations.push_back(parse_activation(s.get<std::string>()));
  }
  a.validate();
  return a;
}

Eigen::Index FeatureMap::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

Vector FeatureMap::parameters() const {
  Vector flat(parameter_count());
  Eigen::Index at = 0;
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat(at++) = l.weight(r, c);
    for (Eigen::Index c = 0; c < l.bias.size(); ++c) flat(at++) = l.bias(c);
  }
  return flat;
}

void FeatureMap::set_parameters(const Vector& flat) {
  require(flat.size() == parameter_count(), ErrorKind::invalid_argument,
          "set_parameters: size mismatch");
  Eigen::Index at = 0;
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat(at++);
    for (Eigen::Index c = 0; c < l.bias.size(); ++c) l.bias(c) = flat(at++);
  }
}

MapGradients MapGradients::zeros_like(const FeatureMap& map) {
  MapGradients g;
  for (const auto& l : map.layers) {
    g.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(RowVector::Zero(l.bias.size()));
  }
  return g;
}

Vector MapGradients::flatten() const {
  Eigen::Index n = 0;
  for (std::size_t i = 0; i < weight.size(); ++i) n += weight[i].size() + bias[i].size();
  Vector flat(n);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    for (Eigen::Index r = 0; r < weight[i].rows(); ++r)
      for (Eigen::Index c = 0; c < weight[i].cols(); ++c) flat(at++) = weight[i](r, c);
    for (Eigen::Index c = 0; c < bias[i].size(); ++c) flat(at++) = bias[i](c);
  }
  return flat;
}

MapGradients& MapGradients::operator+=(const MapGradients& other) {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
  return *this;
}

MapGradients& MapGradients::operator*=(double scale) {
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] *= scale;
    bias[i] *= scale;
  }
  return *this;
}

FeatureMap init(const Architecture& architecture, std::uint64_t seed) {
  architecture.validate();
  FeatureMap map;
  map.architecture = architecture;
  map.seed = seed;
  Rng rng(seed);
  for (std::size_t i = 0; i < architecture.layer_count(); ++i) {
    const Eigen::Index fan_in = architecture.widths[i];
    const Eigen::Index fan_out = architecture.widths[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Layer layer;
    layer.weight.resize(fan_in, fan_out);
    for (Eigen::Index r = 0; r < fan_in; ++r)
      for (Eigen::Index c = 0; c < fan_out; ++c) layer.weight(r, c) = rng.uniform(-limit, limit);
    layer.bias = RowVector::Zero(fan_out);
    layer.activation = architecture.activations[i];
    map.layers.push_back(std::move(layer));
  }
  return map;
}

ForwardTrace forward_trace(const FeatureMap& map, const Matrix& inputs) {
  require(inputs.cols() == map.input_width(), ErrorKind::invalid_argument,
          "forward: input width " + std::to_string(inputs.cols()) + " != " +
              std::to_string(map.input_width()));
  require(inputs.allFinite(), ErrorKind::invalid_input, "forward: non-finite input");
  ForwardTrace t;
  t.layer_inputs.reserve(map.layers.size());
  t.pre_activations.reserve(map.layers.size());
  Matrix current = inputs;
  for (const auto& layer : map.layers) {
    Matrix z = current * layer.weight;
    z.rowwise() += layer.bias;
    t.layer_inputs.push_back(std::move(current));
    current = apply(layer.activation, z);
    t.pre_activations.push_back(std::move(z));
  }
  t.output = std::move(current);
  return t;
}

FeatureBatch forward(const FeatureMap& map, const Matrix& inputs) {
  return FeatureBatch{forward_trace(map, inputs).output, false};
}

MapGradients backward(const FeatureMap& map, const ForwardTrace& trace,
                      const Matrix& output_gradients) {
  require(output_gradients.rows() == trace.output.rows() &&
              output_gradients.cols() == trace.output.cols(),
          ErrorKind::invalid_argument, "backward: output gradient shape mismatch");
  require(trace.layer_inputs.size() == map.layers.size(), ErrorKind::invalid_argument,
          "backward: trace does not match map");
  MapGradients g = MapGradients::zeros_like(map);
  Matrix delta = output_gradients;
  for (std::size_t i = map.layers.size(); i-- > 0;) {
    const Layer& layer = map.layers[i];
    if (layer.activation == Activation::relu) {
      delta = (trace.pre_activations[i].array() > 0.0).select(delta, 0.0);
    }
    g.weight[i].noalias() = trace.layer_inputs[i].transpose() * delta;
    g.bias[i] = delta.colwise().sum();
    if (i > 0) delta = delta * layer.weight.transpose();
  }
  return g;
}

MapGradients backward(const FeatureMap& map, const Matrix& inputs, const Matrix& output_gradients) {
  return backward(map, forward_trace(map, inputs), output_gradients);
}

FeatureBatch center(const FeatureBatch& batch) {
  require(batch.size() >= 2, ErrorKind::invalid_argument, "center: batch needs m >= 2");
  FeatureBatch out;
  out.features = batch.features.rowwise() - batch.features.colwise().mean();
  out.centered = true;
  return out;
}

CovarianceEstimate batch_covariance(const FeatureBatch& batch) {
  require(batch.centered, ErrorKind::contract_violation,
          "batch_covariance: batch must be centered first");
  require(batch.size() >= 2, ErrorKind::invalid_argument, "batch_covariance: m >= 2 required");
  return CovarianceEstimate{linalg::centered_covariance(batch.features)};
}

nlohmann::json to_json(const FeatureMap& map) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : map.layers) {
    layers.push_back({{"weight", row_major(l.weight)},
                      {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return {{"architecture", map.architecture.to_json()}, {"seed", map.seed}, {"layers", layers}};
}

FeatureMap feature_map_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("architecture") && j.contains("layers"), ErrorKind::schema,
          "feature map JSON requires \"architecture\" and \"layers\"");
  FeatureMap map;
  map.architecture = Architecture::from_json(j["architecture"]);
  map.seed = j.value("seed", std::uint64_t{0});
  const auto& layers = j["layers"];
  require(layers.is_array() && layers.size() == map.architecture.layer_count(), ErrorKind::schema,
          "feature map JSON: layer count does not match architecture");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Eigen::Index in = map.architecture.widths[i];
    const Eigen::Index out = map.architecture.widths[i + 1];
    Layer layer;
    layer.weight = from_row_major(layers[i].at("weight"), in, out, "weight");
    layer.bias = from_row_major(layers[i].at("bias"), 1, out, "bias");
    layer.activation = map.architecture.activations[i];
    map.layers.push_back(std::move(layer));
  }
  return map;
}

nlohmann::json checkpoint_json(const std::vector<FeatureMap>& maps, std::uint64_t seed) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : maps) arr.push_back(to_json(m));
  return {{"format_version", kCheckpointFormatVersion}, {"seed", seed}, {"maps", arr}};
}

std::vector<FeatureMap> maps_from_checkpoint(const nlohmann::json& j) {
  require(j.is_object() && j.value("format_version", -1) == kCheckpointFormatVersion,
          ErrorKind::schema, "unsupported checkpoint format version");
  std::vector<FeatureMap> maps;
  for (const auto& m : j.at("maps")) maps.push_back(feature_map_from_json(m));
  return maps;
}

}  // namespace softhgr

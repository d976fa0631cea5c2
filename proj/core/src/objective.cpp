#include "softhgr/objective.hpp"

#include "softhgr/error.hpp"
#include "softhgr/random.hpp"

#include <cmath>
#include <string>

namespace softhgr {

namespace {

double trace_product(const Matrix& a, const Matrix& b) {
  // tr(a b) for symmetric a, b.
  return a.cwiseProduct(b.transpose()).sum();
}

// Removes the column mean of `grad`; this is the adjoint of mean subtraction.
void project_centering(Matrix& grad) { grad.rowwise() -= grad.colwise().mean(); }

void check_pair(const FeatureBatch& f, const FeatureBatch& g) {
  require(f.size() == g.size(), ErrorKind::invalid_argument, "feature batches differ in size");
  require(f.size() >= 2, ErrorKind::invalid_argument, "objective needs m >= 2");
  require(f.dim() >= 1 && g.dim() >= 1, ErrorKind::invalid_argument, "empty feature dimension");
  require(f.features.allFinite() && g.features.allFinite(), ErrorKind::invalid_input,
          "non-finite features");
}

Matrix rows_where(const Matrix& m, const RowMask& keep) {
  Matrix out(keep.count(), m.cols());
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    if (keep(i)) out.row(r++) = m.row(i);
  return out;
}

Matrix head_inputs(const SoftmaxHead& head, const Matrix& f, const Matrix& g) {
  if (head.input == HeadInput::first_only) return f;
  Matrix h(f.rows(), f.cols() + g.cols());
  h << f, g;
  return h;
}

}  // namespace

double ObjectiveReport::reconstruct() const {
  switch (kind) {
    case ObjectiveKind::soft_hgr:
    case ObjectiveKind::multimodal:
      return inner_term - 0.5 * trace_term;
    case ObjectiveKind::semi_supervised:
      return (lambda - 1.0) * supervised_term.value_or(0.0) - lambda * inner_term +
             0.5 * lambda * trace_term;
    case ObjectiveKind::whitened:
      return inner_term;
  }
  return inner_term;
}

ObjectiveReport soft_hgr(const FeatureBatch& f, const FeatureBatch& g) {
  check_pair(f, g);
  require(f.dim() == g.dim(), ErrorKind::invalid_argument, "feature dimensions differ");
  const double denom = static_cast<double>(f.size() - 1);

  const Matrix fc = center(f).features;
  const Matrix gc = center(g).features;
  const Matrix cov_f = linalg::centered_covariance(fc);
  const Matrix cov_g = linalg::centered_covariance(gc);

  ObjectiveReport r;
  r.kind = ObjectiveKind::soft_hgr;
  r.inner_term = fc.cwiseProduct(gc).sum() / denom;
  r.trace_term = trace_product(cov_f, cov_g);
  r.value = r.inner_term - 0.5 * r.trace_term;

  Matrix grad_f = (gc - fc * cov_g) / denom;
  Matrix grad_g = (fc - gc * cov_f) / denom;
  project_centering(grad_f);
  project_centering(grad_g);
  r.feature_gradients = {std::move(grad_f), std::move(grad_g)};

  PairTerm pair;
  pair.first = 0;
  pair.second = 1;
  pair.co_present = f.size();
  pair.inner = r.inner_term;
  pair.trace = r.trace_term;
  pair.value = r.value;
  r.pairs.push_back(pair);
  return r;
}

ObjectiveReport multimodal_soft_hgr(const std::vector<FeatureBatch>& features, const Mask& presence) {
  const std::size_t d = features.size();
  require(d >= 2, ErrorKind::invalid_argument, "multimodal objective needs d >= 2");
  const Eigen::Index m = features.front().size();
  const Eigen::Index k = features.front().dim();
  require(presence.rows() == m && presence.cols() == static_cast<Eigen::Index>(d),
          ErrorKind::invalid_argument, "presence mask shape mismatch");
  for (std::size_t j = 0; j < d; ++j) {
    require(features[j].size() == m && features[j].dim() == k, ErrorKind::invalid_argument,
            "all modalities need the same batch size and feature dimension");
  }

  // Per-modality centering and covariance over present rows.
  std::vector<Matrix> centered(d);
  std::vector<Matrix> cov(d);
  std::vector<Eigen::Index> present(d);
  for (std::size_t j = 0; j < d; ++j) {
    const RowMask mask = presence.col(static_cast<Eigen::Index>(j));
    present[j] = mask.count();
    require(present[j] >= 2, ErrorKind::insufficient_overlap,
            "modality " + std::to_string(j) + " has fewer than two present samples");
    const Matrix rows = rows_where(features[j].features, mask);
    require(rows.allFinite(), ErrorKind::invalid_input,
            "modality " + std::to_string(j) + " has non-finite features");
    const RowVector mean = rows.colwise().mean();
    Matrix c = Matrix::Zero(m, k);
    for (Eigen::Index i = 0; i < m; ++i)
      if (mask(i)) c.row(i) = features[j].features.row(i) - mean;
    cov[j] = linalg::centered_covariance(rows_where(c, mask));
    centered[j] = std::move(c);
  }

  ObjectiveReport r;
  r.kind = ObjectiveKind::multimodal;
  std::vector<Matrix> grads(d, Matrix::Zero(m, k));

  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      const RowMask both = presence.col(static_cast<Eigen::Index>(a)) &&
                           presence.col(static_cast<Eigen::Index>(b));
      const Eigen::Index co = both.count();
      require(co >= 2, ErrorKind::insufficient_overlap,
              "modality pair (" + std::to_string(a) + ", " + std::to_string(b) + ") has " +
                  std::to_string(co) + " co-present samples; need >= 2");
      const double denom = static_cast<double>(co - 1);
      PairTerm p;
      p.first = a;
      p.second = b;
      p.co_present = co;
      double inner = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (!both(i)) continue;
        inner += centered[a].row(i).dot(centered[b].row(i));
        grads[a].row(i) += 2.0 * centered[b].row(i) / denom;
        grads[b].row(i) += 2.0 * centered[a].row(i) / denom;
      }
      p.inner = inner / denom;
      p.trace = trace_product(cov[a], cov[b]);
      p.value = p.inner - 0.5 * p.trace;
      grads[a] -= 2.0 * centered[a] * cov[b] / static_cast<double>(present[a] - 1);
      grads[b] -= 2.0 * centered[b] * cov[a] / static_cast<double>(present[b] - 1);
      r.inner_term += 2.0 * p.inner;
      r.trace_term += 2.0 * p.trace;
      r.pairs.push_back(p);
    }
  }
  r.value = r.inner_term - 0.5 * r.trace_term;

  for (std::size_t j = 0; j < d; ++j) {
    const RowMask mask = presence.col(static_cast<Eigen::Index>(j));
    const RowVector mean = rows_where(grads[j], mask).colwise().mean();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (mask(i)) grads[j].row(i) -= mean;
      else grads[j].row(i).setZero();
    }
  }
  r.feature_gradients = std::move(grads);
  return r;
}

ObjectiveReport multimodal_soft_hgr(const ModalBatch& batch, const std::vector<FeatureMap>& maps) {
  batch.validate();
  require(maps.size() == batch.modality_count(), ErrorKind::invalid_argument,
          "one feature map per modality required");
  std::vector<ForwardTrace> traces;
  std::vector<FeatureBatch> features;
  for (std::size_t j = 0; j < maps.size(); ++j) {
    require(maps[j].input_width() == batch.inputs[j].cols(), ErrorKind::invalid_argument,
            "map " + std::to_string(j) + " input width does not match its modality");
    traces.push_back(forward_trace(maps[j], batch.inputs[j]));
    features.push_back(FeatureBatch{traces.back().output, false});
  }
  ObjectiveReport r = multimodal_soft_hgr(features, batch.presence);
  for (std::size_t j = 0; j < maps.size(); ++j) {
    r.map_gradients.push_back(backward(maps[j], traces[j], r.feature_gradients[j]));
  }
  return r;
}

SoftmaxHead SoftmaxHead::zeros(Eigen::Index input_width, int classes, HeadInput input) {
  require(input_width >= 1 && classes >= 2, ErrorKind::invalid_argument,
          "softmax head needs input width >= 1 and >= 2 classes");
  return SoftmaxHead{Matrix::Zero(input_width, classes), input};
}

SoftmaxHead SoftmaxHead::random(Eigen::Index input_width, int classes, HeadInput input,
                                std::uint64_t seed) {
  SoftmaxHead h = zeros(input_width, classes, input);
  Rng rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(input_width + classes));
  for (Eigen::Index r = 0; r < h.theta.rows(); ++r)
    for (Eigen::Index c = 0; c < h.theta.cols(); ++c) h.theta(r, c) = rng.uniform(-limit, limit);
  return h;
}

nlohmann::json SoftmaxHead::to_json() const {
  std::vector<double> flat;
  for (Eigen::Index r = 0; r < theta.rows(); ++r)
    for (Eigen::Index c = 0; c < theta.cols(); ++c) flat.push_back(theta(r, c));
  return {{"input", input == HeadInput::first_only ? "first_only" : "concatenated"},
          {"input_width", theta.rows()},
          {"classes", theta.cols()},
          {"theta", flat}};
}

SoftmaxHead SoftmaxHead::from_json(const nlohmann::json& j) {
  const auto rows = j.at("input_width").get<Eigen::Index>();
  const auto cols = j.at("classes").get<int>();
  const HeadInput input =
      j.value("input", std::string("concatenated")) == "first_only" ? HeadInput::first_only
                                                                    : HeadInput::concatenated;
  SoftmaxHead h = zeros(rows, cols, input);
  const auto& flat = j.at("theta");
  require(flat.size() == static_cast<std::size_t>(rows * cols), ErrorKind::schema,
          "softmax head: theta size mismatch");
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) h.theta(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
  return h;
}

Matrix softmax_posteriors(const SoftmaxHead& head, const Matrix& f_feat, const Matrix& g_feat) {
  const Matrix h = head_inputs(head, f_feat, g_feat);
  require(h.cols() == head.input_width(), ErrorKind::invalid_argument,
          "softmax head input width mismatch");
  require(h.allFinite(), ErrorKind::invalid_input, "softmax: non-finite features");
  Matrix s = h * head.theta;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    s.row(i).array() -= s.row(i).maxCoeff();
    s.row(i) = s.row(i).array().exp().matrix();
    s.row(i) /= s.row(i).sum();
  }
  return s;
}

Vector softmax_posterior(const SoftmaxHead& head, const RowVector& f_feat, const RowVector& g_feat) {
  return softmax_posteriors(head, Matrix(f_feat), Matrix(g_feat)).row(0).transpose();
}

ObjectiveReport semi_supervised_loss(const FeatureBatch& f, const FeatureBatch& g,
                                     const std::vector<int>& labels, const RowMask& labeled,
                                     const SoftmaxHead& head, double lambda) {
  require(lambda >= 0.0 && lambda <= 1.0, ErrorKind::invalid_argument,
          "lambda must lie in [0, 1]");
  check_pair(f, g);
  const Eigen::Index m = f.size();
  require(labeled.size() == m, ErrorKind::invalid_argument, "labeled mask length mismatch");
  const Eigen::Index n_labeled = labeled.count();
  require(n_labeled > 0 || lambda == 1.0, ErrorKind::no_supervision,
          "no labeled samples in batch while lambda < 1");
  require(n_labeled == 0 || static_cast<Eigen::Index>(labels.size()) == m,
          ErrorKind::invalid_argument, "label vector length mismatch");

  const ObjectiveReport soft = soft_hgr(f, g);

  ObjectiveReport r;
  r.kind = ObjectiveKind::semi_supervised;
  r.lambda = lambda;
  r.inner_term = soft.inner_term;
  r.trace_term = soft.trace_term;
  r.pairs = soft.pairs;

  Matrix grad_f = -lambda * soft.feature_gradients[0];
  Matrix grad_g = -lambda * soft.feature_gradients[1];
  Matrix grad_theta = Matrix::Zero(head.theta.rows(), head.theta.cols());

  double mean_log_q = 0.0;
  if (n_labeled > 0) {
    const Matrix h = head_inputs(head, f.features, g.features);
    const Matrix q = softmax_posteriors(head, f.features, g.features);
    const double scale = (lambda - 1.0) / static_cast<double>(n_labeled);
    Matrix dscore = Matrix::Zero(m, head.theta.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!labeled(i)) continue;
      const int z = labels[static_cast<std::size_t>(i)];
      require(z >= 0 && z < head.class_count(), ErrorKind::invalid_argument,
              "label out of range at row " + std::to_string(i));
      mean_log_q += std::log(q(i, z));
      dscore.row(i) = -q.row(i);
      dscore(i, z) += 1.0;
    }
    mean_log_q /= static_cast<double>(n_labeled);
    dscore *= scale;
    grad_theta = h.transpose() * dscore;
    const Matrix dh = dscore * head.theta.transpose();
    grad_f += dh.leftCols(f.dim());
    if (head.input == HeadInput::concatenated) grad_g += dh.rightCols(g.dim());
  }
  r.supervised_term = mean_log_q;
  r.value = r.reconstruct();
  r.feature_gradients = {std::move(grad_f), std::move(grad_g)};
  r.head_gradient = std::move(grad_theta);
  return r;
}

ObjectiveReport semi_supervised_loss(const ModalBatch& batch, const FeatureMap& f,
                                     const FeatureMap& g, const SoftmaxHead& head, double lambda) {
  batch.validate();
  require(batch.modality_count() == 2, ErrorKind::invalid_argument,
          "semi-supervised loss expects two modalities");
  require(batch.presence.all(), ErrorKind::invalid_argument,
          "semi-supervised loss expects fully observed modalities");
  const ForwardTrace tf = forward_trace(f, batch.inputs[0]);
  const ForwardTrace tg = forward_trace(g, batch.inputs[1]);
  ObjectiveReport r = semi_supervised_loss(FeatureBatch{tf.output, false},
                                           FeatureBatch{tg.output, false}, batch.labels,
                                           batch.labeled, head, lambda);
  r.map_gradients.push_back(backward(f, tf, r.feature_gradients[0]));
  r.map_gradients.push_back(backward(g, tg, r.feature_gradients[1]));
  return r;
}

ObjectiveReport whitened_correlation(const FeatureBatch& f, const FeatureBatch& g, double ridge) {
  check_pair(f, g);
  require(ridge >= 0.0, ErrorKind::invalid_argument, "ridge must be nonnegative");
  const double denom = static_cast<double>(f.size() - 1);

  const Matrix fc = center(f).features;
  const Matrix gc = center(g).features;
  Matrix cov_f = linalg::centered_covariance(fc);
  Matrix cov_g = linalg::centered_covariance(gc);
  cov_f.diagonal().array() += ridge;
  cov_g.diagonal().array() += ridge;
  const Matrix cross = fc.transpose() * gc / denom;

  const Matrix sf = linalg::inverse_sqrt(cov_f);
  const Matrix sg = linalg::inverse_sqrt(cov_g);
  const linalg::SvdResult t = linalg::svd(sf * cross * sg);

  ObjectiveReport r;
  r.kind = ObjectiveKind::whitened;
  r.inner_term = t.singular_values.sum();
  r.value = r.inner_term;

  const Matrix& u = t.left;
  const Matrix& v = t.right;
  const auto& d = t.singular_values;
  const Matrix d_cross = sf * u * v.transpose() * sg;
  const Matrix d_cov_f = -0.5 * sf * u * d.asDiagonal() * u.transpose() * sf;
  const Matrix d_cov_g = -0.5 * sg * v * d.asDiagonal() * v.transpose() * sg;

  Matrix grad_f = (gc * d_cross.transpose() + 2.0 * fc * d_cov_f) / denom;
  Matrix grad_g = (fc * d_cross + 2.0 * gc * d_cov_g) / denom;
  project_centering(grad_f);
  project_centering(grad_g);
  r.feature_gradients = {std::move(grad_f), std::move(grad_g)};
  return r;
}

}  // namespace softhgr

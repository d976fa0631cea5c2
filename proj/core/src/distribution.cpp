#include "softhgr/distribution.hpp"

#include "softhgr/error.hpp"
#include "softhgr/random.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace softhgr {

namespace {

constexpr double kSumTolerance = 1e-9;

// Orthonormal basis of the complement of unit vector `unit`, as columns.
Matrix complement_basis(const Vector& unit) {
  const Eigen::Index n = unit.size();
  const Matrix column = unit;
  Eigen::HouseholderQR<Matrix> qr(column);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return q.rightCols(n - 1);
}

void check_k(const DiscreteJoint& p, Eigen::Index k) {
  const Eigen::Index limit = std::min(p.card_x(), p.card_y()) - 1;
  require(k >= 1 && k <= limit, ErrorKind::invalid_argument,
          "k = " + std::to_string(k) + " outside [1, " + std::to_string(limit) + "]");
}

}  // namespace

DiscreteJoint::DiscreteJoint(Matrix pmf) : pmf_(std::move(pmf)) {
  require(pmf_.rows() >= 1 && pmf_.cols() >= 1, ErrorKind::invalid_distribution, "empty pmf");
  require(pmf_.allFinite(), ErrorKind::invalid_distribution, "pmf has non-finite entries");
  require(pmf_.minCoeff() >= 0.0, ErrorKind::invalid_distribution, "pmf has negative entries");
  const double total = pmf_.sum();
  require(std::abs(total - 1.0) <= kSumTolerance, ErrorKind::invalid_distribution,
          "pmf sums to " + std::to_string(total));
  px_ = pmf_.rowwise().sum();
  py_ = pmf_.colwise().sum().transpose();
  for (Eigen::Index x = 0; x < px_.size(); ++x) {
    require(px_(x) > 0.0, ErrorKind::invalid_distribution,
            "zero marginal P_X(" + std::to_string(x) + ")");
  }
  for (Eigen::Index y = 0; y < py_.size(); ++y) {
    require(py_(y) > 0.0, ErrorKind::invalid_distribution,
            "zero marginal P_Y(" + std::to_string(y) + ")");
  }
}

DiscreteJoint DiscreteJoint::from_counts(const Matrix& counts) {
  require(counts.size() > 0 && counts.allFinite() && counts.minCoeff() >= 0.0,
          ErrorKind::invalid_distribution, "counts must be finite and nonnegative");
  const double total = counts.sum();
  require(total > 0.0, ErrorKind::invalid_distribution, "counts sum to zero");
  return DiscreteJoint(counts / total);
}

DiscreteJoint DiscreteJoint::empirical(const std::vector<int>& xs, const std::vector<int>& ys,
                                       Eigen::Index card_x, Eigen::Index card_y) {
  require(xs.size() == ys.size() && !xs.empty(), ErrorKind::invalid_argument,
          "empirical: sample vectors must be non-empty and equally long");
  Matrix counts = Matrix::Zero(card_x, card_y);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    require(xs[i] >= 0 && xs[i] < card_x && ys[i] >= 0 && ys[i] < card_y,
            ErrorKind::invalid_argument, "empirical: sample index out of range");
    counts(xs[i], ys[i]) += 1.0;
  }
  return from_counts(counts);
}

nlohmann::json DiscreteJoint::to_json() const {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(pmf_.size()));
  for (Eigen::Index x = 0; x < pmf_.rows(); ++x)
    for (Eigen::Index y = 0; y < pmf_.cols(); ++y) flat.push_back(pmf_(x, y));
  return {{"card_x", pmf_.rows()}, {"card_y", pmf_.cols()}, {"pmf", flat}};
}

DiscreteJoint DiscreteJoint::from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorKind::parse, "distribution JSON must be an object");
  for (const char* key : {"card_x", "card_y", "pmf"}) {
    require(j.contains(key), ErrorKind::parse, std::string("distribution JSON missing \"") + key + "\"");
  }
  require(j["card_x"].is_number_integer() && j["card_y"].is_number_integer(), ErrorKind::parse,
          "card_x and card_y must be integers");
  const auto cx = j["card_x"].get<long long>();
  const auto cy = j["card_y"].get<long long>();
  require(cx >= 1 && cy >= 1, ErrorKind::invalid_distribution, "cardinalities must be positive");
  const auto& flat = j["pmf"];
  require(flat.is_array() && static_cast<long long>(flat.size()) == cx * cy,
          ErrorKind::invalid_distribution, "pmf must be an array of card_x * card_y numbers");
  Matrix pmf(cx, cy);
  for (long long x = 0; x < cx; ++x) {
    for (long long y = 0; y < cy; ++y) {
      const auto& v = flat[static_cast<std::size_t>(x * cy + y)];
      require(v.is_number(), ErrorKind::parse, "pmf entries must be numbers");
      pmf(x, y) = v.get<double>();
    }
  }
  return DiscreteJoint(std::move(pmf));
}

DependenceMatrix build_dependence(const DiscreteJoint& p) {
  DependenceMatrix d;
  d.u0 = p.marginal_x().cwiseSqrt();
  d.v0 = p.marginal_y().cwiseSqrt();
  d.b = d.u0.cwiseInverse().asDiagonal() * p.pmf() * d.v0.cwiseInverse().asDiagonal();
  d.b_centered = d.b - d.u0 * d.v0.transpose();
  return d;
}

HgrSolution exact_hgr(const DiscreteJoint& p, Eigen::Index k) {
  check_k(p, k);
  const DependenceMatrix d = build_dependence(p);

  // Restrict to the complements of u0 and v0 so that the features are
  // zero-mean even when the spectrum of b_centered is degenerate at zero.
  const Matrix qx = complement_basis(d.u0);
  const Matrix qy = complement_basis(d.v0);
  const linalg::SvdResult reduced = linalg::svd(qx.transpose() * d.b_centered * qy);

  linalg::SvdResult full{qx * reduced.left, reduced.singular_values, qy * reduced.right};
  // Re-apply the sign convention in the original coordinates.
  for (Eigen::Index j = 0; j < full.left.cols(); ++j) {
    Eigen::Index best = 0;
    full.left.col(j).cwiseAbs().maxCoeff(&best);
    if (full.left(best, j) < 0.0) {
      full.left.col(j) *= -1.0;
      full.right.col(j) *= -1.0;
    }
  }

  HgrSolution s;
  s.k = k;
  s.sigmas = full.singular_values.head(k);
  s.f_table = d.u0.cwiseInverse().asDiagonal() * full.left.leftCols(k);
  s.g_table = d.v0.cwiseInverse().asDiagonal() * full.right.leftCols(k);
  return s;
}

double maximal_correlation(const DiscreteJoint& p, Eigen::Index k) {
  return exact_hgr(p, k).sigmas.sum();
}

double soft_hgr_optimum(const DiscreteJoint& p, Eigen::Index k) {
  return 0.5 * exact_hgr(p, k).sigmas.squaredNorm();
}

IndexSamples sample(const DiscreteJoint& p, std::size_t n, std::uint64_t seed) {
  const Eigen::Index cy = p.card_y();
  std::vector<double> cdf;
  cdf.reserve(static_cast<std::size_t>(p.pmf().size()));
  double running = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index x = 0; x < p.card_x(); ++x) {
    for (Eigen::Index y = 0; y < cy; ++y) {
      if (p.pmf()(x, y) > 0.0) last_positive = cdf.size();
      running += p.pmf()(x, y);
      cdf.push_back(running);
    }
  }
  for (double& c : cdf) c /= running;

  Rng rng(seed);
  IndexSamples out;
  out.x.resize(n);
  out.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t cell = it == cdf.end() ? last_positive
                                       : static_cast<std::size_t>(it - cdf.begin());
    out.x[i] = static_cast<int>(cell / static_cast<std::size_t>(cy));
    out.y[i] = static_cast<int>(cell % static_cast<std::size_t>(cy));
  }
  return out;
}

}  // namespace softhgr

#include <softhgr/error.hpp>
#include <softhgr/linalg.hpp>
#include <softhgr/objective.hpp>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace softhgr;

namespace {

void expect_kind(ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
    FAIL() << "expected " << to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

Matrix col(std::initializer_list<double> v) {
  Matrix m(v.size(), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

// Finite differences with respect to raw feature entries.
Vector feature_fd(const std::function<double(const Matrix&)>& fn, const Matrix& x) {
  return oracle::central_gradient(
      [&](const Vector& v) { return fn(Eigen::Map<const Matrix>(v.data(), x.rows(), x.cols())); },
      Eigen::Map<const Vector>(x.data(), x.size()), 1e-5);
}

Vector flat(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

}  // namespace

TEST(SoftHgr, HandArithmetic) {
  const auto r = soft_hgr(FeatureBatch{col({0, 2})}, FeatureBatch{col({0, 2})});
  EXPECT_DOUBLE_EQ(r.inner_term, 2.0);
  EXPECT_DOUBLE_EQ(r.trace_term, 4.0);
  EXPECT_DOUBLE_EQ(r.value, 0.0);
}

TEST(SoftHgr, ZeroFeaturesGiveZero) {
  const auto r = soft_hgr(FeatureBatch{Matrix::Zero(6, 2)}, FeatureBatch{oracle::random_matrix(6, 2, 1)});
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.feature_gradients[1].norm(), 0.0);
}

TEST(SoftHgr, MatchesLoopOracleAndFiniteDifferences) {
  const Matrix f = oracle::random_matrix(50, 3, 5), g = oracle::random_matrix(50, 3, 6) + 0.5 * f;
  const auto r = soft_hgr(FeatureBatch{f}, FeatureBatch{g});
  EXPECT_NEAR(r.value, oracle::loop_soft_hgr(f, g), 1e-12);
  EXPECT_NEAR(r.value, r.reconstruct(), 1e-10);
  const Vector nf = feature_fd([&](const Matrix& x) { return oracle::loop_soft_hgr(x, g); }, f);
  const Vector ng = feature_fd([&](const Matrix& x) { return oracle::loop_soft_hgr(f, x); }, g);
  EXPECT_LT(oracle::max_relative_error(flat(r.feature_gradients[0]), nf), 1e-6);
  EXPECT_LT(oracle::max_relative_error(flat(r.feature_gradients[1]), ng), 1e-6);
}

TEST(SoftHgr, ShiftInvariance) {
  const Matrix f = oracle::random_matrix(30, 4, 1), g = oracle::random_matrix(30, 4, 2);
  const RowVector shift = oracle::random_matrix(1, 4, 3, 100.0);
  const auto a = soft_hgr(FeatureBatch{f}, FeatureBatch{g});
  const auto b = soft_hgr(FeatureBatch{f.rowwise() + shift}, FeatureBatch{g});
  EXPECT_NEAR(a.value, b.value, 1e-10);
  EXPECT_LT((a.feature_gradients[0] - b.feature_gradients[0]).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((a.feature_gradients[1] - b.feature_gradients[1]).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SoftHgr, NeverSingular) {
  // k far above m: no inversion anywhere, so this must simply work.
  const auto r = soft_hgr(FeatureBatch{oracle::random_matrix(3, 40, 1)}, FeatureBatch{oracle::random_matrix(3, 40, 2)});
  EXPECT_TRUE(std::isfinite(r.value));
}

TEST(SoftHgr, Preconditions) {
  expect_kind(ErrorKind::invalid_argument,
              [] { soft_hgr(FeatureBatch{Matrix::Ones(1, 2)}, FeatureBatch{Matrix::Ones(1, 2)}); });
  expect_kind(ErrorKind::invalid_argument,
              [] { soft_hgr(FeatureBatch{Matrix::Ones(4, 2)}, FeatureBatch{Matrix::Ones(4, 3)}); });
}

TEST(SoftHgr, MapGradientMatrix) {
  for (const auto& c : gradcheck::bimodal_matrix()) EXPECT_LT(gradcheck::soft_hgr_error(c), 1e-5) << c.name;
}

TEST(Multimodal, BimodalIsTwiceSoftHgr) {
  const Matrix f = oracle::random_matrix(25, 3, 1), g = oracle::random_matrix(25, 3, 2) - f;
  const auto two = soft_hgr(FeatureBatch{f}, FeatureBatch{g});
  const auto multi = multimodal_soft_hgr({FeatureBatch{f}, FeatureBatch{g}}, Mask::Constant(25, 2, true));
  EXPECT_NEAR(multi.value, 2.0 * two.value, 1e-12);
  ASSERT_EQ(multi.pairs.size(), 1u);
  EXPECT_NEAR(multi.pairs[0].value, two.value, 1e-12);
  EXPECT_EQ(multi.pairs[0].co_present, 25);
  EXPECT_NEAR(multi.value, multi.reconstruct(), 1e-10);
  EXPECT_LT((multi.feature_gradients[0] - 2.0 * two.feature_gradients[0]).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Multimodal, ConstantModalityContributesNothing) {
  const Matrix a = oracle::random_matrix(20, 2, 1), b = oracle::random_matrix(20, 2, 2);
  const auto r = multimodal_soft_hgr({FeatureBatch{a}, FeatureBatch{b}, FeatureBatch{Matrix::Constant(20, 2, 3.0)}},
                                     Mask::Constant(20, 3, true));
  ASSERT_EQ(r.pairs.size(), 3u);
  for (const auto& p : r.pairs)
    if (p.second == 2) EXPECT_EQ(p.value, 0.0);
  EXPECT_NEAR(r.value, 2.0 * soft_hgr(FeatureBatch{a}, FeatureBatch{b}).value, 1e-12);
}

TEST(Multimodal, FeatureGradientsWithMissingRows) {
  const Eigen::Index m = 30;
  std::vector<Matrix> fs{oracle::random_matrix(m, 2, 1), oracle::random_matrix(m, 2, 2), oracle::random_matrix(m, 2, 3)};
  const Mask presence = data::disjoint_missing_mask(m, {0.3, 0.3, 0.3}, 4);
  auto value = [&](const std::vector<Matrix>& x) {
    return multimodal_soft_hgr({FeatureBatch{x[0]}, FeatureBatch{x[1]}, FeatureBatch{x[2]}}, presence).value;
  };
  const auto r = multimodal_soft_hgr({FeatureBatch{fs[0]}, FeatureBatch{fs[1]}, FeatureBatch{fs[2]}}, presence);
  EXPECT_TRUE(std::isfinite(r.value));
  for (int j = 0; j < 3; ++j) {
    const Vector n = feature_fd([&](const Matrix& x) { auto c = fs; c[j] = x; return value(c); }, fs[j]);
    EXPECT_LT(oracle::max_relative_error(flat(r.feature_gradients[j]), n), 1e-5) << j;
    for (Eigen::Index i = 0; i < m; ++i)
      if (!presence(i, j)) EXPECT_EQ(r.feature_gradients[j].row(i).norm(), 0.0);
  }
}

TEST(Multimodal, MapGradientMatrixWithMissing) {
  for (const auto& c : gradcheck::trimodal_matrix()) EXPECT_LT(gradcheck::multimodal_error(c, 0.3), 1e-5) << c.name;
}

TEST(Multimodal, InsufficientOverlapNamesPair) {
  Mask presence = Mask::Constant(4, 3, true);
  presence.col(0) << true, false, true, true;
  presence.col(2) << true, true, false, false;
  try {
    multimodal_soft_hgr({FeatureBatch{oracle::random_matrix(4, 2, 1)}, FeatureBatch{oracle::random_matrix(4, 2, 2)},
                         FeatureBatch{oracle::random_matrix(4, 2, 3)}},
                        presence);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_overlap);
    EXPECT_NE(std::string(e.what()).find("(0, 2)"), std::string::npos) << e.what();
  }
}

TEST(Softmax, ZeroThetaIsUniform) {
  const auto head = SoftmaxHead::zeros(4, 5, HeadInput::concatenated);
  const Vector q = softmax_posterior(head, oracle::random_matrix(1, 2, 1), oracle::random_matrix(1, 2, 2));
  for (Eigen::Index j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(q(j), 0.2);
}

TEST(Softmax, StableUnderLargeLogits) {
  auto head = SoftmaxHead::zeros(2, 3, HeadInput::first_only);
  head.theta(0, 1) = 1000.0;
  RowVector f(2);
  f << 1.0, 0.0;
  const Vector q = softmax_posterior(head, f, RowVector());
  EXPECT_TRUE(q.allFinite());
  EXPECT_NEAR(q(1), 1.0, 1e-9);
  EXPECT_NEAR(q.sum(), 1.0, 1e-12);
}

TEST(Softmax, MatchesScalarLoopOracle) {
  const auto head = SoftmaxHead::random(5, 4, HeadInput::concatenated, 9);
  const RowVector f = oracle::random_matrix(1, 3, 1), g = oracle::random_matrix(1, 2, 2);
  Vector h(5);
  h << f.transpose(), g.transpose();
  const Vector q = softmax_posterior(head, f, g);
  EXPECT_LT((q - oracle::loop_softmax(h, head.theta)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(q.sum(), 1.0, 1e-12);
  EXPECT_GT(q.minCoeff(), 0.0);
}

TEST(Softmax, HeadJsonRoundTrip) {
  const auto head = SoftmaxHead::random(3, 4, HeadInput::first_only, 2);
  const auto back = SoftmaxHead::from_json(nlohmann::json::parse(head.to_json().dump()));
  EXPECT_EQ(back.theta, head.theta);
  EXPECT_EQ(back.input, HeadInput::first_only);
}

namespace {

struct SemiFixture {
  Matrix f = oracle::random_matrix(40, 3, 1);
  std::vector<int> labels;
  RowMask labeled = RowMask::Zero(40);
  SemiFixture() {
    for (int i = 0; i < 40; ++i) {
      labels.push_back(i % 4);
      labeled(i) = i % 2 == 0;
    }
  }
};

}  // namespace

TEST(SemiSupervised, LambdaOneIsNegatedSoftHgr) {
  SemiFixture s;
  const Matrix g3 = oracle::random_matrix(40, 3, 3);
  const auto head3 = SoftmaxHead::random(6, 4, HeadInput::concatenated, 1);
  const auto loss = semi_supervised_loss(FeatureBatch{s.f}, FeatureBatch{g3}, s.labels, s.labeled, head3, 1.0);
  EXPECT_NEAR(loss.value, -soft_hgr(FeatureBatch{s.f}, FeatureBatch{g3}).value, 1e-12);
  EXPECT_NEAR(loss.value, loss.reconstruct(), 1e-10);
}

TEST(SemiSupervised, LambdaZeroIsCrossEntropy) {
  SemiFixture s;
  const Matrix g3 = oracle::random_matrix(40, 3, 3);
  const auto head = SoftmaxHead::random(3, 4, HeadInput::first_only, 5);
  const auto loss = semi_supervised_loss(FeatureBatch{s.f}, FeatureBatch{g3}, s.labels, s.labeled, head, 0.0);
  double ce = 0.0;
  int n = 0;
  for (int i = 0; i < 40; ++i) {
    if (!s.labeled(i)) continue;
    ce -= std::log(oracle::loop_softmax(s.f.row(i).transpose(), head.theta)(s.labels[i]));
    ++n;
  }
  EXPECT_NEAR(loss.value, ce / n, 1e-12);
  ASSERT_TRUE(loss.supervised_term.has_value());
  EXPECT_NEAR(*loss.supervised_term, -ce / n, 1e-12);
}

TEST(SemiSupervised, Errors) {
  SemiFixture s;
  const Matrix g3 = oracle::random_matrix(40, 3, 3);
  const auto head = SoftmaxHead::random(6, 4, HeadInput::concatenated, 1);
  expect_kind(ErrorKind::invalid_argument, [&] {
    semi_supervised_loss(FeatureBatch{s.f}, FeatureBatch{g3}, s.labels, s.labeled, head, 1.5);
  });
  expect_kind(ErrorKind::no_supervision, [&] {
    semi_supervised_loss(FeatureBatch{s.f}, FeatureBatch{g3}, s.labels, RowMask::Zero(40), head, 0.5);
  });
  EXPECT_NO_THROW(semi_supervised_loss(FeatureBatch{s.f}, FeatureBatch{g3}, s.labels, RowMask::Zero(40), head, 1.0));
}

TEST(SemiSupervised, GradientsBothHeadVariants) {
  const gradcheck::Case c{"semi", {{4, 6, 3}, {3, 5, 3}}, 24, 77};
  EXPECT_LT(gradcheck::semi_error(c, 0.3, HeadInput::concatenated), 1e-5);
  EXPECT_LT(gradcheck::semi_error(c, 0.3, HeadInput::first_only), 1e-5);
  EXPECT_LT(gradcheck::semi_error(c, 0.0, HeadInput::first_only), 1e-5);
}

TEST(Whitened, SelfCorrelationIsK) {
  const Matrix f = oracle::random_matrix(100, 4, 1);
  EXPECT_NEAR(whitened_correlation(FeatureBatch{f}, FeatureBatch{f}).value, 4.0, 1e-4);
}

TEST(Whitened, RankDeficientWithoutRidge) {
  expect_kind(ErrorKind::singular_covariance, [] {
    whitened_correlation(FeatureBatch{oracle::random_matrix(5, 5, 1)}, FeatureBatch{oracle::random_matrix(5, 5, 2)}, 0.0);
  });
}

TEST(Whitened, MatchesLinearCca) {
  const Matrix f = oracle::random_matrix(200, 5, 1);
  const Matrix g = 0.6 * f + oracle::random_matrix(200, 5, 2);
  const auto cca = linalg::linear_cca(f, g, 5);
  double sum = 0.0;
  for (double c : cca) sum += c;
  EXPECT_NEAR(whitened_correlation(FeatureBatch{f}, FeatureBatch{g}).value, sum, 1e-6);
}

TEST(Whitened, MapGradientMatrix) {
  for (const auto& c : gradcheck::bimodal_matrix()) EXPECT_LT(gradcheck::whitened_error(c), 1e-5) << c.name;
}

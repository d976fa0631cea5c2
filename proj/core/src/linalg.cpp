#include "softhgr/linalg.hpp"

#include "softhgr/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace softhgr::linalg {

void require_finite(const Matrix& m, std::string_view what) {
  require(m.rows() >= 1 && m.cols() >= 1, ErrorKind::invalid_input,
          std::string(what) + ": empty matrix");
  require(m.allFinite(), ErrorKind::invalid_input,
          std::string(what) + ": non-finite entry");
}

namespace {

// Canonical sign: largest-magnitude entry of each left vector nonnegative.
void canonicalize_signs(SvdResult& r) {
  for (Eigen::Index j = 0; j < r.left.cols(); ++j) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < r.left.rows(); ++i) {
      const double a = std::abs(r.left(i, j));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (r.left(best, j) < 0.0) {
      r.left.col(j) *= -1.0;
      r.right.col(j) *= -1.0;
    }
  }
}

}  // namespace

SvdResult svd(const Matrix& m) {
  require_finite(m, "svd");
  Eigen::BDCSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult result{solver.matrixU(), solver.singularValues(), solver.matrixV()};
  // BDCSVD already orders values; clamp tiny negative round-off.
  result.singular_values = result.singular_values.cwiseMax(0.0);
  canonicalize_signs(result);
  return result;
}

Matrix truncated_low_rank(const Matrix& m, Eigen::Index rank) {
  require(rank >= 1 && rank <= std::min(m.rows(), m.cols()), ErrorKind::invalid_argument,
          "truncated_low_rank: rank " + std::to_string(rank) + " outside [1, " +
              std::to_string(std::min(m.rows(), m.cols())) + "]");
  const SvdResult s = svd(m);
  return s.left.leftCols(rank) * s.singular_values.head(rank).asDiagonal() *
         s.right.leftCols(rank).transpose();
}

Matrix inverse_sqrt(const Matrix& c) {
  require_finite(c, "inverse_sqrt");
  require(c.rows() == c.cols(), ErrorKind::invalid_argument, "inverse_sqrt: matrix not square");
  const double scale = std::max(c.cwiseAbs().maxCoeff(), 1e-300);
  require((c - c.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale, ErrorKind::invalid_argument,
          "inverse_sqrt: matrix not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (c + c.transpose()));
  const Vector& values = eig.eigenvalues();  // ascending
  const double largest = values(values.size() - 1);
  const double smallest = values(0);
  if (!(largest > 0.0) || smallest < kSingularEigenRatio * largest) {
    fail(ErrorKind::singular_covariance,
         "inverse_sqrt: eigenvalue ratio " + std::to_string(smallest) + " / " +
             std::to_string(largest) + " below threshold");
  }
  const Matrix& vecs = eig.eigenvectors();
  Matrix s = vecs * values.cwiseSqrt().cwiseInverse().asDiagonal() * vecs.transpose();
  return 0.5 * (s + s.transpose());
}

Matrix centered_covariance(const Matrix& centered) {
  require(centered.rows() >= 2, ErrorKind::invalid_argument,
          "covariance needs at least two rows");
  Matrix cov = Matrix::Zero(centered.cols(), centered.cols());
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(centered.rows() - 1);
  return cov;
}

std::vector<double> linear_cca(const Matrix& x, const Matrix& y, Eigen::Index k) {
  require_finite(x, "linear_cca x");
  require_finite(y, "linear_cca y");
  require(x.rows() == y.rows(), ErrorKind::invalid_argument, "linear_cca: row count mismatch");
  require(x.rows() > std::max(x.cols(), y.cols()), ErrorKind::invalid_argument,
          "linear_cca: need more samples than columns");
  require(k >= 1 && k <= std::min(x.cols(), y.cols()), ErrorKind::invalid_argument,
          "linear_cca: k outside [1, min(p, q)]");

  const Matrix xc = x.rowwise() - x.colwise().mean();
  const Matrix yc = y.rowwise() - y.colwise().mean();
  const double denom = static_cast<double>(x.rows() - 1);

  Matrix cxx = centered_covariance(xc);
  Matrix cyy = centered_covariance(yc);
  cxx.diagonal().array() += kCcaRidge;
  cyy.diagonal().array() += kCcaRidge;
  const Matrix cxy = xc.transpose() * yc / denom;

  const Matrix whitened = inverse_sqrt(cxx) * cxy * inverse_sqrt(cyy);
  const Vector sigma = svd(whitened).singular_values;

  std::vector<double> out(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = std::clamp(sigma(i), 0.0, 1.0);
  return out;
}

}  // namespace softhgr::linalg

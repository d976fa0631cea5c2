#pragma once

#include <Eigen/Dense>

#include <string_view>
#include <vector>

namespace softhgr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

namespace linalg {

/// Thin singular value decomposition m = U diag(sigma) V^T.
///
/// Columns of `left` and `right` are orthonormal, `singular_values` is sorted
/// non-increasing. Signs are canonical: in every left singular vector the
/// entry of largest magnitude (lowest index on ties) is nonnegative, and the
/// paired right vector follows it.
struct SvdResult {
  Matrix left;
  Vector singular_values;
  Matrix right;
};

/// Throws Error(invalid_input) unless every entry of `m` is finite and the
/// matrix is non-empty.
void require_finite(const Matrix& m, std::string_view what);

SvdResult svd(const Matrix& m);

/// Best rank-r approximation in Frobenius norm: sum_{i<r} sigma_i u_i v_i^T.
Matrix truncated_low_rank(const Matrix& m, Eigen::Index rank);

/// Relative eigenvalue floor below which a covariance counts as singular.
inline constexpr double kSingularEigenRatio = 1e-10;

/// Symmetric inverse square root S with S c S = I.
/// Throws Error(singular_covariance) when the smallest eigenvalue is below
/// kSingularEigenRatio times the largest.
Matrix inverse_sqrt(const Matrix& c);

/// Ridge added to each auto-covariance inside linear_cca.
inline constexpr double kCcaRidge = 1e-8;

/// Top-k canonical correlations between the columns of x (n x p) and
/// y (n x q). Columns are centered internally; results are clamped to [0, 1]
/// and sorted non-increasing.
std::vector<double> linear_cca(const Matrix& x, const Matrix& y, Eigen::Index k);

/// Symmetric sample covariance of already-centered rows, normalized by
/// 1/(rows - 1).
Matrix centered_covariance(const Matrix& centered);

}  // namespace linalg
}  // namespace softhgr

#pragma once

#include "softhgr/linalg.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace softhgr {

/// Joint probability mass function over finite alphabets {0..card_x-1} x
/// {0..card_y-1}. Construction validates the pmf: entries are nonnegative,
/// sum to one within 1e-9, and every marginal is strictly positive.
class DiscreteJoint {
public:
  explicit DiscreteJoint(Matrix pmf);

  /// Normalizes a table of nonnegative counts (or weights).
  static DiscreteJoint from_counts(const Matrix& counts);
  /// Empirical joint of paired index samples.
  static DiscreteJoint empirical(const std::vector<int>& xs, const std::vector<int>& ys,
                                 Eigen::Index card_x, Eigen::Index card_y);

  Eigen::Index card_x() const noexcept { return pmf_.rows(); }
  Eigen::Index card_y() const noexcept { return pmf_.cols(); }
  const Matrix& pmf() const noexcept { return pmf_; }
  const Vector& marginal_x() const noexcept { return px_; }
  const Vector& marginal_y() const noexcept { return py_; }

  /// {"card_x": int, "card_y": int, "pmf": [row-major numbers]}
  nlohmann::json to_json() const;
  static DiscreteJoint from_json(const nlohmann::json& j);

private:
  Matrix pmf_;
  Vector px_;
  Vector py_;
};

struct DependenceMatrix {
  Matrix b;           // P(x,y) / sqrt(P(x) P(y))
  Matrix b_centered;  // b - u0 v0^T
  Vector u0;          // sqrt(P_X)
  Vector v0;          // sqrt(P_Y)
};

/// Optimal HGR feature tables: row x of f_table is f*(x), column i is feature i.
struct HgrSolution {
  Eigen::Index k = 0;
  Matrix f_table;
  Matrix g_table;
  Vector sigmas;
};

struct IndexSamples {
  std::vector<int> x;
  std::vector<int> y;
};

DependenceMatrix build_dependence(const DiscreteJoint& p);

/// Top-k singular pairs of the centered dependence matrix mapped back to
/// feature functions. Requires 1 <= k <= min(card_x, card_y) - 1.
HgrSolution exact_hgr(const DiscreteJoint& p, Eigen::Index k);

/// sum_{i<=k} sigma_i.
double maximal_correlation(const DiscreteJoint& p, Eigen::Index k);

/// Population maximum of the soft objective: 0.5 * sum_{i<=k} sigma_i^2.
double soft_hgr_optimum(const DiscreteJoint& p, Eigen::Index k);

/// n i.i.d. pairs by inverse-CDF over the row-major pmf.
IndexSamples sample(const DiscreteJoint& p, std::size_t n, std::uint64_t seed);

}  // namespace softhgr

#pragma once

#include "softhgr/linalg.hpp"

#include <vector>

namespace softhgr {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using RowMask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// m paired samples across d modalities.
///
/// `presence(i, j)` says whether modality j was observed for sample i; rows of
/// absent modalities are ignored (their contents are unspecified but must be
/// finite). Labels are class indices in [0, class_count) and only meaningful
/// where `labeled(i)` is set.
struct ModalBatch {
  std::vector<Matrix> inputs;
  Mask presence;
  std::vector<int> labels;
  RowMask labeled;
  int class_count = 0;

  /// Fully observed, unlabeled batch.
  static ModalBatch complete(std::vector<Matrix> inputs);

  Eigen::Index size() const { return inputs.empty() ? 0 : inputs.front().rows(); }
  std::size_t modality_count() const { return inputs.size(); }
  bool has_labels() const { return !labels.empty(); }
  Eigen::Index labeled_count() const;

  /// Throws Error(invalid_input / invalid_argument) on any broken invariant.
  void validate() const;

  /// Rows `rows` of every field, in order.
  ModalBatch select(const std::vector<Eigen::Index>& rows) const;
};

}  // namespace softhgr

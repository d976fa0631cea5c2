#include "softhgr/modal_batch.hpp"

#include "softhgr/error.hpp"

#include <string>

namespace softhgr {

ModalBatch ModalBatch::complete(std::vector<Matrix> inputs) {
  ModalBatch b;
  b.inputs = std::move(inputs);
  const Eigen::Index m = b.size();
  b.presence = Mask::Constant(m, static_cast<Eigen::Index>(b.inputs.size()), true);
  b.labeled = RowMask::Constant(m, false);
  return b;
}

Eigen::Index ModalBatch::labeled_count() const {
  if (!has_labels()) return 0;
  return labeled.count();
}

void ModalBatch::validate() const {
  require(!inputs.empty(), ErrorKind::invalid_argument, "batch has no modalities");
  const Eigen::Index m = size();
  const auto d = static_cast<Eigen::Index>(inputs.size());
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    require(inputs[j].rows() == m, ErrorKind::invalid_argument,
            "modality " + std::to_string(j) + " has a different sample count");
    require(inputs[j].cols() >= 1, ErrorKind::invalid_argument,
            "modality " + std::to_string(j) + " has zero width");
    require(inputs[j].allFinite(), ErrorKind::invalid_input,
            "modality " + std::to_string(j) + " has non-finite entries");
  }
  require(presence.rows() == m && presence.cols() == d, ErrorKind::invalid_argument,
          "presence mask shape mismatch");
  require(labeled.size() == m, ErrorKind::invalid_argument, "labeled mask length mismatch");
  if (has_labels()) {
    require(static_cast<Eigen::Index>(labels.size()) == m, ErrorKind::invalid_argument,
            "label count mismatch");
    require(class_count >= 2, ErrorKind::invalid_argument, "class_count must be >= 2");
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!labeled(i)) continue;
      require(labels[static_cast<std::size_t>(i)] >= 0 &&
                  labels[static_cast<std::size_t>(i)] < class_count,
              ErrorKind::invalid_argument, "label out of range at row " + std::to_string(i));
    }
  } else {
    require(!labeled.any(), ErrorKind::invalid_argument, "labeled rows without labels");
  }
}

ModalBatch ModalBatch::select(const std::vector<Eigen::Index>& rows) const {
  ModalBatch out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  for (const auto& in : inputs) {
    Matrix sub(n, in.cols());
    for (Eigen::Index r = 0; r < n; ++r) sub.row(r) = in.row(rows[static_cast<std::size_t>(r)]);
    out.inputs.push_back(std::move(sub));
  }
  out.presence.resize(n, presence.cols());
  out.labeled.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    out.presence.row(r) = presence.row(rows[static_cast<std::size_t>(r)]);
    out.labeled(r) = labeled(rows[static_cast<std::size_t>(r)]);
  }
  if (has_labels()) {
    out.labels.reserve(rows.size());
    for (const auto r : rows) out.labels.push_back(labels[static_cast<std::size_t>(r)]);
  }
  out.class_count = class_count;
  return out;
}

}  // namespace softhgr

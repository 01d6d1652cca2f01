#pragma once

#include <cmath>

#include "editid/core.hpp"

namespace editid {

/// Row-wise softmax with max subtraction.
template <typename Scalar>
Mat<Scalar> softmax_rows(const Mat<Scalar>& logits) {
  Mat<Scalar> out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const Scalar m = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - m).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

/// softmax(q k^T / sqrt(d)) v for a single head.
template <typename Scalar>
Mat<Scalar> scaled_dot_attention(const Mat<Scalar>& q, const Mat<Scalar>& k, const Mat<Scalar>& v) {
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(q.cols()));
  return softmax_rows<Scalar>((q * k.transpose()) * scale) * v;
}

/// Splits the feature axis into `heads` contiguous blocks and attends per head.
template <typename Scalar>
Mat<Scalar> multi_head_attention(const Mat<Scalar>& q, const Mat<Scalar>& k, const Mat<Scalar>& v,
                                 int heads) {
  if (heads <= 0 || q.cols() % heads != 0 || v.cols() % heads != 0 || q.cols() != k.cols())
    throw Error(ErrorCode::ShapeMismatch, "head count must divide the attention width");
  const Eigen::Index qd = q.cols() / heads;
  const Eigen::Index vd = v.cols() / heads;
  Mat<Scalar> out(q.rows(), v.cols());
  for (int h = 0; h < heads; ++h) {
    out.middleCols(h * vd, vd) = scaled_dot_attention<Scalar>(
        q.middleCols(h * qd, qd), k.middleCols(h * qd, qd), v.middleCols(h * vd, vd));
  }
  return out;
}

}  // namespace editid

#pragma once

#include <span>

#include <Eigen/Dense>

#include "anchorloc/geometry.h"

namespace anchorloc {

// Homogeneous DLT solution over any number of views (normalized image
// coordinates). Not normalized; the caller decides how to treat w ~ 0.
inline Eigen::Vector4d TriangulateDlt(std::span<const Posed> poses,
                                      std::span<const Eigen::Vector2d> points) {
  const int n = static_cast<int>(poses.size());
  Eigen::MatrixXd a(2 * n, 4);
  for (int i = 0; i < n; ++i) {
    Eigen::Matrix<double, 3, 4> p;
    p.leftCols<3>() = poses[i].rotation.matrix();
    p.col(3) = poses[i].translation;
    a.row(2 * i) = points[i].x() * p.row(2) - p.row(0);
    a.row(2 * i + 1) = points[i].y() * p.row(2) - p.row(1);
  }
  if (n < 2) {
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    return svd.matrixV().col(3);
  }
  // A and its R factor share the right singular vectors.
  Eigen::Matrix4d r = a.topRows<4>();
  if (n > 2) {
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    r = qr.matrixQR().topRows<4>().triangularView<Eigen::Upper>();
  }
  const Eigen::JacobiSVD<Eigen::Matrix4d> svd(r, Eigen::ComputeFullV);
  return svd.matrixV().col(3);
}

}  // namespace anchorloc

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "kerker/constants.hpp"

namespace kerker {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3d = Vec3<double>;
using Vec3c = Vec3<cplx>;
using Mat3d = Mat3<double>;
using Mat3c = Mat3<cplx>;

using Points = Eigen::Matrix3Xd;
using Fields = Eigen::Matrix3Xcd;

/// Bilinear cross product. Eigen's cross() conjugates complex operands.
template <typename A, typename B>
auto cross(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  using S = typename Eigen::ScalarBinaryOpTraits<typename A::Scalar, typename B::Scalar>::ReturnType;
  return Vec3<S>(a.y() * b.z() - a.z() * b.y(), a.z() * b.x() - a.x() * b.z(), a.x() * b.y() - a.y() * b.x());
}

}  // namespace kerker

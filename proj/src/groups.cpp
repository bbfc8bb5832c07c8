#include "gtakit/groups.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gtakit {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

So2Angle::So2Angle(double t) : theta(t) {
  if (!std::isfinite(t)) throw std::invalid_argument("So2Angle: angle must be finite");
}

So3Rotation::So3Rotation(const Eigen::Matrix3d& m) : r(m) {
  const double ortho_err = (m * m.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > 1e-9) throw std::invalid_argument("So3Rotation: matrix is not orthogonal");
  if (std::abs(m.determinant() - 1.0) > 1e-9)
    throw std::invalid_argument("So3Rotation: determinant is not 1");
}

Eigen::Matrix4d Se3Pose::homogeneous() const {
  Eigen::Matrix4d h = Eigen::Matrix4d::Identity();
  h.topLeftCorner<3, 3>() = rotation.r;
  h.topRightCorner<3, 1>() = translation;
  return h;
}

So2Angle compose(const So2Angle& a, const So2Angle& b) { return So2Angle(a.theta + b.theta); }

So3Rotation compose(const So3Rotation& a, const So3Rotation& b) {
  return So3Rotation(Eigen::Matrix3d(a.r * b.r));
}

Se3Pose compose(const Se3Pose& a, const Se3Pose& b) {
  return Se3Pose(compose(a.rotation, b.rotation),
                 Eigen::Vector3d(a.rotation.r * b.translation + a.translation));
}

ProductElement compose(const ProductElement& a, const ProductElement& b) {
  return ProductElement{compose(a.pose, b.pose), compose(a.theta_h, b.theta_h),
                        compose(a.theta_w, b.theta_w)};
}

GroupElement compose(const GroupElement& a, const GroupElement& b) {
  if (a.index() != b.index())
    throw std::invalid_argument("compose: group element variants do not match");
  return std::visit(
      [&](const auto& ga) -> GroupElement {
        using T = std::decay_t<decltype(ga)>;
        return compose(ga, std::get<T>(b));
      },
      a);
}

So2Angle inverse(const So2Angle& g) { return So2Angle(-g.theta); }

So3Rotation inverse(const So3Rotation& g) { return So3Rotation(Eigen::Matrix3d(g.r.transpose())); }

Se3Pose inverse(const Se3Pose& g) {
  const Eigen::Matrix3d rt = g.rotation.r.transpose();
  return Se3Pose(So3Rotation(rt), Eigen::Vector3d(-rt * g.translation));
}

ProductElement inverse(const ProductElement& g) {
  return ProductElement{inverse(g.pose), inverse(g.theta_h), inverse(g.theta_w)};
}

GroupElement inverse(const GroupElement& g) {
  return std::visit([](const auto& ge) -> GroupElement { return inverse(ge); }, g);
}

std::pair<So2Angle, So2Angle> patch_angles(int i, int j, int rows, int cols) {
  if (i < 0 || i >= rows || j < 0 || j >= cols)
    throw std::invalid_argument("patch_angles: index out of range");
  return {So2Angle(kTwoPi * static_cast<double>(i) / rows),
          So2Angle(kTwoPi * static_cast<double>(j) / cols)};
}

So3Rotation sample_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector4d q;
  do {
    for (int k = 0; k < 4; ++k) q[k] = normal(rng);
  } while (q.norm() < 1e-12);
  q.normalize();
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return So3Rotation(r);
}

}  // namespace gtakit

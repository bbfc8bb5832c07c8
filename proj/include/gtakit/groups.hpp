#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <variant>

namespace gtakit {

// 2D rotation angle, stored unnormalized. Composition adds raw angles so the
// fractional-frequency blocks stay exact homomorphisms (they represent the
// additive reals covering SO(2), not the circle itself).
struct So2Angle {
  double theta = 0.0;

  So2Angle() = default;
  explicit So2Angle(double t);
};

// 3D rotation stored as a 3x3 matrix. Orthogonality and det=1 are
// checked on construction (tol 1e-9).
struct So3Rotation {
  Eigen::Matrix3d r = Eigen::Matrix3d::Identity();

  So3Rotation() = default;
  explicit So3Rotation(const Eigen::Matrix3d& m);
};

// Rigid transformation: x -> rotation*x + translation.
struct Se3Pose {
  So3Rotation rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Se3Pose() = default;
  Se3Pose(const So3Rotation& r, const Eigen::Vector3d& t) : rotation(r), translation(t) {}

  Eigen::Matrix4d homogeneous() const;
};

// Token geometry for patch tokens: camera pose plus two image-position angles.
struct ProductElement {
  Se3Pose pose;
  So2Angle theta_h;
  So2Angle theta_w;
};

using GroupElement = std::variant<So2Angle, So3Rotation, Se3Pose, ProductElement>;

So2Angle compose(const So2Angle& a, const So2Angle& b);
So3Rotation compose(const So3Rotation& a, const So3Rotation& b);
Se3Pose compose(const Se3Pose& a, const Se3Pose& b);
ProductElement compose(const ProductElement& a, const ProductElement& b);
// Throws std::invalid_argument when the variants differ.
GroupElement compose(const GroupElement& a, const GroupElement& b);

So2Angle inverse(const So2Angle& g);
So3Rotation inverse(const So3Rotation& g);
Se3Pose inverse(const Se3Pose& g);
ProductElement inverse(const ProductElement& g);
GroupElement inverse(const GroupElement& g);

// Image-position angles for patch (i, j) on an H x W grid. The top-left
// patch maps to (0, 0) and the bottom-right to (2pi(H-1)/H, 2pi(W-1)/W).
std::pair<So2Angle, So2Angle> patch_angles(int i, int j, int rows, int cols);

// Haar-uniform rotation from a normalized 4-normal quaternion.
So3Rotation sample_rotation(std::mt19937_64& rng);

}  // namespace gtakit

#include "gtakit/reps.hpp"

#include <cmath>
#include <stdexcept>

namespace gtakit {

RepBlockSpec RepBlockSpec::rot(int l) {
  if (l != 1 && l != 2) throw std::invalid_argument("RepBlockSpec::rot: degree must be 1 or 2");
  return {RepBlockKind::Rot, l, 0.0, 2 * l + 1};
}

RepBlockSpec RepBlockSpec::so2_h(double f) {
  if (f <= 0.0) throw std::invalid_argument("RepBlockSpec::so2_h: frequency must be positive");
  return {RepBlockKind::So2H, 0, f, 2};
}

RepBlockSpec RepBlockSpec::so2_w(double f) {
  if (f <= 0.0) throw std::invalid_argument("RepBlockSpec::so2_w: frequency must be positive");
  return {RepBlockKind::So2W, 0, f, 2};
}

RepSpec RepSpec::make(std::vector<RepBlockSpec> blocks) {
  RepSpec spec;
  spec.blocks = std::move(blocks);
  for (const auto& b : spec.blocks) {
    if (b.dim < 1) throw std::invalid_argument("RepSpec: block dimension must be >= 1");
    spec.total_dim += b.dim;
  }
  return spec;
}

std::vector<double> octave_frequencies(int n) {
  std::vector<double> f(n);
  for (int k = 0; k < n; ++k) f[k] = std::ldexp(1.0, -k);
  return f;
}

RepSpec RepSpec::block_diagonal(int s, int t, int u, int v, int n_freq, int head_dim) {
  std::vector<RepBlockSpec> blocks;
  for (int k = 0; k < s; ++k) blocks.push_back(RepBlockSpec::cam());
  for (int k = 0; k < t; ++k) {
    blocks.push_back(RepBlockSpec::rot(1));
    blocks.push_back(RepBlockSpec::rot(2));
  }
  const auto freqs = octave_frequencies(n_freq);
  for (int k = 0; k < u; ++k)
    for (double f : freqs) blocks.push_back(RepBlockSpec::so2_h(f));
  for (int k = 0; k < v; ++k)
    for (double f : freqs) blocks.push_back(RepBlockSpec::so2_w(f));
  int used = 0;
  for (const auto& b : blocks) used += b.dim;
  if (used > head_dim)
    throw std::invalid_argument("RepSpec::block_diagonal: blocks exceed head dimension");
  if (used < head_dim) blocks.push_back(RepBlockSpec::trivial(head_dim - used));
  return make(std::move(blocks));
}

RepSpec RepSpec::msn_hard() { return block_diagonal(12, 3, 1, 1, 6, 96); }

RepSpec RepSpec::so3_blocks(int head_dim) {
  std::vector<RepBlockSpec> blocks;
  for (int k = 0; k + 3 <= head_dim; k += 3) blocks.push_back(RepBlockSpec::rot(1));
  if (head_dim % 3 != 0) blocks.push_back(RepBlockSpec::trivial(head_dim % 3));
  return make(std::move(blocks));
}

Eigen::Matrix2d so2_block(const So2Angle& theta, double f) {
  if (f <= 0.0) throw std::invalid_argument("so2_block: frequency must be positive");
  const double c = std::cos(f * theta.theta), s = std::sin(f * theta.theta);
  Eigen::Matrix2d m;
  m << c, -s, s, c;
  return m;
}

Eigen::Matrix4d cam_block(const Se3Pose& c) { return c.homogeneous(); }

namespace {

// Orthonormal Frobenius basis of symmetric traceless 3x3 matrices.
const std::array<Eigen::Matrix3d, 5>& sym_traceless_basis() {
  static const std::array<Eigen::Matrix3d, 5> basis = [] {
    std::array<Eigen::Matrix3d, 5> b;
    const double s2 = std::sqrt(2.0), s6 = std::sqrt(6.0);
    b[0] = Eigen::Matrix3d::Zero();
    b[0](0, 1) = b[0](1, 0) = 1.0 / s2;
    b[1] = Eigen::Matrix3d::Zero();
    b[1](0, 2) = b[1](2, 0) = 1.0 / s2;
    b[2] = Eigen::Matrix3d::Zero();
    b[2](1, 2) = b[2](2, 1) = 1.0 / s2;
    b[3] = Eigen::Matrix3d::Zero();
    b[3](0, 0) = 1.0 / s2;
    b[3](1, 1) = -1.0 / s2;
    b[4] = Eigen::Matrix3d::Zero();
    b[4](0, 0) = 1.0 / s6;
    b[4](1, 1) = 1.0 / s6;
    b[4](2, 2) = -2.0 / s6;
    return b;
  }();
  return basis;
}

Eigen::MatrixXd block_matrix(const RepBlockSpec& b, const ProductElement& g) {
  switch (b.kind) {
    case RepBlockKind::Cam:
      return cam_block(g.pose);
    case RepBlockKind::Rot:
      return wigner_d(g.pose.rotation, b.degree);
    case RepBlockKind::So2H:
      return so2_block(g.theta_h, b.frequency);
    case RepBlockKind::So2W:
      return so2_block(g.theta_w, b.frequency);
    case RepBlockKind::Trivial:
      return Eigen::MatrixXd::Identity(b.dim, b.dim);
  }
  throw std::logic_error("block_matrix: unreachable");
}

Eigen::Matrix4d rigid_inverse(const Eigen::Matrix4d& m) {
  Eigen::Matrix4d inv = Eigen::Matrix4d::Identity();
  const Eigen::Matrix3d rt = m.topLeftCorner<3, 3>().transpose();
  inv.topLeftCorner<3, 3>() = rt;
  inv.topRightCorner<3, 1>() = -rt * m.topRightCorner<3, 1>();
  return inv;
}

}  // namespace

Eigen::MatrixXd wigner_d(const So3Rotation& r, int l) {
  if (l == 1) return r.r;
  if (l != 2) throw std::invalid_argument("wigner_d: only degrees 1 and 2 are supported");
  const auto& basis = sym_traceless_basis();
  Eigen::MatrixXd d(5, 5);
  for (int col = 0; col < 5; ++col) {
    const Eigen::Matrix3d rotated = r.r * basis[col] * r.r.transpose();
    for (int row = 0; row < 5; ++row)
      d(row, col) = (basis[row].cwiseProduct(rotated)).sum();
  }
  return d;
}

Eigen::MatrixXd Representation::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim(), dim());
  for (size_t k = 0; k < blocks.size(); ++k) {
    const int o = offsets[k], b = static_cast<int>(blocks[k].rows());
    m.block(o, o, b, b) = blocks[k];
  }
  return m;
}

Eigen::MatrixXd KroneckerRep::dense() const {
  const int k = static_cast<int>(right.rows());
  Eigen::MatrixXd m(4 * k, 4 * k);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m.block(i * k, j * k, k, k) = cam(i, j) * right;
  return m;
}

Representation build_rep(const RepSpec& spec, const ProductElement& g) {
  Representation rep;
  rep.spec = spec;
  int offset = 0;
  for (const auto& b : spec.blocks) {
    rep.offsets.push_back(offset);
    rep.blocks.push_back(block_matrix(b, g));
    offset += b.dim;
  }
  return rep;
}

KroneckerRep build_rep_kronecker(int n_freq, const ProductElement& g) {
  const auto freqs = octave_frequencies(n_freq);
  const int k = 4 * n_freq;
  KroneckerRep rep;
  rep.cam = cam_block(g.pose);
  rep.right = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < n_freq; ++i) {
    rep.right.block(2 * i, 2 * i, 2, 2) = so2_block(g.theta_h, freqs[i]);
    rep.right.block(2 * n_freq + 2 * i, 2 * n_freq + 2 * i, 2, 2) = so2_block(g.theta_w, freqs[i]);
  }
  return rep;
}

Representation rep_transpose(const Representation& p) {
  Representation out = p;
  for (auto& b : out.blocks) b = b.transpose().eval();
  return out;
}

Representation rep_inverse(const Representation& p) {
  Representation out = p;
  for (size_t k = 0; k < out.blocks.size(); ++k) {
    if (p.spec.blocks[k].kind == RepBlockKind::Cam)
      out.blocks[k] = rigid_inverse(Eigen::Matrix4d(p.blocks[k]));
    else
      out.blocks[k] = p.blocks[k].transpose().eval();  // orthogonal or identity
  }
  return out;
}

std::vector<Representation> rep_transpose(std::span<const Representation> p) {
  std::vector<Representation> out;
  out.reserve(p.size());
  for (const auto& r : p) out.push_back(rep_transpose(r));
  return out;
}

std::vector<Representation> rep_inverse(std::span<const Representation> p) {
  std::vector<Representation> out;
  out.reserve(p.size());
  for (const auto& r : p) out.push_back(rep_inverse(r));
  return out;
}

namespace {

Eigen::MatrixXd effective_block(const Representation& rep, size_t k, RepApplyMode mode) {
  switch (mode) {
    case RepApplyMode::Plain:
      return rep.blocks[k];
    case RepApplyMode::Transpose:
      return rep.blocks[k].transpose();
    case RepApplyMode::Inverse:
      if (rep.spec.blocks[k].kind == RepBlockKind::Cam)
        return rigid_inverse(Eigen::Matrix4d(rep.blocks[k]));
      return rep.blocks[k].transpose();
    case RepApplyMode::InverseTranspose:
      if (rep.spec.blocks[k].kind == RepBlockKind::Cam)
        return rigid_inverse(Eigen::Matrix4d(rep.blocks[k])).transpose();
      return rep.blocks[k];  // orthogonal: (M^-1)^T = M
  }
  throw std::logic_error("effective_block: unreachable");
}

}  // namespace

template <typename Scalar>
void rep_apply(std::span<const Representation> reps, const Scalar* x, Scalar* y, int n, int d,
               RepApplyMode mode, FlopCounter* counter) {
  if (static_cast<int>(reps.size()) != n)
    throw std::invalid_argument("rep_apply: representation count does not match token count");
  for (int i = 0; i < n; ++i) {
    const Representation& rep = reps[i];
    if (rep.dim() != d) throw std::invalid_argument("rep_apply: dimension mismatch");
    const Scalar* xi = x + static_cast<size_t>(i) * d;
    Scalar* yi = y + static_cast<size_t>(i) * d;
    for (size_t k = 0; k < rep.blocks.size(); ++k) {
      const int o = rep.offsets[k], b = rep.spec.blocks[k].dim;
      if (rep.spec.blocks[k].kind == RepBlockKind::Trivial) {
        for (int r = 0; r < b; ++r) yi[o + r] = xi[o + r];
        continue;
      }
      const Eigen::MatrixXd m = effective_block(rep, k, mode);
      for (int r = 0; r < b; ++r) {
        double acc = 0.0;
        for (int c = 0; c < b; ++c) acc += m(r, c) * static_cast<double>(xi[o + c]);
        yi[o + r] = static_cast<Scalar>(acc);
      }
      if (counter) counter->madds += static_cast<std::uint64_t>(b) * b;
    }
  }
}

template <typename Scalar>
void kron_apply(std::span<const KroneckerRep> reps, const Scalar* x, Scalar* y, int n, int d,
                RepApplyMode mode, FlopCounter* counter) {
  if (static_cast<int>(reps.size()) != n)
    throw std::invalid_argument("kron_apply: representation count does not match token count");
  for (int i = 0; i < n; ++i) {
    const KroneckerRep& rep = reps[i];
    const int k = static_cast<int>(rep.right.rows());
    if (4 * k != d) throw std::invalid_argument("kron_apply: dimension mismatch");
    Eigen::Matrix4d a = rep.cam;
    Eigen::MatrixXd b = rep.right;
    if (mode == RepApplyMode::Transpose) {
      a.transposeInPlace();
      b.transposeInPlace();
    } else if (mode == RepApplyMode::Inverse) {
      a = rigid_inverse(a);
      b.transposeInPlace();  // so2 blocks are orthogonal
    } else if (mode == RepApplyMode::InverseTranspose) {
      a = rigid_inverse(a).transpose().eval();
      // b orthogonal: (B^-1)^T = B
    }
    // (A (x) B) x for row x reshaped row-major into a 4 x k matrix: A M B^T.
    Eigen::Matrix<double, 4, Eigen::Dynamic> m(4, k);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < k; ++c) m(r, c) = static_cast<double>(x[static_cast<size_t>(i) * d + r * k + c]);
    const Eigen::Matrix<double, 4, Eigen::Dynamic> out = a * m * b.transpose();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < k; ++c) y[static_cast<size_t>(i) * d + r * k + c] = static_cast<Scalar>(out(r, c));
    if (counter) counter->madds += 16ull * k + 4ull * k * k;
  }
}

template void rep_apply<float>(std::span<const Representation>, const float*, float*, int, int,
                               RepApplyMode, FlopCounter*);
template void rep_apply<double>(std::span<const Representation>, const double*, double*, int, int,
                                RepApplyMode, FlopCounter*);
template void kron_apply<float>(std::span<const KroneckerRep>, const float*, float*, int, int,
                                RepApplyMode, FlopCounter*);
template void kron_apply<double>(std::span<const KroneckerRep>, const double*, double*, int, int,
                                 RepApplyMode, FlopCounter*);

}  // namespace gtakit

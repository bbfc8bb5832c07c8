#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gtakit/groups.hpp"

namespace gtakit {

enum class RepBlockKind { Cam, Rot, So2H, So2W, Trivial };

struct RepBlockSpec {
  RepBlockKind kind;
  int degree = 0;      // Wigner-D degree for Rot blocks (1 or 2)
  double frequency = 0.0;  // frequency for So2 blocks
  int dim = 0;         // Cam: 4, Rot: 2l+1, So2: 2, Trivial: free

  static RepBlockSpec cam() { return {RepBlockKind::Cam, 0, 0.0, 4}; }
  static RepBlockSpec rot(int l);
  static RepBlockSpec so2_h(double f);
  static RepBlockSpec so2_w(double f);
  static RepBlockSpec trivial(int k) { return {RepBlockKind::Trivial, 0, 0.0, k}; }
};

// Ordered block structure of a block-diagonal representation, multiplicities
// already unrolled. total_dim must match the head dimension it is applied to.
struct RepSpec {
  std::vector<RepBlockSpec> blocks;
  int total_dim = 0;

  static RepSpec make(std::vector<RepBlockSpec> blocks);

  // s copies of the cam block, t copies of degree {1,2} rot blocks, u/v
  // unrolled so2 ladders with `n_freq` octave frequencies {1, 1/2, ...}.
  // Remaining dimensions up to head_dim get one trivial block.
  static RepSpec block_diagonal(int s, int t, int u, int v, int n_freq, int head_dim);

  // MSN-Hard configuration: {s,t,u,v} = {12,3,1,1}, degrees {1,2}, 6
  // frequencies per image axis; total dimension 96.
  static RepSpec msn_hard();

  // The rotation-only NVS rep: head_dim/3 copies of the 3x3 camera rotation,
  // plus a trivial remainder when head_dim is not divisible by 3.
  static RepSpec so3_blocks(int head_dim);
};

// Octave ladder {1, 1/2, ..., 1/2^(n-1)} with maximum frequency 1.
std::vector<double> octave_frequencies(int n);

// Materialized block-diagonal representation of one group element.
struct Representation {
  RepSpec spec;
  std::vector<Eigen::MatrixXd> blocks;  // one square matrix per spec block
  std::vector<int> offsets;             // block start offsets into [0, total_dim)

  int dim() const { return spec.total_dim; }
  Eigen::MatrixXd dense() const;
};

// rho_cam(c) (x) (rho_h(theta_h) (+) rho_w(theta_w)); never materialized densely.
struct KroneckerRep {
  Eigen::Matrix4d cam;
  Eigen::MatrixXd right;  // block-diagonal so2 part
  int total_dim() const { return 4 * static_cast<int>(right.rows()); }
  Eigen::MatrixXd dense() const;
};

Eigen::Matrix2d so2_block(const So2Angle& theta, double f);
Eigen::Matrix4d cam_block(const Se3Pose& c);

// Real irreducible representation of SO(3). Degree 1 is the rotation matrix
// itself; degree 2 acts on the 5-dim space of symmetric traceless matrices
// via M -> R M R^T, expressed in an orthonormal Frobenius basis.
Eigen::MatrixXd wigner_d(const So3Rotation& r, int l);

Representation build_rep(const RepSpec& spec, const ProductElement& g);
KroneckerRep build_rep_kronecker(int n_freq, const ProductElement& g);

Representation rep_transpose(const Representation& p);
Representation rep_inverse(const Representation& p);
std::vector<Representation> rep_transpose(std::span<const Representation> p);
std::vector<Representation> rep_inverse(std::span<const Representation> p);

enum class RepApplyMode { Plain, Transpose, Inverse, InverseTranspose };

// Multiply-add counter for the structured token-wise apply.
struct FlopCounter {
  std::uint64_t madds = 0;
};

// Token-wise structured apply: row i of the result is rho_{g_i}^{mode} * X_i,
// computed block-by-block. X is n x d row-major; |reps| == n.
template <typename Scalar>
void rep_apply(std::span<const Representation> reps, const Scalar* x, Scalar* y, int n, int d,
               RepApplyMode mode, FlopCounter* counter = nullptr);

// Same token-wise apply for Kronecker representations, using
// (A (x) B) vec(M) = vec(A M B^T) on the 4 x (d/4) reshape of each row.
template <typename Scalar>
void kron_apply(std::span<const KroneckerRep> reps, const Scalar* x, Scalar* y, int n, int d,
                RepApplyMode mode, FlopCounter* counter = nullptr);

}  // namespace gtakit

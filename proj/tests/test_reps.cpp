#include <doctest.h>
#include <Eigen/Dense>

#include <numbers>

#include "gtakit/reps.hpp"
#include "gtakit/selfcheck.hpp"

using namespace gtakit;
using std::numbers::pi;

TEST_CASE("so2 block values") {
  CHECK((so2_block(So2Angle(0), 3.0) - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::Matrix2d quarter;
  quarter << 0, -1, 1, 0;
  CHECK((so2_block(So2Angle(pi / 2), 1.0) - quarter).cwiseAbs().maxCoeff() < 1e-15);
  // Frequency scales the rotation angle.
  CHECK((so2_block(So2Angle(pi), 0.5) - quarter).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("cam block identity and inverse") {
  CHECK((cam_block(Se3Pose()) - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() == 0.0);
  std::mt19937_64 rng(21);
  for (int k = 0; k < 50; ++k) {
    const Se3Pose c = sample_pose(rng);
    const Eigen::Matrix4d inv_dense = cam_block(c).inverse();
    CHECK((cam_block(inverse(c)) - inv_dense).cwiseAbs().maxCoeff() < 1e-10);
    // Closed form [[R^T, -R^T t], [0, 1]].
    Eigen::Matrix4d ref = Eigen::Matrix4d::Identity();
    ref.topLeftCorner<3, 3>() = c.rotation.r.transpose();
    ref.topRightCorner<3, 1>() = -(c.rotation.r.transpose() * c.translation);
    CHECK((cam_block(inverse(c)) - ref).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("wigner degree 1 is the rotation matrix, degree 2 fixes identity") {
  std::mt19937_64 rng(22);
  const So3Rotation r = sample_rotation(rng);
  CHECK((wigner_d(r, 1) - r.r).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((wigner_d(So3Rotation(), 2) - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK_THROWS_AS(wigner_d(r, 3), std::invalid_argument);
}

TEST_CASE("block-diagonal spec dimensions") {
  const RepSpec msn = RepSpec::msn_hard();
  CHECK(msn.total_dim == 96);  // 12*4 + 3*(3+5) + 12 + 12
  int cam = 0, rot = 0, so2 = 0;
  for (const auto& b : msn.blocks) {
    if (b.kind == RepBlockKind::Cam) cam += b.dim;
    if (b.kind == RepBlockKind::Rot) rot += b.dim;
    if (b.kind == RepBlockKind::So2H || b.kind == RepBlockKind::So2W) so2 += b.dim;
  }
  CHECK(cam == 48);
  CHECK(rot == 24);
  CHECK(so2 == 24);

  const RepSpec pad = RepSpec::block_diagonal(1, 0, 0, 0, 1, 7);
  CHECK(pad.total_dim == 7);
  CHECK(pad.blocks.back().kind == RepBlockKind::Trivial);
  CHECK(pad.blocks.back().dim == 3);
}

TEST_CASE("octave frequency ladder") {
  const auto f = octave_frequencies(4);
  REQUIRE(f.size() == 4);
  CHECK(f[0] == 1.0);
  CHECK(f[1] == 0.5);
  CHECK(f[3] == 0.125);
}

TEST_CASE("identity element produces the identity representation") {
  const ProductElement id{};
  CHECK((build_rep(RepSpec::msn_hard(), id).dense() - Eigen::MatrixXd::Identity(96, 96))
            .cwiseAbs()
            .maxCoeff() < 1e-15);
  const KroneckerRep k = build_rep_kronecker(4, id);
  CHECK(k.total_dim() == 64);
  CHECK((k.dense() - Eigen::MatrixXd::Identity(64, 64)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("kronecker dense equals the explicit kron expansion") {
  std::mt19937_64 rng(23);
  const ProductElement g = sample_product(rng);
  const KroneckerRep k = build_rep_kronecker(4, g);
  const int m = static_cast<int>(k.right.rows());
  Eigen::MatrixXd ref(4 * m, 4 * m);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) ref.block(a * m, b * m, m, m) = k.cam(a, b) * k.right;
  CHECK((k.dense() - ref).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("rep_apply single cam token equals a dense matvec") {
  std::mt19937_64 rng(24);
  const RepSpec spec = RepSpec::make({RepBlockSpec::cam()});
  const Representation rep = build_rep(spec, ProductElement{sample_pose(rng), {}, {}});
  const double x[4] = {0.3, -1.2, 0.7, 2.0};
  double y[4];
  rep_apply<double>({&rep, 1}, x, y, 1, 4, RepApplyMode::Plain);
  const Eigen::Vector4d ref = rep.blocks[0] * Eigen::Vector4d(x[0], x[1], x[2], x[3]);
  for (int i = 0; i < 4; ++i) CHECK(y[i] == doctest::Approx(ref(i)).epsilon(1e-12));
}

TEST_CASE("rep_apply inverse then plain is the identity") {
  std::mt19937_64 rng(25);
  const RepSpec spec = RepSpec::msn_hard();
  std::vector<Representation> reps;
  for (int i = 0; i < 3; ++i) reps.push_back(build_rep(spec, sample_product(rng)));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(3 * 96), mid(x.size()), back(x.size());
  for (auto& v : x) v = normal(rng);
  rep_apply<double>({reps.data(), reps.size()}, x.data(), mid.data(), 3, 96,
                    RepApplyMode::Inverse);
  rep_apply<double>({reps.data(), reps.size()}, mid.data(), back.data(), 3, 96,
                    RepApplyMode::Plain);
  for (size_t i = 0; i < x.size(); ++i) CHECK(std::abs(back[i] - x[i]) < 1e-10);
}

TEST_CASE("all-identity reps leave the input unchanged") {
  const RepSpec spec = RepSpec::block_diagonal(1, 1, 1, 1, 2, 24);
  std::vector<Representation> reps{build_rep(spec, ProductElement{}),
                                   build_rep(spec, ProductElement{})};
  std::vector<double> x(2 * 24, 0.0), y(x.size());
  for (size_t i = 0; i < x.size(); ++i) x[i] = 0.01 * static_cast<double>(i) - 0.2;
  rep_apply<double>({reps.data(), reps.size()}, x.data(), y.data(), 2, 24, RepApplyMode::Plain);
  for (size_t i = 0; i < x.size(); ++i) CHECK(std::abs(x[i] - y[i]) < 1e-12);
}

TEST_CASE("transpose of transpose is the original") {
  std::mt19937_64 rng(26);
  const Representation rep = build_rep(RepSpec::msn_hard(), sample_product(rng));
  const Representation twice = rep_transpose(rep_transpose(rep));
  CHECK((rep.dense() - twice.dense()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("rep property suite passes") {
  for (const auto& r : check_reps(7)) {
    INFO(r.name, " max_err ", r.max_err, " tol ", r.tol);
    CHECK(r.pass);
  }
}

#include <doctest.h>

#include <Eigen/Dense>

#include "gtakit/attn.hpp"
#include "gtakit/selfcheck.hpp"

using namespace gtakit;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd randn_mat(int r, int c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  return MatrixXd::NullaryExpr(r, c, [&]() { return normal(rng); });
}

int leaf_of(Graph<double>& g, const MatrixXd& m) {
  Tensor<double> t({static_cast<int>(m.rows()), static_cast<int>(m.cols())});
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) t.data[static_cast<size_t>(i) * m.cols() + j] = m(i, j);
  return g.leaf(std::move(t));
}

MatrixXd mat_of(Graph<double>& g, int id) {
  const auto& t = g.val(id);
  MatrixXd m(t.lead(), t.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) = t.data[static_cast<size_t>(i) * m.cols() + j];
  return m;
}

// Scalar double-loop softmax attention.
MatrixXd vanilla_oracle(const MatrixXd& q, const MatrixXd& k, const MatrixXd& v, double scale) {
  const int n = static_cast<int>(q.rows());
  MatrixXd out(n, v.cols());
  for (int i = 0; i < n; ++i) {
    VectorXd logits(k.rows());
    for (int j = 0; j < k.rows(); ++j) logits(j) = q.row(i).dot(k.row(j)) * scale;
    VectorXd w = (logits.array() - logits.maxCoeff()).exp();
    w /= w.sum();
    out.row(i).setZero();
    for (int j = 0; j < k.rows(); ++j) out.row(i) += w(j) * v.row(j);
  }
  return out;
}

RepListPtr identity_reps(const RepSpec& spec, int n) {
  auto reps = std::make_shared<std::vector<Representation>>();
  for (int i = 0; i < n; ++i) reps->push_back(build_rep(spec, ProductElement{}));
  return reps;
}

RepListPtr random_reps(const RepSpec& spec, int n, std::mt19937_64& rng) {
  auto reps = std::make_shared<std::vector<Representation>>();
  for (int i = 0; i < n; ++i) reps->push_back(build_rep(spec, sample_product(rng)));
  return reps;
}

}  // namespace

TEST_CASE("single-token attention returns V") {
  std::mt19937_64 rng(41);
  Graph<double> g;
  const MatrixXd v = randn_mat(1, 6, rng);
  const int o = vanilla_attention(g, leaf_of(g, randn_mat(1, 6, rng)),
                                  leaf_of(g, randn_mat(1, 6, rng)), leaf_of(g, v), 1.0);
  CHECK((mat_of(g, o) - v).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("identical keys average the values") {
  std::mt19937_64 rng(42);
  Graph<double> g;
  MatrixXd k(4, 3);
  k.rowwise() = randn_mat(1, 3, rng).row(0);
  const MatrixXd v = randn_mat(4, 3, rng);
  const int o =
      vanilla_attention(g, leaf_of(g, randn_mat(2, 3, rng)), leaf_of(g, k), leaf_of(g, v), 1.0);
  const MatrixXd mean = v.colwise().mean();
  for (int i = 0; i < 2; ++i)
    CHECK((mat_of(g, o).row(i) - mean.row(0)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("vanilla attention matches the scalar double loop") {
  std::mt19937_64 rng(43);
  const MatrixXd q = randn_mat(4, 8, rng), k = randn_mat(4, 8, rng), v = randn_mat(4, 8, rng);
  Graph<double> g;
  const int o = vanilla_attention(g, leaf_of(g, q), leaf_of(g, k), leaf_of(g, v), 0.35);
  CHECK((mat_of(g, o) - vanilla_oracle(q, k, v, 0.35)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gta with identity reps reduces to vanilla") {
  std::mt19937_64 rng(44);
  const RepSpec spec = RepSpec::block_diagonal(2, 1, 1, 1, 2, 24);
  const MatrixXd q = randn_mat(5, 24, rng), k = randn_mat(5, 24, rng), v = randn_mat(5, 24, rng);
  Graph<double> g;
  const auto reps = identity_reps(spec, 5);
  const int o = gta_attention(g, leaf_of(g, q), leaf_of(g, k), leaf_of(g, v), reps, reps,
                              GtaOptions{0.2, true, nullptr});
  CHECK((mat_of(g, o) - vanilla_oracle(q, k, v, 0.2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("euclid attention puts the max logit on the matching key") {
  std::mt19937_64 rng(45);
  const MatrixXd q = randn_mat(5, 6, rng);
  Graph<double> g;
  AttnSink<double> sink;
  euclid_attention(g, leaf_of(g, q), leaf_of(g, q), leaf_of(g, randn_mat(5, 6, rng)), 1.0, &sink);
  const auto& w = sink.captured[0];
  for (int i = 0; i < 5; ++i) {
    int argmax = 0;
    for (int j = 1; j < 5; ++j)
      if (w.data[i * 5 + j] > w.data[i * 5 + argmax]) argmax = j;
    CHECK(argmax == i);
  }
}

TEST_CASE("ape with zero embeddings reduces to vanilla") {
  std::mt19937_64 rng(46);
  const int n = 4, d = 12;
  const MatrixXd q = randn_mat(n, d, rng), k = randn_mat(n, d, rng), v = randn_mat(n, d, rng);
  Graph<double> g;
  const int zero = leaf_of(g, MatrixXd::Zero(n, 9));
  const int o = ape_attention(g, leaf_of(g, q), leaf_of(g, k), leaf_of(g, v), zero, zero,
                              leaf_of(g, randn_mat(9, d, rng)), leaf_of(g, randn_mat(9, d, rng)),
                              leaf_of(g, randn_mat(9, d, rng)), 0.3);
  CHECK((mat_of(g, o) - vanilla_oracle(q, k, v, 0.3)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rpe bias with zero biases reduces to vanilla") {
  std::mt19937_64 rng(47);
  const int n = 4, d = 12;
  const MatrixXd q = randn_mat(n, d, rng), k = randn_mat(n, d, rng), v = randn_mat(n, d, rng);
  std::vector<So3Rotation> rots;
  for (int i = 0; i < n; ++i) rots.push_back(sample_rotation(rng));
  Graph<double> g;
  const int zero = leaf_of(g, MatrixXd::Zero(1, 9));
  const int o = rpe_bias_attention(g, leaf_of(g, q), leaf_of(g, k), leaf_of(g, v), zero, zero,
                                   zero, rots, rots, 0.3);
  CHECK((mat_of(g, o) - vanilla_oracle(q, k, v, 0.3)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("identity rpe bias logit contribution is the rotation trace") {
  // With b^Q = b^K = vec(I3), the transformed biases contribute
  // tr(R_i^T R_j) to logit (i, j).
  std::mt19937_64 rng(48);
  VectorXd b(9);
  b << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  for (int trial = 0; trial < 10; ++trial) {
    const So3Rotation ri = sample_rotation(rng), rj = sample_rotation(rng);
    const MatrixXd pi_t = rpe_bias_rep(ri).dense().transpose();
    const MatrixXd pj_inv = rpe_bias_rep(rj).dense().inverse();
    const double dot = (pi_t * b).dot(pj_inv * b);
    CHECK(dot == doctest::Approx((ri.r.transpose() * rj.r).trace()).epsilon(1e-10));
  }
}

TEST_CASE("multi-head with one head equals the single-head op") {
  std::mt19937_64 rng(49);
  const int n = 4, d = 12;
  const MatrixXd q = randn_mat(n, d, rng), k = randn_mat(n, d, rng), v = randn_mat(n, d, rng);
  const MatrixXd wo = randn_mat(d, d, rng);
  Graph<double> g;
  auto head_op = [&](Graph<double>& gg, int qq, int kk, int vv, int) {
    return vanilla_attention(gg, qq, kk, vv, 0.3);
  };
  const int o = multi_head<double>(g, leaf_of(g, q), leaf_of(g, k), leaf_of(g, v), 1,
                                   leaf_of(g, wo), head_op);
  const MatrixXd ref = vanilla_oracle(q, k, v, 0.3) * wo;
  CHECK((mat_of(g, o) - ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("multi-head matches a per-head loop oracle") {
  std::mt19937_64 rng(50);
  const int n = 5, d = 12, heads = 3, hd = d / heads;
  const MatrixXd q = randn_mat(n, d, rng), k = randn_mat(n, d, rng), v = randn_mat(n, d, rng);
  const MatrixXd wo = randn_mat(d, d, rng);
  Graph<double> g;
  auto head_op = [&](Graph<double>& gg, int qq, int kk, int vv, int) {
    return vanilla_attention(gg, qq, kk, vv, 0.5);
  };
  const int o = multi_head<double>(g, leaf_of(g, q), leaf_of(g, k), leaf_of(g, v), heads,
                                   leaf_of(g, wo), head_op);
  MatrixXd cat(n, d);
  for (int h = 0; h < heads; ++h)
    cat.middleCols(h * hd, hd) = vanilla_oracle(q.middleCols(h * hd, hd),
                                                k.middleCols(h * hd, hd),
                                                v.middleCols(h * hd, hd), 0.5);
  CHECK((mat_of(g, o) - cat * wo).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("multi-head rejects indivisible widths") {
  std::mt19937_64 rng(51);
  Graph<double> g;
  const int x = leaf_of(g, randn_mat(2, 10, rng));
  auto head_op = [](Graph<double>& gg, int qq, int kk, int vv, int) {
    return vanilla_attention(gg, qq, kk, vv, 1.0);
  };
  CHECK_THROWS_AS(multi_head<double>(g, x, x, x, 3, x, head_op), std::invalid_argument);
}

TEST_CASE("gta permutation equivariance") {
  // Permuting tokens together with their geometry permutes the output rows.
  std::mt19937_64 rng(52);
  const RepSpec spec = RepSpec::block_diagonal(2, 1, 1, 1, 2, 24);
  const int n = 5, d = 24;
  const MatrixXd q = randn_mat(n, d, rng), k = randn_mat(n, d, rng), v = randn_mat(n, d, rng);
  auto reps = std::make_shared<std::vector<Representation>>();
  std::vector<ProductElement> elems;
  for (int i = 0; i < n; ++i) {
    elems.push_back(sample_product(rng));
    reps->push_back(build_rep(spec, elems.back()));
  }
  Graph<double> g;
  const int o = gta_attention(g, leaf_of(g, q), leaf_of(g, k), leaf_of(g, v), reps, reps,
                              GtaOptions{0.2, true, nullptr});
  const MatrixXd base = mat_of(g, o);

  std::vector<int> perm{3, 0, 4, 1, 2};
  MatrixXd qp(n, d), kp(n, d), vp(n, d);
  auto reps_p = std::make_shared<std::vector<Representation>>();
  for (int i = 0; i < n; ++i) {
    qp.row(i) = q.row(perm[i]);
    kp.row(i) = k.row(perm[i]);
    vp.row(i) = v.row(perm[i]);
    reps_p->push_back(build_rep(spec, elems[perm[i]]));
  }
  Graph<double> g2;
  const int o2 = gta_attention(g2, leaf_of(g2, qp), leaf_of(g2, kp), leaf_of(g2, vp), reps_p,
                               reps_p, GtaOptions{0.2, true, nullptr});
  const MatrixXd permuted = mat_of(g2, o2);
  for (int i = 0; i < n; ++i)
    CHECK((permuted.row(i) - base.row(perm[i])).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("attention property suite passes") {
  for (const auto& r : check_attn(9)) {
    INFO(r.name, " max_err ", r.max_err, " tol ", r.tol);
    CHECK(r.pass);
  }
}

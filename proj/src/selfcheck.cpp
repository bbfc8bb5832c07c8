#include "gtakit/selfcheck.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "gtakit/attn.hpp"
#include "gtakit/model.hpp"
#include "gtakit/optim.hpp"
#include "gtakit/scene.hpp"

namespace gtakit {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd homog(const Se3Pose& p) { return p.homogeneous(); }

double elem_diff(const GroupElement& a, const GroupElement& b) {
  if (a.index() != b.index()) return 1.0;
  if (std::holds_alternative<So2Angle>(a)) {
    const double ta = std::get<So2Angle>(a).theta, tb = std::get<So2Angle>(b).theta;
    return std::max(std::abs(std::cos(ta) - std::cos(tb)), std::abs(std::sin(ta) - std::sin(tb)));
  }
  if (std::holds_alternative<So3Rotation>(a))
    return (std::get<So3Rotation>(a).r - std::get<So3Rotation>(b).r).cwiseAbs().maxCoeff();
  if (std::holds_alternative<Se3Pose>(a))
    return (homog(std::get<Se3Pose>(a)) - homog(std::get<Se3Pose>(b))).cwiseAbs().maxCoeff();
  const auto&pa = std::get<ProductElement>(a), &pb = std::get<ProductElement>(b);
  return std::max({elem_diff(pa.pose, pb.pose), elem_diff(pa.theta_h, pb.theta_h),
                   elem_diff(pa.theta_w, pb.theta_w)});
}

GroupElement identity_like(const GroupElement& g) {
  if (std::holds_alternative<So2Angle>(g)) return So2Angle(0);
  if (std::holds_alternative<So3Rotation>(g)) return So3Rotation();
  if (std::holds_alternative<Se3Pose>(g)) return Se3Pose();
  return ProductElement{};
}

// Small product-group spec of total dimension 24: 2 cam, rot {1,2}, 2
// frequencies per image axis.
RepSpec small_spec() { return RepSpec::block_diagonal(2, 1, 1, 1, 2, 24); }

}  // namespace

Se3Pose sample_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Vector3d t;
  for (int k = 0; k < 3; ++k) t[k] = normal(rng);
  return Se3Pose(sample_rotation(rng), t);
}

ProductElement sample_product(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
  return ProductElement{sample_pose(rng), So2Angle(uni(rng)), So2Angle(uni(rng))};
}

ProductElement sample_rotation_only_product(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
  return ProductElement{Se3Pose(sample_rotation(rng), Eigen::Vector3d::Zero()),
                        So2Angle(uni(rng)), So2Angle(uni(rng))};
}

std::vector<CheckResult> check_groups(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
  std::vector<CheckResult> out;

  auto sample_variant = [&](int variant) -> GroupElement {
    switch (variant) {
      case 0: return So2Angle(uni(rng));
      case 1: return sample_rotation(rng);
      case 2: return sample_pose(rng);
      default: return sample_product(rng);
    }
  };
  const char* names[] = {"so2", "so3", "se3", "product"};

  for (int variant = 0; variant < 4; ++variant) {
    double assoc = 0.0, inv = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const GroupElement a = sample_variant(variant), b = sample_variant(variant),
                         c = sample_variant(variant);
      assoc = std::max(assoc, elem_diff(compose(compose(a, b), c), compose(a, compose(b, c))));
      inv = std::max(inv, elem_diff(compose(a, inverse(a)), identity_like(a)));
    }
    out.push_back({std::string("associativity/") + names[variant], assoc, 1e-12, assoc < 1e-12});
    out.push_back({std::string("inverse_law/") + names[variant], inv, 1e-12, inv < 1e-12});
  }

  {
    // Corner values and monotonicity of the patch-angle assignment.
    const int H = 8, W = 4;
    bool ok = patch_angles(0, 0, H, W).first.theta == 0.0 &&
              patch_angles(0, 0, H, W).second.theta == 0.0;
    const auto br = patch_angles(H - 1, W - 1, H, W);
    ok = ok && std::abs(br.first.theta - 2.0 * std::numbers::pi * (H - 1) / H) < 1e-15 &&
         std::abs(br.second.theta - 2.0 * std::numbers::pi * (W - 1) / W) < 1e-15;
    double prev = -1.0;
    for (int i = 0; i < H; ++i) {
      const double t = patch_angles(i, 0, H, W).first.theta;
      ok = ok && t > prev;
      prev = t;
    }
    out.push_back({"patch_angles/corners_monotone", ok ? 0.0 : 1.0, 0.5, ok});
  }

  {
    // Monte-Carlo uniformity: the first column of a Haar-uniform rotation
    // is uniform on the sphere, so its mean is near zero.
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    const int n = 100000;
    for (int k = 0; k < n; ++k) mean += sample_rotation(rng).r.col(0);
    mean /= n;
    const double err = mean.cwiseAbs().maxCoeff();
    out.push_back({"sample_rotation/uniform_mean", err, 0.02, err < 0.02});
  }
  return out;
}

std::vector<CheckResult> check_reps(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
  std::vector<CheckResult> out;
  const int pairs = 1000;

  {
    double err = 0.0;
    const auto freqs = octave_frequencies(5);
    for (int k = 0; k < pairs; ++k) {
      const So2Angle a(uni(rng)), b(uni(rng));
      for (double f : freqs)
        err = std::max(err, (so2_block(a, f) * so2_block(b, f) - so2_block(compose(a, b), f))
                                .cwiseAbs()
                                .maxCoeff());
    }
    out.push_back({"homomorphism/so2", err, 1e-9, err < 1e-9});
  }
  {
    double err = 0.0;
    for (int k = 0; k < pairs; ++k) {
      const Se3Pose a = sample_pose(rng), b = sample_pose(rng);
      err = std::max(err,
                     (cam_block(a) * cam_block(b) - cam_block(compose(a, b))).cwiseAbs().maxCoeff());
    }
    out.push_back({"homomorphism/cam", err, 1e-9, err < 1e-9});
  }
  for (int l = 1; l <= 2; ++l) {
    double err = 0.0, ortho = 0.0, det = 0.0;
    for (int k = 0; k < pairs; ++k) {
      const So3Rotation a = sample_rotation(rng), b = sample_rotation(rng);
      const MatrixXd da = wigner_d(a, l);
      err = std::max(err, (da * wigner_d(b, l) - wigner_d(compose(a, b), l)).cwiseAbs().maxCoeff());
      ortho = std::max(ortho, (da * da.transpose() - MatrixXd::Identity(2 * l + 1, 2 * l + 1))
                                  .cwiseAbs()
                                  .maxCoeff());
      det = std::max(det, std::abs(da.determinant() - 1.0));
    }
    out.push_back({"homomorphism/wigner_l" + std::to_string(l), err, 1e-9, err < 1e-9});
    out.push_back({"orthogonality/wigner_l" + std::to_string(l), std::max(ortho, det), 1e-9,
                   std::max(ortho, det) < 1e-9});
  }
  {
    double ortho = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Eigen::Matrix2d m = so2_block(So2Angle(uni(rng)), 0.5);
      ortho = std::max(ortho, (m * m.transpose() - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff());
      ortho = std::max(ortho, std::abs(m.determinant() - 1.0));
    }
    out.push_back({"orthogonality/so2", ortho, 1e-9, ortho < 1e-9});
  }
  {
    const RepSpec spec = RepSpec::msn_hard();
    double err = 0.0;
    for (int k = 0; k < pairs; ++k) {
      const ProductElement a = sample_product(rng), b = sample_product(rng);
      err = std::max(err, (build_rep(spec, a).dense() * build_rep(spec, b).dense() -
                           build_rep(spec, compose(a, b)).dense())
                              .cwiseAbs()
                              .maxCoeff());
    }
    out.push_back({"homomorphism/build_rep_msn96", err, 1e-9, err < 1e-9});
  }
  {
    double err = 0.0;
    for (int k = 0; k < pairs; ++k) {
      const ProductElement a = sample_product(rng), b = sample_product(rng);
      err = std::max(err, (build_rep_kronecker(4, a).dense() * build_rep_kronecker(4, b).dense() -
                           build_rep_kronecker(4, compose(a, b)).dense())
                              .cwiseAbs()
                              .maxCoeff());
    }
    out.push_back({"homomorphism/kronecker64", err, 1e-9, err < 1e-9});
  }
  {
    // Structured apply against the dense materialized matrix, all modes.
    const RepSpec spec = RepSpec::msn_hard();
    std::normal_distribution<double> normal(0.0, 1.0);
    double err = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 1 + static_cast<int>(rng() % 8), d = spec.total_dim;
      std::vector<Representation> reps;
      for (int i = 0; i < n; ++i) reps.push_back(build_rep(spec, sample_product(rng)));
      MatrixXd x(n, d);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = normal(rng);
      for (RepApplyMode mode : {RepApplyMode::Plain, RepApplyMode::Transpose,
                                RepApplyMode::Inverse, RepApplyMode::InverseTranspose}) {
        std::vector<double> y(static_cast<size_t>(n) * d);
        std::vector<double> xr(x.data(), x.data() + n * d);
        // Eigen default storage is column-major; copy row-major explicitly.
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < d; ++j) xr[static_cast<size_t>(i) * d + j] = x(i, j);
        rep_apply<double>({reps.data(), reps.size()}, xr.data(), y.data(), n, d, mode);
        for (int i = 0; i < n; ++i) {
          MatrixXd dense = reps[i].dense();
          if (mode == RepApplyMode::Transpose) dense.transposeInPlace();
          if (mode == RepApplyMode::Inverse) dense = dense.inverse().eval();
          if (mode == RepApplyMode::InverseTranspose) dense = dense.inverse().transpose().eval();
          const VectorXd ref = dense * x.row(i).transpose();
          for (int j = 0; j < d; ++j)
            err = std::max(err, std::abs(ref(j) - y[static_cast<size_t>(i) * d + j]));
        }
      }
    }
    out.push_back({"rep_apply/dense_equivalence", err, 1e-10, err < 1e-10});
  }
  {
    // Multiply-add counter doubles when d doubles at fixed block sizes.
    auto count_for = [&](int s) {
      const RepSpec spec = RepSpec::block_diagonal(s, s / 4, 1, 1, s, 8 * s + 2 * s + 4 * s);
      const int n = 4, d = spec.total_dim;
      std::vector<Representation> reps;
      for (int i = 0; i < n; ++i) reps.push_back(build_rep(spec, sample_product(rng)));
      std::vector<double> x(static_cast<size_t>(n) * d, 0.5), y(x.size());
      FlopCounter counter;
      rep_apply<double>({reps.data(), reps.size()}, x.data(), y.data(), n, d, RepApplyMode::Plain,
                        &counter);
      return counter.madds;
    };
    const double ratio = static_cast<double>(count_for(16)) / static_cast<double>(count_for(8));
    const double err = std::abs(ratio - 2.0);
    out.push_back({"rep_apply/flops_linear_in_d", err, 0.1, ratio > 1.9 && ratio < 2.1});
  }
  return out;
}

namespace {

struct AttnInstance {
  int n = 0, d = 0;
  MatrixXd q, k, v;
  std::vector<ProductElement> elems;
};

AttnInstance random_instance(std::mt19937_64& rng, int n, int d, bool rotation_only) {
  std::normal_distribution<double> normal(0.0, 1.0);
  AttnInstance inst;
  inst.n = n;
  inst.d = d;
  inst.q = MatrixXd::NullaryExpr(n, d, [&]() { return normal(rng); });
  inst.k = MatrixXd::NullaryExpr(n, d, [&]() { return normal(rng); });
  inst.v = MatrixXd::NullaryExpr(n, d, [&]() { return normal(rng); });
  for (int i = 0; i < n; ++i)
    inst.elems.push_back(rotation_only ? sample_rotation_only_product(rng) : sample_product(rng));
  return inst;
}

int graph_leaf(Graph<double>& g, const MatrixXd& m) {
  Tensor<double> t({static_cast<int>(m.rows()), static_cast<int>(m.cols())});
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) t.data[static_cast<size_t>(i) * m.cols() + j] = m(i, j);
  return g.leaf(std::move(t));
}

MatrixXd node_matrix(Graph<double>& g, int id) {
  const auto& t = g.val(id);
  MatrixXd m(t.lead(), t.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) = t.data[static_cast<size_t>(i) * m.cols() + j];
  return m;
}

// Definitional double-loop GTA: per-pair relative representations built from
// the group product, dense matrices, scalar softmax.
MatrixXd gta_reference(const AttnInstance& inst,
                       const std::function<MatrixXd(const ProductElement&)>& dense_of,
                       double scale) {
  const int n = inst.n, d = inst.d;
  MatrixXd out(n, d);
  for (int i = 0; i < n; ++i) {
    std::vector<MatrixXd> rel(n);
    VectorXd logits(n);
    for (int j = 0; j < n; ++j) {
      rel[j] = dense_of(compose(inst.elems[i], inverse(inst.elems[j])));
      logits(j) = inst.q.row(i).dot((rel[j] * inst.k.row(j).transpose()).transpose()) * scale;
    }
    const double mx = logits.maxCoeff();
    VectorXd w = (logits.array() - mx).exp();
    w /= w.sum();
    VectorXd acc = VectorXd::Zero(d);
    for (int j = 0; j < n; ++j) acc += w(j) * (rel[j] * inst.v.row(j).transpose());
    out.row(i) = acc.transpose();
  }
  return out;
}

// Double-loop Euclidean GTA: features moved to the shared frame by the
// per-token inverse, squared-distance logits, output moved back.
MatrixXd gta_euclid_reference(const AttnInstance& inst,
                              const std::function<MatrixXd(const ProductElement&)>& dense_of,
                              double scale) {
  const int n = inst.n, d = inst.d;
  std::vector<MatrixXd> rho(n), rho_inv(n);
  for (int i = 0; i < n; ++i) {
    rho[i] = dense_of(inst.elems[i]);
    rho_inv[i] = dense_of(inverse(inst.elems[i]));
  }
  MatrixXd out(n, d);
  for (int i = 0; i < n; ++i) {
    const VectorXd qi = rho_inv[i] * inst.q.row(i).transpose();
    VectorXd logits(n);
    for (int j = 0; j < n; ++j)
      logits(j) = -(qi - rho_inv[j] * inst.k.row(j).transpose()).squaredNorm() * scale;
    const double mx = logits.maxCoeff();
    VectorXd w = (logits.array() - mx).exp();
    w /= w.sum();
    VectorXd acc = VectorXd::Zero(d);
    for (int j = 0; j < n; ++j) acc += w(j) * (rho_inv[j] * inst.v.row(j).transpose());
    out.row(i) = (rho[i] * acc).transpose();
  }
  return out;
}

}  // namespace

std::vector<CheckResult> check_attn(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<CheckResult> out;

  const RepSpec spec24 = small_spec();
  const RepSpec spec96 = RepSpec::msn_hard();

  auto reps_of = [](const RepSpec& spec, const std::vector<ProductElement>& elems) {
    auto reps = std::make_shared<std::vector<Representation>>();
    for (const auto& e : elems) reps->push_back(build_rep(spec, e));
    return RepListPtr(reps);
  };

  // Efficient form vs the definitional double-loop form.
  for (const RepSpec* spec : {&spec24, &spec96}) {
    double err = 0.0, row_err = 0.0;
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec->total_dim));
    for (int inst_id = 0; inst_id < 100; ++inst_id) {
      const int n = 2 + static_cast<int>(rng() % 7);
      AttnInstance inst = random_instance(rng, n, spec->total_dim, false);
      Graph<double> g;
      AttnSink<double> sink;
      const int o = gta_attention(g, graph_leaf(g, inst.q), graph_leaf(g, inst.k),
                                  graph_leaf(g, inst.v), reps_of(*spec, inst.elems),
                                  reps_of(*spec, inst.elems), GtaOptions{scale, true, nullptr},
                                  &sink);
      const MatrixXd ref = gta_reference(
          inst, [&](const ProductElement& e) { return build_rep(*spec, e).dense(); }, scale);
      err = std::max(err, (node_matrix(g, o) - ref).cwiseAbs().maxCoeff());
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += sink.captured[0].data[static_cast<size_t>(i) * n + j];
        row_err = std::max(row_err, std::abs(s - 1.0));
      }
    }
    const std::string d = std::to_string(spec->total_dim);
    out.push_back({"gta/pairwise_efficient_d" + d, err, 1e-10, err < 1e-10});
    out.push_back({"gta/rows_sum_one_d" + d, row_err, 1e-6, row_err < 1e-6});
  }

  {
    // Kronecker variant (d = 64) against its dense double-loop form.
    double err = 0.0;
    const double scale = 1.0 / 8.0;
    for (int inst_id = 0; inst_id < 100; ++inst_id) {
      const int n = 2 + static_cast<int>(rng() % 7);
      AttnInstance inst = random_instance(rng, n, 64, false);
      auto kreps = std::make_shared<std::vector<KroneckerRep>>();
      for (const auto& e : inst.elems) kreps->push_back(build_rep_kronecker(4, e));
      Graph<double> g;
      const int o = gta_kronecker_attention(g, graph_leaf(g, inst.q), graph_leaf(g, inst.k),
                                            graph_leaf(g, inst.v), kreps, kreps,
                                            GtaOptions{scale, true, nullptr});
      const MatrixXd ref = gta_reference(
          inst, [&](const ProductElement& e) { return build_rep_kronecker(4, e).dense(); }, scale);
      err = std::max(err, (node_matrix(g, o) - ref).cwiseAbs().maxCoeff());
    }
    out.push_back({"gta/kronecker_pairwise_efficient_d64", err, 1e-10, err < 1e-10});
  }

  {
    // Euclid variant vs double loop (rotation-only elements).
    double err = 0.0;
    const double scale = 1.0;
    for (int inst_id = 0; inst_id < 100; ++inst_id) {
      const int n = 2 + static_cast<int>(rng() % 7);
      AttnInstance inst = random_instance(rng, n, spec24.total_dim, true);
      Graph<double> g;
      const int o = gta_euclid_attention(g, graph_leaf(g, inst.q), graph_leaf(g, inst.k),
                                         graph_leaf(g, inst.v), reps_of(spec24, inst.elems),
                                         reps_of(spec24, inst.elems),
                                         GtaOptions{scale, true, nullptr});
      const MatrixXd ref = gta_euclid_reference(
          inst, [&](const ProductElement& e) { return build_rep(spec24, e).dense(); }, scale);
      err = std::max(err, (node_matrix(g, o) - ref).cwiseAbs().maxCoeff());
    }
    out.push_back({"gta/euclid_pairwise_efficient_d24", err, 1e-10, err < 1e-10});
  }

  {
    // Reference-frame invariance under a common right factor h. GTA is
    // invariant for any h; the Euclidean form needs the orthogonal
    // (rotation-only) subgroup since the homogeneous action with a nonzero
    // translation is not an isometry of feature space.
    double gta_err = 0.0, euclid_err = 0.0, ape_min_change = 1e9;
    MatrixXd embed = MatrixXd::NullaryExpr(9, spec24.total_dim, [&]() { return normal(rng); });
    MatrixXd wq = MatrixXd::NullaryExpr(spec24.total_dim, spec24.total_dim,
                                        [&]() { return normal(rng) * 0.1; });
    MatrixXd wk = wq.transpose().eval(), wv = wq * 0.5;
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec24.total_dim));
    for (int inst_id = 0; inst_id < 20; ++inst_id) {
      const int n = 2 + static_cast<int>(rng() % 7);
      AttnInstance inst = random_instance(rng, n, spec24.total_dim, false);
      const ProductElement h_any = sample_product(rng);
      const ProductElement h_rot = sample_rotation_only_product(rng);

      auto shifted = [&](const ProductElement& h) {
        AttnInstance s = inst;
        for (auto& e : s.elems) e = compose(e, h);
        return s;
      };

      auto run_gta = [&](const AttnInstance& in) {
        Graph<double> g;
        const int o = gta_attention(g, graph_leaf(g, in.q), graph_leaf(g, in.k),
                                    graph_leaf(g, in.v), reps_of(spec24, in.elems),
                                    reps_of(spec24, in.elems), GtaOptions{scale, true, nullptr});
        return node_matrix(g, o);
      };
      gta_err = std::max(gta_err,
                         (run_gta(inst) - run_gta(shifted(h_any))).cwiseAbs().maxCoeff());

      AttnInstance rot_inst = random_instance(rng, n, spec24.total_dim, true);
      auto run_euclid = [&](const AttnInstance& in) {
        Graph<double> g;
        const int o = gta_euclid_attention(g, graph_leaf(g, in.q), graph_leaf(g, in.k),
                                           graph_leaf(g, in.v), reps_of(spec24, in.elems),
                                           reps_of(spec24, in.elems),
                                           GtaOptions{1.0, true, nullptr});
        return node_matrix(g, o);
      };
      AttnInstance rot_shifted = rot_inst;
      for (auto& e : rot_shifted.elems) e = compose(e, h_rot);
      euclid_err = std::max(euclid_err,
                            (run_euclid(rot_inst) - run_euclid(rot_shifted)).cwiseAbs().maxCoeff());

      auto run_ape = [&](const AttnInstance& in) {
        MatrixXd e_mat(in.n, spec24.total_dim);
        for (int i = 0; i < in.n; ++i) {
          Eigen::Matrix<double, 1, 9> flat;
          const auto& r = in.elems[i].pose.rotation.r;
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) flat(0, a * 3 + b) = r(a, b);
          e_mat.row(i) = flat * embed;
        }
        Graph<double> g;
        const int o = ape_attention(g, graph_leaf(g, in.q), graph_leaf(g, in.k),
                                    graph_leaf(g, in.v), graph_leaf(g, e_mat),
                                    graph_leaf(g, e_mat), graph_leaf(g, wq), graph_leaf(g, wk),
                                    graph_leaf(g, wv), scale);
        return node_matrix(g, o);
      };
      ape_min_change = std::min(
          ape_min_change, (run_ape(inst) - run_ape(shifted(h_any))).cwiseAbs().maxCoeff());
    }
    out.push_back({"invariance/gta", gta_err, 1e-8, gta_err < 1e-8});
    out.push_back({"invariance/gta_euclid", euclid_err, 1e-8, euclid_err < 1e-8});
    out.push_back({"invariance/ape_breaks", ape_min_change, 1e-3, ape_min_change > 1e-3});
  }

  {
    // Orthogonal-only specs: transpose and inverse apply identically.
    const RepSpec spec = RepSpec::so3_blocks(12);
    const int n = 4, d = 12;
    std::vector<Representation> reps;
    for (int i = 0; i < n; ++i)
      reps.push_back(build_rep(spec, ProductElement{Se3Pose(sample_rotation(rng),
                                                            Eigen::Vector3d::Zero()),
                                                    So2Angle(0), So2Angle(0)}));
    std::vector<double> x(static_cast<size_t>(n) * d), yt(x.size()), yi(x.size());
    for (auto& v : x) v = normal(rng);
    rep_apply<double>({reps.data(), reps.size()}, x.data(), yt.data(), n, d,
                      RepApplyMode::Transpose);
    rep_apply<double>({reps.data(), reps.size()}, x.data(), yi.data(), n, d,
                      RepApplyMode::Inverse);
    bool exact = yt == yi;
    out.push_back({"orthogonal/transpose_equals_inverse", exact ? 0.0 : 1.0, 0.5, exact});
  }
  return out;
}

std::vector<CheckResult> check_grads(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<CheckResult> out;

  auto randn = [&](std::vector<int> shape) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.data) v = normal(rng);
    return t;
  };

  // Isolated ops, each reduced to a scalar through mse against a random
  // target so every output element receives a distinct gradient.
  struct OpCase {
    std::string name;
    std::function<int(Graph<double>&, const std::vector<int>&)> build;
    std::vector<Tensor<double>> params;
  };
  const RepSpec spec8 = RepSpec::block_diagonal(1, 0, 1, 0, 1, 8);
  auto reps8 = std::make_shared<std::vector<Representation>>();
  for (int i = 0; i < 2; ++i) reps8->push_back(build_rep(spec8, sample_product(rng)));

  std::vector<OpCase> cases;
  cases.push_back({"matmul",
                   [](Graph<double>& g, const std::vector<int>& p) {
                     return g.matmul(p[0], p[1]);
                   },
                   {randn({3, 4}), randn({4, 5})}});
  cases.push_back({"add_mul",
                   [](Graph<double>& g, const std::vector<int>& p) {
                     return g.mul(g.add(p[0], p[1]), p[0]);
                   },
                   {randn({3, 4}), randn({3, 4})}});
  cases.push_back({"gelu",
                   [](Graph<double>& g, const std::vector<int>& p) { return g.gelu(p[0]); },
                   {randn({2, 6})}});
  cases.push_back({"relu",
                   [](Graph<double>& g, const std::vector<int>& p) { return g.relu(p[0]); },
                   {randn({2, 6})}});
  cases.push_back({"softmax",
                   [](Graph<double>& g, const std::vector<int>& p) {
                     return g.softmax_lastdim(p[0]);
                   },
                   {randn({3, 5})}});
  cases.push_back({"layer_norm",
                   [](Graph<double>& g, const std::vector<int>& p) {
                     return g.layer_norm(p[0], p[1], p[2]);
                   },
                   {randn({3, 6}), randn({1, 6}), randn({1, 6})}});
  cases.push_back({"euclid_logits",
                   [](Graph<double>& g, const std::vector<int>& p) {
                     return g.euclid_logits(p[0], p[1]);
                   },
                   {randn({3, 4}), randn({2, 4})}});
  cases.push_back({"concat_slice",
                   [](Graph<double>& g, const std::vector<int>& p) {
                     return g.slice_lastdim(g.concat_lastdim(p[0], p[1]), 2, 5);
                   },
                   {randn({3, 4}), randn({3, 4})}});
  cases.push_back({"rep_apply_plain",
                   [reps8](Graph<double>& g, const std::vector<int>& p) {
                     return g.rep_apply_node(reps8, p[0], RepApplyMode::Plain);
                   },
                   {randn({2, 8})}});
  cases.push_back({"rep_apply_transpose",
                   [reps8](Graph<double>& g, const std::vector<int>& p) {
                     return g.rep_apply_node(reps8, p[0], RepApplyMode::Transpose);
                   },
                   {randn({2, 8})}});
  cases.push_back({"rep_apply_inverse",
                   [reps8](Graph<double>& g, const std::vector<int>& p) {
                     return g.rep_apply_node(reps8, p[0], RepApplyMode::Inverse);
                   },
                   {randn({2, 8})}});

  double op_err = 0.0;
  for (auto& c : cases) {
    std::vector<Tensor<double>*> params;
    for (auto& p : c.params) params.push_back(&p);
    Tensor<double> target;
    auto closure = [&](std::vector<Tensor<double>>* grads) {
      Graph<double> g;
      std::vector<int> ids;
      for (auto* p : params) ids.push_back(g.param(p));
      const int o = c.build(g, ids);
      if (target.data.empty()) {
        target = Tensor<double>(g.val(o).shape);
        std::mt19937_64 trng(seed ^ 0x7a6ull);
        std::normal_distribution<double> tn(0.0, 1.0);
        for (auto& v : target.data) v = tn(trng);
      }
      const int l = g.mse(o, g.leaf(target));
      const double loss = g.val(l).data[0];
      if (grads) {
        g.backward(l);
        grads->clear();
        for (int id : ids) grads->push_back(g.grad(id));
      }
      return loss;
    };
    const auto report = gradient_check(params, closure, 1e-6);
    op_err = std::max(op_err, report.max_rel_err);
  }
  out.push_back({"grads/isolated_ops", op_err, 1e-6, op_err < 1e-6});

  {
    // One GTA attention block plus a feedforward.
    const RepSpec spec = small_spec();
    const int n = 3, d = spec.total_dim;
    auto reps = std::make_shared<std::vector<Representation>>();
    for (int i = 0; i < n; ++i) reps->push_back(build_rep(spec, sample_product(rng)));
    Tensor<double> x = randn({n, d});
    for (auto& v : x.data) v *= 0.5;
    std::vector<Tensor<double>> ps{randn({d, d}), randn({d, d}), randn({d, d}), randn({d, d}),
                                   randn({d, 16}), randn({16, d})};
    for (auto& p : ps)
      for (auto& v : p.data) v *= 0.2;
    std::vector<Tensor<double>*> params;
    for (auto& p : ps) params.push_back(&p);
    Tensor<double> target = randn({n, d});
    auto closure = [&](std::vector<Tensor<double>>* grads) {
      Graph<double> g;
      std::vector<int> ids;
      for (auto* p : params) ids.push_back(g.param(p));
      const int xin = g.leaf(x);
      const int q = g.matmul(xin, ids[0]), k = g.matmul(xin, ids[1]), v = g.matmul(xin, ids[2]);
      const int attn = gta_attention(g, q, k, v, reps, reps,
                                     GtaOptions{1.0 / std::sqrt(static_cast<double>(d)), true,
                                                nullptr});
      int o = g.matmul(attn, ids[3]);
      o = g.matmul(g.gelu(g.matmul(o, ids[4])), ids[5]);
      const int l = g.mse(o, g.leaf(target));
      const double loss = g.val(l).data[0];
      if (grads) {
        g.backward(l);
        grads->clear();
        for (int id : ids) grads->push_back(g.grad(id));
      }
      return loss;
    };
    const auto report = gradient_check(params, closure, 1e-5);
    out.push_back({"grads/gta_block", report.max_rel_err, 1e-5, report.pass});
  }

  {
    // Full tiny model, d = 24, low-resolution scene to keep the parameter
    // count tractable for finite differences.
    ModelConfig mc;
    mc.token_dim = 24;
    mc.mlp_hidden = 12;
    mc.ff_hidden = 16;
    mc.variant = Variant::Gta;
    mc.resolution = 8;
    mc.seed = seed;
    NvsModel<double> model(mc);
    const Texture tex = make_texture(seed);
    Intrinsics K;
    K.resolution = 8;
    const SceneSample scene = make_scene(tex, seed + 1, K);
    auto params = model.parameters();
    auto closure = [&](std::vector<Tensor<double>>* grads) {
      Graph<double> g;
      auto b = model.bind(g);
      const int l = model.loss(g, b, scene);
      const double loss = g.val(l).data[0];
      if (grads) {
        g.backward(l);
        grads->clear();
        model.accumulate_grads(g, b, *grads);
      }
      return loss;
    };
    const auto report = gradient_check(params, closure, 1e-4);
    out.push_back({"grads/full_tiny_model_d24", report.max_rel_err, 1e-4, report.pass});
  }
  return out;
}

std::vector<CheckResult> run_checks(const std::string& suite, std::uint64_t seed) {
  std::vector<CheckResult> out;
  auto append = [&](std::vector<CheckResult> v) {
    out.insert(out.end(), v.begin(), v.end());
  };
  if (suite == "groups" || suite == "all") append(check_groups(seed));
  if (suite == "reps" || suite == "all") append(check_reps(seed));
  if (suite == "attn" || suite == "all") append(check_attn(seed));
  if (suite == "grads" || suite == "all") append(check_grads(seed));
  if (out.empty()) throw std::invalid_argument("unknown check suite: " + suite);
  return out;
}

}  // namespace gtakit

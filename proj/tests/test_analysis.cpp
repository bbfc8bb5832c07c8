#include <doctest.h>

#include <algorithm>
#include <random>

#include "gtakit/analysis.hpp"

using namespace gtakit;

namespace {

Tensor<double> attn_from(const std::vector<std::vector<double>>& rows) {
  const int n = static_cast<int>(rows.size()), m = static_cast<int>(rows[0].size());
  Tensor<double> t({n, m});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) t.data[static_cast<size_t>(i) * m + j] = rows[i][j];
  return t;
}

// Brute-force precision/recall sweep, scalar loops only.
double brute_force_auc(const std::vector<double>& attn, const MaskSet& masks) {
  std::vector<double> thresholds(attn.begin(), attn.end());
  thresholds.push_back(0.0);
  thresholds.push_back(1.0);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  double wsum = 0.0;
  for (double w : masks.weights) wsum += w;

  std::vector<double> precision, recall;
  for (double t : thresholds) {
    double p = 0.0, r = 0.0;
    bool p_defined = false;
    for (size_t o = 0; o < masks.masks.size(); ++o) {
      int tp = 0, npred = 0, pos = 0;
      for (size_t i = 0; i < attn.size(); ++i) {
        const bool pred = attn[i] > t;
        npred += pred;
        pos += masks.masks[o][i];
        tp += pred && masks.masks[o][i];
      }
      const double w = masks.weights[o] / wsum;
      if (npred > 0) {
        p += w * tp / npred;
        p_defined = true;
      }
      r += w * tp / pos;
    }
    precision.push_back(p_defined ? p : -1.0);
    recall.push_back(r);
  }
  for (size_t i = 0; i < precision.size(); ++i)  // anchor empty-prediction points
    if (precision[i] < 0.0) {
      size_t j = i;
      while (j < precision.size() && precision[j] < 0.0) ++j;
      const double fill = j < precision.size() ? precision[j] : 1.0;
      for (size_t k = i; k < j; ++k) precision[k] = fill;
    }
  double auc = 0.0;
  for (size_t i = 1; i < recall.size(); ++i)
    auc += 0.5 * (precision[i] + precision[i - 1]) * (recall[i] - recall[i - 1]);
  return auc;
}

}  // namespace

TEST_CASE("uniform attention gives a constant view-to-view map") {
  const int nv = 3, tpv = 4, n = nv * tpv;
  Tensor<double> attn({n, n});
  for (auto& v : attn.data) v = 1.0 / n;
  const Eigen::MatrixXd m = view_to_view(attn, nv, nv, tpv);
  for (int i = 0; i < nv; ++i)
    for (int j = 0; j < nv; ++j) CHECK(m(i, j) == doctest::Approx(1.0 / n));
}

TEST_CASE("block-diagonal attention gives a diagonal view-to-view map") {
  const int nv = 3, tpv = 2, n = nv * tpv;
  Tensor<double> attn({n, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      attn.data[static_cast<size_t>(i) * n + j] = (i / tpv == j / tpv) ? 1.0 / tpv : 0.0;
  const Eigen::MatrixXd m = view_to_view(attn, nv, nv, tpv);
  for (int i = 0; i < nv; ++i)
    for (int j = 0; j < nv; ++j) {
      if (i == j) CHECK(m(i, j) == doctest::Approx(1.0 / tpv));
      else CHECK(m(i, j) == 0.0);
    }
}

TEST_CASE("view-to-view matches a scalar double-loop oracle") {
  std::mt19937_64 rng(81);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int nvq = 2, nvk = 3, tpv = 4;
  Tensor<double> attn({nvq * tpv, nvk * tpv});
  for (auto& v : attn.data) v = uni(rng);
  const Eigen::MatrixXd m = view_to_view(attn, nvq, nvk, tpv);
  for (int vi = 0; vi < nvq; ++vi)
    for (int vj = 0; vj < nvk; ++vj) {
      double acc = 0.0;
      for (int a = 0; a < tpv; ++a)
        for (int b = 0; b < tpv; ++b)
          acc += attn.data[static_cast<size_t>(vi * tpv + a) * (nvk * tpv) + vj * tpv + b];
      CHECK(m(vi, vj) == doctest::Approx(acc / (tpv * tpv)));
    }
}

TEST_CASE("summary rows sum to 1 over tokens_per_view for stochastic attention") {
  std::mt19937_64 rng(82);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int nv = 3, tpv = 4, n = nv * tpv;
  Tensor<double> attn({n, n});
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += (attn.data[static_cast<size_t>(i) * n + j] = uni(rng));
    for (int j = 0; j < n; ++j) attn.data[static_cast<size_t>(i) * n + j] /= s;
  }
  const Eigen::MatrixXd m = view_to_view(attn, nv, nv, tpv);
  for (int i = 0; i < nv; ++i) CHECK(m.row(i).sum() == doctest::Approx(1.0 / tpv));
}

TEST_CASE("attention proportional to a single mask scores auc 1") {
  MaskSet masks;
  masks.n_views = 2;
  masks.tokens_per_view = 4;
  masks.masks = {{1, 1, 0, 0, 0, 1, 0, 0}};
  masks.weights = {1.0};
  const std::vector<double> attn{0.9, 0.8, 0.0, 0.0, 0.0, 0.7, 0.0, 0.0};
  CHECK(pr_auc(attn, masks).auc == doctest::Approx(1.0));
}

TEST_CASE("uniform attention scores auc near mask coverage") {
  MaskSet masks;
  masks.n_views = 2;
  masks.tokens_per_view = 8;
  std::vector<int> mask(16, 0);
  for (int i = 0; i < 6; ++i) mask[i * 2] = 1;  // coverage 6/16
  masks.masks = {mask};
  masks.weights = {1.0};
  const std::vector<double> attn(16, 0.3);
  CHECK(pr_auc(attn, masks).auc == doctest::Approx(6.0 / 16.0).epsilon(0.02));
}

TEST_CASE("hand-built 2-view example matches the brute-force sweep") {
  MaskSet masks;
  masks.n_views = 2;
  masks.tokens_per_view = 2;
  masks.masks = {{1, 1, 0, 0}};
  masks.weights = {1.0};
  const std::vector<double> attn{0.4, 0.3, 0.2, 0.1};
  const PrCurve c = pr_auc(attn, masks);
  CHECK(c.auc == doctest::Approx(brute_force_auc(attn, masks)).epsilon(1e-12));
  // With attention perfectly ranking the mask, precision is 1 everywhere.
  CHECK(c.auc == doctest::Approx(1.0));
  // Recall is non-increasing in threshold order of the stored curve.
  for (size_t i = 1; i < c.recall.size(); ++i) CHECK(c.recall[i] >= c.recall[i - 1]);
}

TEST_CASE("auc matches brute force on random multi-object instances") {
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    MaskSet masks;
    masks.n_views = 2;
    masks.tokens_per_view = 5;
    const int n = 10;
    for (int o = 0; o < 2; ++o) {
      std::vector<int> m(n, 0);
      int pos = 0;
      while (pos == 0)
        for (int i = 0; i < n; ++i) pos += (m[i] = rng() % 3 == 0);
      masks.masks.push_back(m);
      masks.weights.push_back(uni(rng) + 0.1);
    }
    std::vector<double> attn(n);
    for (auto& v : attn) v = uni(rng);
    CHECK(pr_auc(attn, masks).auc ==
          doctest::Approx(brute_force_auc(attn, masks)).epsilon(1e-10));
  }
}

TEST_CASE("auc is invariant under monotone rescaling of the attention") {
  std::mt19937_64 rng(84);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  MaskSet masks;
  masks.n_views = 1;
  masks.tokens_per_view = 12;
  masks.masks = {{1, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 0}};
  masks.weights = {1.0};
  std::vector<double> attn(12), scaled(12);
  for (int i = 0; i < 12; ++i) {
    attn[i] = uni(rng);
    scaled[i] = std::min(1.0, 0.2 + 0.5 * attn[i]);  // monotone map into [0,1]
  }
  CHECK(pr_auc(attn, masks).auc == doctest::Approx(pr_auc(scaled, masks).auc).epsilon(1e-12));
}

TEST_CASE("empty masks are rejected") {
  MaskSet masks;
  masks.n_views = 1;
  masks.tokens_per_view = 4;
  CHECK_THROWS(pr_auc({0.1, 0.2, 0.3, 0.4}, masks));
  masks.masks = {{0, 0, 0, 0}};
  masks.weights = {1.0};
  CHECK_THROWS(pr_auc({0.1, 0.2, 0.3, 0.4}, masks));
}

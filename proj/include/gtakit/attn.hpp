#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "gtakit/tensor.hpp"

namespace gtakit {

using RepListPtr = std::shared_ptr<const std::vector<Representation>>;
using KronListPtr = std::shared_ptr<const std::vector<KroneckerRep>>;

// Attention weights captured during a forward pass, with the token ->
// (view, patch) assignment needed by the analysis module.
struct AttnRecord {
  struct Entry {
    int layer = 0;
    int head = 0;
    Tensor<double> weights;  // n_q x n_k, rows sum to 1
  };
  std::vector<Entry> entries;
  std::vector<std::pair<int, int>> token_map;  // key-token index -> (view, patch)
};

// Forward-pass sink; attention ops push their softmax matrices here when set.
template <typename T>
struct AttnSink {
  std::vector<Tensor<T>> captured;
  void push(const Tensor<T>& w) { captured.push_back(w); }
};

// softmax(Q K^T * scale) V.
template <typename T>
int vanilla_attention(Graph<T>& g, int q, int k, int v, double scale,
                      AttnSink<T>* sink = nullptr) {
  int logits = g.matmul(q, k, false, true);
  logits = g.scale(logits, scale);
  const int weights = g.softmax_lastdim(logits);
  if (sink) sink->push(g.val(weights));
  return g.matmul(weights, v);
}

// softmax(-|Q_i - K_j|^2) V.
template <typename T>
int euclid_attention(Graph<T>& g, int q, int k, int v, double scale,
                     AttnSink<T>* sink = nullptr) {
  int logits = g.euclid_logits(q, k);
  logits = g.scale(logits, scale);
  const int weights = g.softmax_lastdim(logits);
  if (sink) sink->push(g.val(weights));
  return g.matmul(weights, v);
}

struct GtaOptions {
  double scale = 1.0;
  bool transform_values = true;  // false reproduces the no-rho-on-V ablation
  FlopCounter* counter = nullptr;
};

// Geometric transform attention: P (*) Attn(P^T (*) Q, P^-1 (*) K, P^-1 (*) V).
// reps_q carries the geometry of the query tokens, reps_kv of the key/value
// tokens; pass the same list for self-attention.
template <typename T>
int gta_attention(Graph<T>& g, int q, int k, int v, RepListPtr reps_q, RepListPtr reps_kv,
                  const GtaOptions& opt = {}, AttnSink<T>* sink = nullptr) {
  const int qt = g.rep_apply_node(reps_q, q, RepApplyMode::Transpose, opt.counter);
  const int kt = g.rep_apply_node(reps_kv, k, RepApplyMode::Inverse, opt.counter);
  const int vt =
      opt.transform_values ? g.rep_apply_node(reps_kv, v, RepApplyMode::Inverse, opt.counter) : v;
  const int o = vanilla_attention(g, qt, kt, vt, opt.scale, sink);
  return opt.transform_values ? g.rep_apply_node(reps_q, o, RepApplyMode::Plain, opt.counter) : o;
}

// Euclidean GTA: P (*) Attn_Euclid(P^-1 (*) Q, P^-1 (*) K, P^-1 (*) V).
// The query uses the inverse (not the transpose) since squared distances are
// preserved under rigid transformations.
template <typename T>
int gta_euclid_attention(Graph<T>& g, int q, int k, int v, RepListPtr reps_q, RepListPtr reps_kv,
                         const GtaOptions& opt = {}, AttnSink<T>* sink = nullptr) {
  const int qt = g.rep_apply_node(reps_q, q, RepApplyMode::Inverse, opt.counter);
  const int kt = g.rep_apply_node(reps_kv, k, RepApplyMode::Inverse, opt.counter);
  const int vt =
      opt.transform_values ? g.rep_apply_node(reps_kv, v, RepApplyMode::Inverse, opt.counter) : v;
  const int o = euclid_attention(g, qt, kt, vt, opt.scale, sink);
  return opt.transform_values ? g.rep_apply_node(reps_q, o, RepApplyMode::Plain, opt.counter) : o;
}

// GTA with Kronecker-structured representations; the dense product is never
// materialized.
template <typename T>
int gta_kronecker_attention(Graph<T>& g, int q, int k, int v, KronListPtr reps_q,
                            KronListPtr reps_kv, const GtaOptions& opt = {},
                            AttnSink<T>* sink = nullptr) {
  const int qt = g.kron_apply_node(reps_q, q, RepApplyMode::Transpose, opt.counter);
  const int kt = g.kron_apply_node(reps_kv, k, RepApplyMode::Inverse, opt.counter);
  const int vt =
      opt.transform_values ? g.kron_apply_node(reps_kv, v, RepApplyMode::Inverse, opt.counter) : v;
  const int o = vanilla_attention(g, qt, kt, vt, opt.scale, sink);
  return opt.transform_values ? g.kron_apply_node(reps_q, o, RepApplyMode::Plain, opt.counter) : o;
}

// Absolute positional encoding: softmax((Q+EqWq)(K+EkWk)^T scale)(V+EvWv),
// with E projected through the same learned matrices as the tokens.
template <typename T>
int ape_attention(Graph<T>& g, int q, int k, int v, int e_q, int e_kv, int wq, int wk, int wv,
                  double scale, AttnSink<T>* sink = nullptr) {
  const int q2 = g.add(q, g.matmul(e_q, wq));
  const int k2 = g.add(k, g.matmul(e_kv, wk));
  const int v2 = g.add(v, g.matmul(e_kv, wv));
  return vanilla_attention(g, q2, k2, v2, scale, sink);
}

// The rho(g) = R (+) R (+) R in R^{9x9} rep used for the learned RPE biases.
Representation rpe_bias_rep(const So3Rotation& r);

// Tiles a 1 x d row across n rows (gradient sums back into the row).
template <typename T>
int tile_rows(Graph<T>& g, int row, int n) {
  const int d = g.val(row).cols();
  return g.add_rowvec(g.leaf(Tensor<T>({n, d})), row);
}

// RPE-bias attention of the synthetic experiment: learned 9-vectors bq, bk,
// bv are rotated per token by R (+) R (+) R, concatenated to the QKV features,
// and the bias channels are sliced off the attention output.
template <typename T>
int rpe_bias_attention(Graph<T>& g, int q, int k, int v, int bq, int bk, int bv,
                       const std::vector<So3Rotation>& rot_q,
                       const std::vector<So3Rotation>& rot_kv, double scale,
                       AttnSink<T>* sink = nullptr) {
  if (g.val(bq).numel() != 9 || g.val(bk).numel() != 9 || g.val(bv).numel() != 9)
    throw std::invalid_argument("rpe_bias_attention: bias vectors must have length 9");
  const int nq = g.val(q).lead(), nk = g.val(k).lead(), d = g.val(q).cols();
  auto reps_of = [](const std::vector<So3Rotation>& rots) {
    auto reps = std::make_shared<std::vector<Representation>>();
    for (const auto& r : rots) reps->push_back(rpe_bias_rep(r));
    return RepListPtr(reps);
  };
  const auto pq = reps_of(rot_q), pkv = reps_of(rot_kv);
  const int tq = g.rep_apply_node(pq, tile_rows(g, bq, nq), RepApplyMode::Transpose);
  const int tk = g.rep_apply_node(pkv, tile_rows(g, bk, nk), RepApplyMode::Inverse);
  const int tv = g.rep_apply_node(pkv, tile_rows(g, bv, nk), RepApplyMode::Inverse);
  const int o = vanilla_attention(g, g.concat_lastdim(q, tq), g.concat_lastdim(k, tk),
                                  g.concat_lastdim(v, tv), scale, sink);
  return g.slice_lastdim(o, 0, d);
}

// Splits projected Q/K/V into n_heads feature slices, runs `head_op` per
// head with shared geometry, concatenates, and applies the output projection.
template <typename T>
int multi_head(Graph<T>& g, int q_full, int k_full, int v_full, int n_heads, int w_out,
               const std::function<int(Graph<T>&, int q, int k, int v, int head)>& head_op) {
  const int dm = g.val(q_full).cols();
  if (dm % n_heads != 0)
    throw std::invalid_argument("multi_head: feature dim not divisible by head count");
  const int d = dm / n_heads;
  int out = -1;
  for (int h = 0; h < n_heads; ++h) {
    const int q = g.slice_lastdim(q_full, h * d, d);
    const int k = g.slice_lastdim(k_full, h * d, d);
    const int v = g.slice_lastdim(v_full, h * d, d);
    const int o = head_op(g, q, k, v, h);
    out = h == 0 ? o : g.concat_lastdim(out, o);
  }
  return g.matmul(out, w_out);
}

}  // namespace gtakit

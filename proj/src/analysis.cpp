#include "gtakit/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

namespace gtakit {

Eigen::MatrixXd view_to_view(const Tensor<double>& attn, int n_views_q, int n_views_k,
                             int tokens_per_view) {
  const int nq = attn.lead(), nk = attn.cols();
  if (nq != n_views_q * tokens_per_view || nk != n_views_k * tokens_per_view)
    throw std::invalid_argument("view_to_view: token map does not cover the attention matrix");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_views_q, n_views_k);
  for (int i = 0; i < nq; ++i)
    for (int j = 0; j < nk; ++j)
      out(i / tokens_per_view, j / tokens_per_view) += attn.data[static_cast<size_t>(i) * nk + j];
  out /= static_cast<double>(tokens_per_view * tokens_per_view);
  return out;
}

std::vector<Eigen::MatrixXd> view_to_view(const AttnRecord& rec, int n_views,
                                          int tokens_per_view) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& e : rec.entries) {
    const int nq = e.weights.lead() / tokens_per_view;
    out.push_back(view_to_view(e.weights, nq, n_views, tokens_per_view));
  }
  return out;
}

PrCurve pr_auc(const std::vector<double>& attn_row, const MaskSet& masks) {
  if (masks.masks.empty()) throw std::invalid_argument("pr_auc: empty mask set");
  const size_t n = attn_row.size();
  for (const auto& m : masks.masks) {
    if (m.size() != n) throw std::invalid_argument("pr_auc: mask length mismatch");
    if (std::count(m.begin(), m.end(), 1) == 0)
      throw std::invalid_argument("pr_auc: mask has no positive pixels");
  }
  double wsum = 0.0;
  for (double w : masks.weights) wsum += w;
  if (masks.weights.size() != masks.masks.size() || wsum <= 0.0)
    throw std::invalid_argument("pr_auc: invalid object weights");

  // Thresholds at the order statistics of the attention values plus {0, 1}.
  std::set<double> tset{0.0, 1.0};
  for (double a : attn_row) tset.insert(a);
  std::vector<double> thresholds(tset.rbegin(), tset.rend());  // descending

  PrCurve curve;
  std::vector<bool> empty_point;
  for (double t : thresholds) {
    int npred = 0;
    for (double a : attn_row)
      if (a > t) ++npred;
    double precision = 0.0, recall = 0.0;
    for (size_t o = 0; o < masks.masks.size(); ++o) {
      const double w = masks.weights[o] / wsum;
      int tp = 0, pos = 0;
      for (size_t i = 0; i < n; ++i) {
        pos += masks.masks[o][i];
        if (attn_row[i] > t && masks.masks[o][i]) ++tp;
      }
      if (npred > 0) precision += w * static_cast<double>(tp) / npred;
      recall += w * static_cast<double>(tp) / pos;
    }
    curve.thresholds.push_back(t);
    curve.precision.push_back(precision);
    curve.recall.push_back(recall);
    empty_point.push_back(npred == 0);
  }

  // Anchor empty-prediction points by extending the first real precision
  // leftward (precision is undefined at zero predictions).
  double anchor = 1.0;
  for (size_t k = 0; k < empty_point.size(); ++k)
    if (!empty_point[k]) {
      anchor = curve.precision[k];
      break;
    }
  for (size_t k = 0; k < empty_point.size(); ++k)
    if (empty_point[k]) curve.precision[k] = anchor;

  for (size_t k = 0; k + 1 < curve.recall.size(); ++k)
    curve.auc += (curve.recall[k + 1] - curve.recall[k]) *
                 0.5 * (curve.precision[k] + curve.precision[k + 1]);
  return curve;
}

void write_pr_curve_csv(const std::string& path, const PrCurve& curve) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_pr_curve_csv: cannot open " + path);
  os << "threshold,precision,recall\n";
  for (size_t k = 0; k < curve.thresholds.size(); ++k)
    os << curve.thresholds[k] << ',' << curve.precision[k] << ',' << curve.recall[k] << '\n';
  os << "# auc," << curve.auc << "\n";
}

void write_attn_record_csv(const std::string& path, const AttnRecord& rec) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_attn_record_csv: cannot open " + path);
  os << "layer,head,row,col,weight\n";
  for (const auto& e : rec.entries) {
    const int nk = e.weights.cols();
    for (int i = 0; i < e.weights.lead(); ++i)
      for (int j = 0; j < nk; ++j)
        os << e.layer << ',' << e.head << ',' << i << ',' << j << ','
           << e.weights.data[static_cast<size_t>(i) * nk + j] << '\n';
  }
}

}  // namespace gtakit

#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "gtakit/attn.hpp"

namespace gtakit {

// Per-view, per-object binary masks with per-query object weights
// (normalized to sum 1 before use).
struct MaskSet {
  int n_views = 0;
  int tokens_per_view = 0;
  // masks[object][view * tokens_per_view + token] in {0, 1}
  std::vector<std::vector<int>> masks;
  std::vector<double> weights;  // one per object, normalized by pr_auc
};

struct PrCurve {
  std::vector<double> thresholds;
  std::vector<double> precision;
  std::vector<double> recall;
  double auc = 0.0;
};

// Mean attention weight from view-i query tokens to view-j key tokens, one
// n_views x n_views matrix per recorded entry.
Eigen::MatrixXd view_to_view(const Tensor<double>& attn, int n_views_q, int n_views_k,
                             int tokens_per_view);
std::vector<Eigen::MatrixXd> view_to_view(const AttnRecord& rec, int n_views,
                                          int tokens_per_view);

// Precision-recall curve of thresholded attention against weighted object
// masks. Thresholds are the sorted unique attention values plus {0, 1}, which
// gives the exact curve; AUC is the trapezoid over recall.
PrCurve pr_auc(const std::vector<double>& attn_row, const MaskSet& masks);

void write_pr_curve_csv(const std::string& path, const PrCurve& curve);
void write_attn_record_csv(const std::string& path, const AttnRecord& rec);

}  // namespace gtakit

#pragma once
// Ranking and calibration metrics.  AUC is the rank-sum form with half
// credit for ties; GAUC averages per-group AUC over groups that have both
// classes (unweighted mean, with the impression-weighted variant carried as
// an auxiliary); recall/NDCG/MRR read a ranked 0/1 relevance list.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace unishare {

inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: size mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += (y != 0);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auc: single-class input");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });

  // average ranks over tie blocks, 1-based
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] != 0) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

struct GaucResult {
  double value = 0.0;     // unweighted mean of per-group AUC
  double weighted = 0.0;  // impression-count weighted mean (auxiliary)
  int used = 0;           // groups with both classes
  int skipped = 0;        // single-class groups
};

inline GaucResult gauc(const std::vector<double>& scores, const std::vector<int>& labels,
                       const std::vector<int>& group) {
  if (scores.size() != labels.size() || scores.size() != group.size())
    throw std::invalid_argument("gauc: size mismatch");
  // bucket by group, preserving first-seen order for a fixed reduction order
  std::unordered_map<int, int> slot;
  std::vector<std::vector<double>> gs;
  std::vector<std::vector<int>> gl;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto it = slot.find(group[i]);
    if (it == slot.end()) {
      it = slot.emplace(group[i], static_cast<int>(gs.size())).first;
      gs.emplace_back();
      gl.emplace_back();
    }
    gs[it->second].push_back(scores[i]);
    gl[it->second].push_back(labels[i]);
  }
  GaucResult r;
  double sum = 0.0, wsum = 0.0, wtot = 0.0;
  for (std::size_t g = 0; g < gs.size(); ++g) {
    bool has_pos = false, has_neg = false;
    for (int y : gl[g]) (y != 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) {
      ++r.skipped;
      continue;
    }
    double a = auc(gs[g], gl[g]);
    double w = static_cast<double>(gs[g].size());
    sum += a;
    wsum += a * w;
    wtot += w;
    ++r.used;
  }
  if (r.used == 0) throw std::invalid_argument("gauc: no group with both classes");
  r.value = sum / r.used;
  r.weighted = wsum / wtot;
  return r;
}

// Indices of `scores` in ranking order (descending score); ties keep input
// order so rank metrics are deterministic.
inline std::vector<int> rank_order(const std::vector<double>& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

struct RankMetrics {
  double recall = 0.0;
  double ndcg = 0.0;
  double mrr = 0.0;
};

// `ranked_labels` is the 0/1 relevance list already in ranking order.
// recall@k and ndcg@k look at the top k; mrr uses the full list.
// Discount convention: rank r (1-based) contributes 1/log2(r+1).
inline RankMetrics ranking_metrics(const std::vector<int>& ranked_labels, int k) {
  if (k < 1) throw std::invalid_argument("ranking_metrics: k must be >= 1");
  int relevant = 0;
  for (int y : ranked_labels) relevant += (y != 0);
  if (relevant == 0) throw std::invalid_argument("ranking_metrics: no relevant item");

  RankMetrics m;
  int hits = 0;
  double dcg = 0.0;
  int topk = std::min<int>(k, static_cast<int>(ranked_labels.size()));
  for (int r = 1; r <= topk; ++r)
    if (ranked_labels[r - 1] != 0) {
      ++hits;
      dcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
    }
  double idcg = 0.0;
  for (int r = 1; r <= std::min(k, relevant); ++r)
    idcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  m.recall = static_cast<double>(hits) / static_cast<double>(relevant);
  m.ndcg = dcg / idcg;
  for (std::size_t r = 0; r < ranked_labels.size(); ++r)
    if (ranked_labels[r] != 0) {
      m.mrr = 1.0 / static_cast<double>(r + 1);
      break;
    }
  return m;
}

// Predicted-over-actual calibration ratio: sum of predictions / count of
// positives.
inline double pcoc(const std::vector<double>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size()) throw std::invalid_argument("pcoc: size mismatch");
  double pred_sum = 0.0;
  long long pos = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    pred_sum += preds[i];
    pos += (labels[i] != 0);
  }
  if (pos == 0) throw std::invalid_argument("pcoc: no positive labels");
  return pred_sum / static_cast<double>(pos);
}

}  // namespace unishare

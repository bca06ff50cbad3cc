#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "ramen/retrieval.hpp"
#include "ramen/sparse.hpp"

namespace ramen {

// Inverse-propensity model of label observation, p_l = 1/(1 + C e^{-A ln(n_l+B)})
// with C = (log N - 1)(B+1)^A and n_l the label's training frequency.
struct PropensityModel {
  double A = 0.55;
  double B = 1.5;
  std::vector<double> propensity;  // per label, in (0,1]
};

inline PropensityModel compute_propensities(const SparseBinaryMatrix& ground_truth,
                                            double A = 0.55, double B = 1.5) {
  if (ground_truth.rows < 2)
    throw std::invalid_argument("compute_propensities: need N >= 2");
  PropensityModel m;
  m.A = A;
  m.B = B;
  const double C = (std::log(static_cast<double>(ground_truth.rows)) - 1.0) *
                   std::pow(B + 1.0, A);
  std::vector<int> freq(ground_truth.cols, 0);
  for (const auto& ri : ground_truth.row_index)
    for (int l : ri) ++freq[l];
  m.propensity.resize(ground_truth.cols);
  for (int l = 0; l < ground_truth.cols; ++l)
    m.propensity[l] = 1.0 / (1.0 + C * std::exp(-A * std::log(freq[l] + B)));
  return m;
}

inline double precision_at_k(const RankedList& pred, const std::vector<int>& truth, int k) {
  if (k < 1) throw std::invalid_argument("precision_at_k: k must be >= 1");
  int hits = 0;
  for (int r = 0; r < std::min<int>(k, static_cast<int>(pred.size())); ++r)
    if (std::binary_search(truth.begin(), truth.end(), pred[r].id)) ++hits;
  return static_cast<double>(hits) / k;
}

inline double ndcg_at_k(const RankedList& pred, const std::vector<int>& truth, int k) {
  if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
  if (truth.empty()) return 0.0;
  double dcg = 0.0;
  for (int r = 0; r < std::min<int>(k, static_cast<int>(pred.size())); ++r)
    if (std::binary_search(truth.begin(), truth.end(), pred[r].id))
      dcg += 1.0 / std::log2(r + 2.0);
  double ideal = 0.0;
  const int ideal_ranks = std::min<int>(k, static_cast<int>(truth.size()));
  for (int r = 0; r < ideal_ranks; ++r) ideal += 1.0 / std::log2(r + 2.0);
  return dcg / ideal;
}

// Propensity-scored precision, normalized by the best achievable value
// over any ranking of the true positives.
inline double psp_at_k(const RankedList& pred, const std::vector<int>& truth,
                       const PropensityModel& prop, int k) {
  if (k < 1) throw std::invalid_argument("psp_at_k: k must be >= 1");
  if (truth.empty()) return 0.0;
  double got = 0.0;
  for (int r = 0; r < std::min<int>(k, static_cast<int>(pred.size())); ++r) {
    const int l = pred[r].id;
    if (l < 0 || l >= static_cast<int>(prop.propensity.size()))
      throw std::out_of_range("psp_at_k: no propensity for label " + std::to_string(l));
    if (std::binary_search(truth.begin(), truth.end(), l)) got += 1.0 / prop.propensity[l];
  }
  std::vector<double> inv;
  inv.reserve(truth.size());
  for (int l : truth) inv.push_back(1.0 / prop.propensity[l]);
  std::sort(inv.begin(), inv.end(), std::greater<>());
  double best = 0.0;
  for (int r = 0; r < std::min<int>(k, static_cast<int>(inv.size())); ++r) best += inv[r];
  return best > 0.0 ? got / best : 0.0;
}

inline double impression_yield(long relevant_impressions, long total_queries) {
  if (total_queries <= 0) throw std::invalid_argument("impression_yield: zero denominator");
  return 100.0 * static_cast<double>(relevant_impressions) / static_cast<double>(total_queries);
}

inline double click_through_rate(long clicks, long impressions) {
  if (impressions <= 0) throw std::invalid_argument("click_through_rate: zero denominator");
  return 100.0 * static_cast<double>(clicks) / static_cast<double>(impressions);
}

struct BucketStats {
  double mean = 0.0;
  int count = 0;
};

struct DecileReport {
  BucketStats head, torso, tail;
};

// Buckets per-query metric values by training frequency into
// head/torso/tail (configurable quantile cuts). Bucketing is by rank
// under (frequency, id), so equal frequencies split by id order.
inline DecileReport decile_report(const std::vector<double>& values,
                                  const std::vector<double>& frequencies,
                                  double lo_quantile = 1.0 / 3.0,
                                  double hi_quantile = 2.0 / 3.0) {
  if (values.size() != frequencies.size())
    throw std::invalid_argument("decile_report: values/frequencies size mismatch");
  DecileReport rep;
  if (values.empty()) return rep;

  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (frequencies[a] != frequencies[b]) return frequencies[a] < frequencies[b];
    return a < b;
  });

  const auto cut_lo = static_cast<std::size_t>(lo_quantile * n);
  const auto cut_hi = static_cast<std::size_t>(hi_quantile * n);
  double s_tail = 0, s_torso = 0, s_head = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const double v = values[order[r]];
    if (r < cut_lo) {
      s_tail += v;
      ++rep.tail.count;
    } else if (r < cut_hi) {
      s_torso += v;
      ++rep.torso.count;
    } else {
      s_head += v;
      ++rep.head.count;
    }
  }
  if (rep.tail.count) rep.tail.mean = s_tail / rep.tail.count;
  if (rep.torso.count) rep.torso.mean = s_torso / rep.torso.count;
  if (rep.head.count) rep.head.mean = s_head / rep.head.count;
  return rep;
}

}  // namespace ramen

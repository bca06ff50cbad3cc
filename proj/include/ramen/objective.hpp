#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "ramen/corpus.hpp"
#include "ramen/encoder.hpp"

namespace ramen {

struct LossConfig {
  double margin = 0.3;  // gamma
  std::vector<double> lambda_x;  // per anchor set; empty = 1.0 everywhere
  std::vector<double> lambda_z;
  int num_positives = 2;
  int num_hard_negatives = 12;

  double lx(std::size_t t) const { return t < lambda_x.size() ? lambda_x[t] : (lambda_x.empty() ? 1.0 : lambda_x.back()); }
  double lz(std::size_t t) const { return t < lambda_z.size() ? lambda_z[t] : (lambda_z.empty() ? 1.0 : lambda_z.back()); }
};

inline double triplet_hinge(double s_pos, double s_neg, double margin) {
  return std::max(0.0, s_neg - s_pos + margin);
}

// In-batch mini-batch contract: queries with their sampled positive
// labels, plus one sampled positive anchor per item per anchor set
// (-1 when the item has no edge).
struct Batch {
  std::vector<int> query_ids;
  std::vector<std::vector<int>> positives;     // per query, global label ids
  std::vector<int> label_ids;                  // sorted unique union of positives
  std::vector<std::vector<int>> query_anchor;  // [set][query slot] anchor id or -1
  std::vector<std::vector<int>> label_anchor;  // [set][label slot] anchor id or -1
  std::vector<std::vector<int>> anchor_ids;    // [set] sorted unique sampled anchors
};

// Top-`count` candidates by descending cosine against `query`, skipping
// forbidden ids; ties broken by ascending id.
inline std::vector<int> select_hard_negatives(const std::vector<double>& query,
                                              const std::vector<int>& candidate_ids,
                                              const std::vector<std::vector<double>>& candidate_embs,
                                              const std::unordered_set<int>& forbidden,
                                              int count) {
  std::vector<std::pair<double, int>> scored;
  for (std::size_t j = 0; j < candidate_ids.size(); ++j) {
    if (forbidden.count(candidate_ids[j])) continue;
    double s = 0.0;
    const auto& c = candidate_embs[j];
    for (std::size_t d = 0; d < query.size(); ++d) s += query[d] * c[d];
    scored.emplace_back(s, candidate_ids[j]);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (static_cast<int>(scored.size()) > count) scored.resize(count);
  std::vector<int> out;
  out.reserve(scored.size());
  for (const auto& [s, id] : scored) out.push_back(id);
  return out;
}

struct LossResult {
  double value = 0.0;
  EncoderGrads grads;
};

struct ObjectiveResult {
  double total = 0.0;
  double task = 0.0;
  std::vector<double> reg_x;  // per anchor set
  std::vector<double> reg_z;
  EncoderGrads grads;
};

enum class Side { Query, Label };

namespace detail {

// Embeddings and token lists for everything a batch touches, plus the
// per-item upstream gradients accumulated by the hinge terms.
struct BatchWork {
  const Corpus& corpus;
  const TokenizerConfig& tok;
  const EncoderParams& params;

  std::vector<std::vector<int>> query_tokens, label_tokens;
  std::vector<std::vector<double>> query_emb, label_emb;
  std::vector<std::vector<std::vector<int>>> anchor_tokens;   // [set][slot]
  std::vector<std::vector<std::vector<double>>> anchor_emb;   // [set][slot]
  std::vector<std::vector<double>> query_grad, label_grad;
  std::vector<std::vector<std::vector<double>>> anchor_grad;

  BatchWork(const Corpus& c, const Batch& b, const EncoderParams& p, const TokenizerConfig& t)
      : corpus(c), tok(t), params(p) {
    for (int q : b.query_ids) {
      query_tokens.push_back(tokenize(c.points[q].text, t));
      query_emb.push_back(encode(query_tokens.back(), p));
    }
    for (int l : b.label_ids) {
      label_tokens.push_back(tokenize(c.labels[l].text, t));
      label_emb.push_back(encode(label_tokens.back(), p));
    }
    anchor_tokens.resize(b.anchor_ids.size());
    anchor_emb.resize(b.anchor_ids.size());
    for (std::size_t s = 0; s < b.anchor_ids.size(); ++s) {
      for (int a : b.anchor_ids[s]) {
        anchor_tokens[s].push_back(tokenize(c.anchor_sets[s].anchors[a].text, t));
        anchor_emb[s].push_back(encode(anchor_tokens[s].back(), p));
      }
    }
    query_grad.assign(query_emb.size(), std::vector<double>(p.dim, 0.0));
    label_grad.assign(label_emb.size(), std::vector<double>(p.dim, 0.0));
    anchor_grad.resize(anchor_emb.size());
    for (std::size_t s = 0; s < anchor_emb.size(); ++s)
      anchor_grad[s].assign(anchor_emb[s].size(), std::vector<double>(p.dim, 0.0));
  }

  static double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) s += a[d] * b[d];
    return s;
  }

  // One active hinge [a.b_neg - a.b_pos + margin]_+ in embedding space.
  static void hinge_grad(const std::vector<double>& anchor_vec, std::vector<double>& g_anchor,
                         const std::vector<double>& pos, std::vector<double>& g_pos,
                         const std::vector<double>& neg, std::vector<double>& g_neg,
                         double scale) {
    for (std::size_t d = 0; d < anchor_vec.size(); ++d) {
      g_anchor[d] += scale * (neg[d] - pos[d]);
      g_pos[d] -= scale * anchor_vec[d];
      g_neg[d] += scale * anchor_vec[d];
    }
  }

  // Upstream gradients -> parameter gradients, reduced in a fixed order.
  // Items with an all-zero upstream are skipped entirely so they do not
  // register zero-valued sparse rows (which would advance per-row
  // optimizer timesteps for parameters this batch never moved).
  void backward(EncoderGrads& grads) {
    grads.ensure(params);
    const auto nonzero = [](const std::vector<double>& g) {
      for (double v : g)
        if (v != 0.0) return true;
      return false;
    };
    for (std::size_t i = 0; i < query_tokens.size(); ++i)
      if (nonzero(query_grad[i]))
        encode_backward(query_tokens[i], params, query_grad[i], grads);
    for (std::size_t j = 0; j < label_tokens.size(); ++j)
      if (nonzero(label_grad[j]))
        encode_backward(label_tokens[j], params, label_grad[j], grads);
    for (std::size_t s = 0; s < anchor_tokens.size(); ++s)
      for (std::size_t j = 0; j < anchor_tokens[s].size(); ++j)
        if (nonzero(anchor_grad[s][j]))
          encode_backward(anchor_tokens[s][j], params, anchor_grad[s][j], grads);
  }
};

inline int slot_of(const std::vector<int>& sorted_ids, int id) {
  const auto it = std::lower_bound(sorted_ids.begin(), sorted_ids.end(), id);
  return static_cast<int>(it - sorted_ids.begin());
}

// Task triplet sum into `work`; gradients accumulate with weight `scale`.
inline double task_terms(const Batch& batch, const LossConfig& cfg, BatchWork& work,
                         double scale) {
  double loss = 0.0;
  for (std::size_t qi = 0; qi < batch.query_ids.size(); ++qi) {
    const int q = batch.query_ids[qi];
    const auto& gt = work.corpus.ground_truth.row_index[q];
    std::unordered_set<int> forbidden(gt.begin(), gt.end());
    const auto negatives = select_hard_negatives(work.query_emb[qi], batch.label_ids,
                                                 work.label_emb, forbidden,
                                                 cfg.num_hard_negatives);
    for (int pos : batch.positives[qi]) {
      const int pj = slot_of(batch.label_ids, pos);
      const double s_pos = BatchWork::dot(work.query_emb[qi], work.label_emb[pj]);
      for (int neg : negatives) {
        const int nj = slot_of(batch.label_ids, neg);
        const double s_neg = BatchWork::dot(work.query_emb[qi], work.label_emb[nj]);
        const double h = triplet_hinge(s_pos, s_neg, cfg.margin);
        if (h > 0.0) {
          loss += h;
          BatchWork::hinge_grad(work.query_emb[qi], work.query_grad[qi],
                                work.label_emb[pj], work.label_grad[pj],
                                work.label_emb[nj], work.label_grad[nj], scale);
        }
      }
    }
  }
  return loss;
}

// Regularizer triplet sum for one side and one anchor set. Negatives are
// in-batch anchors with no edge to the item in `exclusion` (the unpruned
// reference graph).
inline double regularizer_terms(const Batch& batch, const LossConfig& cfg, BatchWork& work,
                                Side side, std::size_t set, const Corpus& exclusion,
                                double scale) {
  const auto& sampled = side == Side::Query ? batch.query_anchor[set] : batch.label_anchor[set];
  const auto& item_ids = side == Side::Query ? batch.query_ids : batch.label_ids;
  auto& item_embs = side == Side::Query ? work.query_emb : work.label_emb;
  auto& item_grads = side == Side::Query ? work.query_grad : work.label_grad;
  const auto& ref = side == Side::Query ? exclusion.anchor_sets[set].point_graph
                                        : exclusion.anchor_sets[set].label_graph;

  double loss = 0.0;
  for (std::size_t ii = 0; ii < item_ids.size(); ++ii) {
    const int p = sampled[ii];
    if (p < 0) continue;  // item has no anchor edge
    const int item = item_ids[ii];
    std::unordered_set<int> forbidden;
    for (int a : batch.anchor_ids[set])
      if (ref.adjacency.has(item, a)) forbidden.insert(a);
    const auto negatives = select_hard_negatives(item_embs[ii], batch.anchor_ids[set],
                                                 work.anchor_emb[set], forbidden,
                                                 cfg.num_hard_negatives);
    const int pj = slot_of(batch.anchor_ids[set], p);
    const double s_pos = BatchWork::dot(item_embs[ii], work.anchor_emb[set][pj]);
    for (int neg : negatives) {
      const int nj = slot_of(batch.anchor_ids[set], neg);
      const double s_neg = BatchWork::dot(item_embs[ii], work.anchor_emb[set][nj]);
      const double h = triplet_hinge(s_pos, s_neg, cfg.margin);
      if (h > 0.0) {
        loss += h;
        BatchWork::hinge_grad(item_embs[ii], item_grads[ii],
                              work.anchor_emb[set][pj], work.anchor_grad[set][pj],
                              work.anchor_emb[set][nj], work.anchor_grad[set][nj], scale);
      }
    }
  }
  return loss;
}

}  // namespace detail

inline LossResult task_loss(const Corpus& corpus, const Batch& batch,
                            const EncoderParams& params, const TokenizerConfig& tok,
                            const LossConfig& cfg) {
  detail::BatchWork work(corpus, batch, params, tok);
  LossResult r;
  r.value = detail::task_terms(batch, cfg, work, 1.0);
  work.backward(r.grads);
  return r;
}

inline LossResult regularizer_loss(const Corpus& corpus, const Batch& batch,
                                   const EncoderParams& params, const TokenizerConfig& tok,
                                   const LossConfig& cfg, Side side, std::size_t anchor_set,
                                   const Corpus* exclusion = nullptr) {
  if (anchor_set >= corpus.anchor_sets.size())
    throw std::out_of_range("regularizer_loss: anchor set index out of range");
  detail::BatchWork work(corpus, batch, params, tok);
  LossResult r;
  r.value = detail::regularizer_terms(batch, cfg, work, side, anchor_set,
                                      exclusion ? *exclusion : corpus, 1.0);
  work.backward(r.grads);
  return r;
}

// L(theta) + sum_t lambda_x R^t_x + lambda_z R^t_z, with gradients as the
// same weighted sum, computed over one shared embedding pass.
inline ObjectiveResult total_objective(const Corpus& corpus, const Batch& batch,
                                       const EncoderParams& params, const TokenizerConfig& tok,
                                       const LossConfig& cfg, const Corpus* exclusion = nullptr) {
  detail::BatchWork work(corpus, batch, params, tok);
  const Corpus& ref = exclusion ? *exclusion : corpus;

  ObjectiveResult r;
  r.task = detail::task_terms(batch, cfg, work, 1.0);
  r.total = r.task;
  const std::size_t num_sets = batch.anchor_ids.size();
  r.reg_x.resize(num_sets, 0.0);
  r.reg_z.resize(num_sets, 0.0);
  for (std::size_t t = 0; t < num_sets; ++t) {
    if (cfg.lx(t) > 0.0) {
      r.reg_x[t] = detail::regularizer_terms(batch, cfg, work, Side::Query, t, ref, cfg.lx(t));
      r.total += cfg.lx(t) * r.reg_x[t];
    }
    if (cfg.lz(t) > 0.0) {
      r.reg_z[t] = detail::regularizer_terms(batch, cfg, work, Side::Label, t, ref, cfg.lz(t));
      r.total += cfg.lz(t) * r.reg_z[t];
    }
  }
  work.backward(r.grads);
  return r;
}

}  // namespace ramen

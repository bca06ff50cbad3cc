#pragma once

#include <algorithm>
#include <atomic>
#include <string>
#include <thread>
#include <vector>

#include "ramen/corpus.hpp"
#include "ramen/encoder.hpp"
#include "ramen/sparse.hpp"

namespace ramen {

struct LabelIndex {
  std::vector<std::vector<double>> label_emb;  // L x D unit rows
  std::vector<int> label_ids;
};

struct ScoredLabel {
  int id;
  double score;
  bool operator==(const ScoredLabel&) const = default;
};

using RankedList = std::vector<ScoredLabel>;  // score desc, ties by id asc

inline LabelIndex build_index(const std::vector<TextRecord>& labels,
                              const EncoderParams& params, const TokenizerConfig& tok) {
  LabelIndex idx;
  idx.label_emb.reserve(labels.size());
  idx.label_ids.reserve(labels.size());
  for (const auto& l : labels) {
    idx.label_emb.push_back(encode(tokenize(l.text, tok), params));
    idx.label_ids.push_back(l.id);
  }
  return idx;
}

// Exact top-k by full scan over label embeddings.
inline RankedList top_k_emb(const std::vector<double>& query, const LabelIndex& index, int k) {
  const auto better = [](const ScoredLabel& a, const ScoredLabel& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  };
  RankedList heap;  // max `k` entries, worst on top via reversed order
  for (std::size_t j = 0; j < index.label_emb.size(); ++j) {
    double s = 0.0;
    const auto& v = index.label_emb[j];
    for (std::size_t d = 0; d < query.size(); ++d) s += query[d] * v[d];
    const ScoredLabel cand{index.label_ids[j], s};
    if (static_cast<int>(heap.size()) < k) {
      heap.push_back(cand);
      std::push_heap(heap.begin(), heap.end(), better);
    } else if (better(cand, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), better);
      heap.back() = cand;
      std::push_heap(heap.begin(), heap.end(), better);
    }
  }
  std::sort(heap.begin(), heap.end(), better);
  return heap;
}

inline RankedList top_k(const std::string& query_text, const LabelIndex& index,
                        const EncoderParams& params, const TokenizerConfig& tok, int k) {
  return top_k_emb(encode(tokenize(query_text, tok), params), index, k);
}

inline std::vector<RankedList> batch_top_k(const std::vector<std::string>& query_texts,
                                           const LabelIndex& index, const EncoderParams& params,
                                           const TokenizerConfig& tok, int k, int threads = 1) {
  std::vector<RankedList> out(query_texts.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < query_texts.size(); ++i)
      out[i] = top_k(query_texts[i], index, params, tok, k);
    return out;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < query_texts.size(); i = next.fetch_add(1))
        out[i] = top_k(query_texts[i], index, params, tok, k);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

inline std::vector<RankedList> batch_top_k_emb(const std::vector<std::vector<double>>& queries,
                                               const LabelIndex& index, int k, int threads = 1) {
  std::vector<RankedList> out(queries.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < queries.size(); ++i) out[i] = top_k_emb(queries[i], index, k);
    return out;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < queries.size(); i = next.fetch_add(1))
        out[i] = top_k_emb(queries[i], index, k);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

// Predictions in the corpus sparse format with scores as values.
inline void save_predictions(std::ostream& os, const std::vector<RankedList>& preds, int num_labels) {
  SparseBinaryMatrix m(static_cast<int>(preds.size()), num_labels);
  std::vector<std::vector<double>> values(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    std::vector<std::pair<int, double>> row;
    for (const auto& p : preds[i]) row.emplace_back(p.id, p.score);
    std::sort(row.begin(), row.end());
    for (const auto& [id, score] : row) {
      m.row_index[i].push_back(id);
      values[i].push_back(score);
    }
  }
  save_sparse_matrix(os, m, &values);
}

}  // namespace ramen

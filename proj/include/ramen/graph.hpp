#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ramen/sparse.hpp"

namespace ramen {

// Bipartite item->anchor graph. Weights, when present, align entry for
// entry with adjacency and hold RWR visit counts; an empty weight table
// means every edge has weight 1.
struct AnchorGraph {
  SparseBinaryMatrix adjacency;
  std::vector<std::vector<double>> weights;

  AnchorGraph() = default;
  explicit AnchorGraph(SparseBinaryMatrix adj) : adjacency(std::move(adj)) {}

  bool has_weights() const { return !weights.empty(); }

  void validate() const {
    adjacency.validate();
    if (has_weights()) {
      if (weights.size() != adjacency.row_index.size())
        throw std::invalid_argument("anchor graph: weight rows mismatch");
      for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i].size() != adjacency.row_index[i].size())
          throw std::invalid_argument("anchor graph: weight row length mismatch");
        for (double w : weights[i])
          if (!(w > 0)) throw std::invalid_argument("anchor graph: non-positive weight");
      }
    }
  }

  void drop_columns(const std::unordered_set<int>& cols) {
    for (std::size_t i = 0; i < adjacency.row_index.size(); ++i) {
      auto& ri = adjacency.row_index[i];
      if (has_weights()) {
        auto& wi = weights[i];
        std::vector<int> nri;
        std::vector<double> nwi;
        for (std::size_t j = 0; j < ri.size(); ++j) {
          if (!cols.count(ri[j])) {
            nri.push_back(ri[j]);
            nwi.push_back(wi[j]);
          }
        }
        ri = std::move(nri);
        wi = std::move(nwi);
      } else {
        ri.erase(std::remove_if(ri.begin(), ri.end(),
                                [&](int c) { return cols.count(c) != 0; }),
                 ri.end());
      }
    }
  }
};

struct WalkConfig {
  int hops = 400;
  double restart_prob = 0.8;
  int top_k_keep = -1;  // -1: cap at the item's original degree
  std::uint64_t seed = 0;
};

// Anchor co-occurrence graph: two anchors adjacent iff some item links
// to both.
inline SparseBinaryMatrix build_anchor_anchor(const AnchorGraph& graph) {
  const int m = graph.adjacency.cols;
  std::vector<std::unordered_set<int>> adj(m);
  for (const auto& ri : graph.adjacency.row_index) {
    for (std::size_t a = 0; a < ri.size(); ++a) {
      for (std::size_t b = a + 1; b < ri.size(); ++b) {
        adj[ri[a]].insert(ri[b]);
        adj[ri[b]].insert(ri[a]);
      }
    }
  }
  SparseBinaryMatrix out(m, m);
  for (int a = 0; a < m; ++a) {
    out.row_index[a].assign(adj[a].begin(), adj[a].end());
    std::sort(out.row_index[a].begin(), out.row_index[a].end());
  }
  return out;
}

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  x ^= x >> 30; x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27; x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

// One restarting walk over anchors for a fixed item neighborhood.
// Each hop: restart to a uniform existing neighbor with probability
// restart_prob, otherwise move to a uniform anchor-anchor neighbor of
// the current anchor (restarting when the anchor is isolated). Visit
// counts are recorded after every hop.
inline std::vector<std::pair<int, std::int64_t>> walk_visit_counts(
    const std::vector<int>& neighbors, const SparseBinaryMatrix& anchor_anchor,
    int hops, double restart_prob, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_start(0, neighbors.size() - 1);

  std::unordered_map<int, std::int64_t> counts;
  int current = neighbors[pick_start(rng)];
  for (int h = 0; h < hops; ++h) {
    const auto& next = anchor_anchor.row_index[current];
    if (coin(rng) < restart_prob || next.empty()) {
      current = neighbors[pick_start(rng)];
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, next.size() - 1);
      current = next[pick(rng)];
    }
    ++counts[current];
  }
  std::vector<std::pair<int, std::int64_t>> out(counts.begin(), counts.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Densifies missing item->anchor links by random walks with restart.
// New edges carry visit counts as weights; existing edges are never
// removed. Items with no edges are returned unchanged.
inline AnchorGraph rwr_augment(const AnchorGraph& graph,
                               const SparseBinaryMatrix& anchor_anchor,
                               const WalkConfig& cfg) {
  if (anchor_anchor.rows != graph.adjacency.cols || anchor_anchor.cols != graph.adjacency.cols)
    throw std::invalid_argument("rwr_augment: anchor-anchor dims do not match graph columns");
  if (cfg.hops < 1) throw std::invalid_argument("rwr_augment: hops must be >= 1");
  if (!(cfg.restart_prob > 0.0 && cfg.restart_prob <= 1.0))
    throw std::invalid_argument("rwr_augment: restart_prob must be in (0,1]");

  AnchorGraph out = graph;
  if (!out.has_weights()) {
    out.weights.resize(out.adjacency.row_index.size());
    for (std::size_t i = 0; i < out.weights.size(); ++i)
      out.weights[i].assign(out.adjacency.row_index[i].size(), 1.0);
  }

  const int rows = graph.adjacency.rows;
  for (int i = 0; i < rows; ++i) {
    const auto& neighbors = graph.adjacency.row_index[i];
    if (neighbors.empty()) continue;
    const int cap = cfg.top_k_keep >= 0 ? cfg.top_k_keep : static_cast<int>(neighbors.size());
    if (cap == 0) continue;

    std::mt19937_64 rng(detail::mix_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    auto counts = detail::walk_visit_counts(neighbors, anchor_anchor, cfg.hops,
                                            cfg.restart_prob, rng);

    // candidates: visited anchors not already linked, by count desc then id asc
    std::vector<std::pair<int, std::int64_t>> cands;
    for (const auto& [anchor, count] : counts)
      if (!std::binary_search(neighbors.begin(), neighbors.end(), anchor))
        cands.emplace_back(anchor, count);
    std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (static_cast<int>(cands.size()) > cap) cands.resize(cap);

    auto& ri = out.adjacency.row_index[i];
    auto& wi = out.weights[i];
    for (const auto& [anchor, count] : cands) {
      const auto pos = std::lower_bound(ri.begin(), ri.end(), anchor);
      const auto idx = pos - ri.begin();
      ri.insert(pos, anchor);
      wi.insert(wi.begin() + idx, static_cast<double>(count));
    }
  }
  return out;
}

// Keeps edge (i,m) iff dot(item_emb[i], anchor_emb[m]) > threshold.
// Embeddings are row-major unit vectors, one row per item/anchor.
inline AnchorGraph prune_edges(const AnchorGraph& graph,
                               const std::vector<std::vector<double>>& item_emb,
                               const std::vector<std::vector<double>>& anchor_emb,
                               double threshold = 0.0) {
  if (static_cast<int>(item_emb.size()) != graph.adjacency.rows ||
      static_cast<int>(anchor_emb.size()) != graph.adjacency.cols)
    throw std::invalid_argument("prune_edges: embedding dims do not match graph");

  AnchorGraph out;
  out.adjacency.rows = graph.adjacency.rows;
  out.adjacency.cols = graph.adjacency.cols;
  out.adjacency.row_index.resize(graph.adjacency.rows);
  if (graph.has_weights()) out.weights.resize(graph.adjacency.rows);

  for (int i = 0; i < graph.adjacency.rows; ++i) {
    const auto& ri = graph.adjacency.row_index[i];
    for (std::size_t j = 0; j < ri.size(); ++j) {
      const int m = ri[j];
      double dot = 0.0;
      const auto& u = item_emb[i];
      const auto& v = anchor_emb[m];
      for (std::size_t d = 0; d < u.size(); ++d) dot += u[d] * v[d];
      if (dot > threshold) {
        out.adjacency.row_index[i].push_back(m);
        if (graph.has_weights()) out.weights[i].push_back(graph.weights[i][j]);
      }
    }
  }
  return out;
}

// Unions the ground truth with every (point, label) pair sharing an
// anchor neighbor. Single-hop and idempotent.
inline SparseBinaryMatrix label_propagate_augment(const SparseBinaryMatrix& ground_truth,
                                                  const AnchorGraph& point_graph,
                                                  const AnchorGraph& label_graph) {
  if (point_graph.adjacency.cols != label_graph.adjacency.cols)
    throw std::invalid_argument("label_propagate_augment: anchor dims differ");
  if (point_graph.adjacency.rows != ground_truth.rows ||
      label_graph.adjacency.rows != ground_truth.cols)
    throw std::invalid_argument("label_propagate_augment: dims do not match ground truth");

  // invert label graph: anchor -> labels
  std::vector<std::vector<int>> anchor_labels(label_graph.adjacency.cols);
  for (int l = 0; l < label_graph.adjacency.rows; ++l)
    for (int m : label_graph.adjacency.row_index[l]) anchor_labels[m].push_back(l);

  SparseBinaryMatrix out = ground_truth;
  for (int i = 0; i < ground_truth.rows; ++i) {
    std::unordered_set<int> linked(out.row_index[i].begin(), out.row_index[i].end());
    bool grew = false;
    for (int m : point_graph.adjacency.row_index[i])
      for (int l : anchor_labels[m]) grew |= linked.insert(l).second;
    if (grew) {
      out.row_index[i].assign(linked.begin(), linked.end());
      std::sort(out.row_index[i].begin(), out.row_index[i].end());
    }
  }
  return out;
}

struct DegreeStats {
  double avg_per_row = 0.0;
  double avg_per_col = 0.0;
  int isolated_rows = 0;
};

inline DegreeStats degree_stats(const AnchorGraph& graph) {
  DegreeStats s;
  const auto n = graph.adjacency.nnz();
  if (graph.adjacency.rows > 0)
    s.avg_per_row = static_cast<double>(n) / graph.adjacency.rows;
  if (graph.adjacency.cols > 0)
    s.avg_per_col = static_cast<double>(n) / graph.adjacency.cols;
  for (const auto& ri : graph.adjacency.row_index)
    if (ri.empty()) ++s.isolated_rows;
  return s;
}

}  // namespace ramen

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ramen/corpus.hpp"
#include "ramen/encoder.hpp"
#include "ramen/graph.hpp"
#include "ramen/objective.hpp"
#include "ramen/synthetic.hpp"

namespace ramen {

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
  int batch_size = 1024;
  int total_epochs = 300;
  double learning_rate = 0.0002;
  OptimizerKind optimizer = OptimizerKind::Adam;
  int warmup_epochs = 10;
  int refine_epochs_per_cycle = 5;
  int cluster_refresh_epochs = 5;
  int cluster_size_doubling_epochs = 25;
  int initial_cluster_size = 0;  // 0 disables cluster batching
  // Labels drawn uniformly into each batch on top of the sampled
  // positives. They widen the in-batch negative pool and give the
  // label-side regularizer coverage of labels with no (or very few)
  // training positives, which would otherwise never receive gradients.
  int uniform_label_samples = 64;
  std::uint64_t seed = 0;

  // schedule switches (ablation flags plug in here)
  bool rwr_augment = true;
  bool prune = true;
  bool aug_gt = false;

  void validate() const {
    if (batch_size < 2) throw std::invalid_argument("train config: batch_size must be >= 2");
    if (total_epochs < 1) throw std::invalid_argument("train config: total_epochs must be >= 1");
    if (initial_cluster_size > 0 && batch_size <= initial_cluster_size)
      throw std::invalid_argument("train config: batch_size must exceed cluster size");
    if (warmup_epochs < 1 || refine_epochs_per_cycle < 1)
      throw std::invalid_argument("train config: schedule lengths must be >= 1");
    if (cluster_refresh_epochs < 1 || cluster_size_doubling_epochs < 1)
      throw std::invalid_argument("train config: cluster schedule lengths must be >= 1");
    if (!(learning_rate > 0.0))
      throw std::invalid_argument("train config: learning_rate must be > 0");
  }
};

// ---------------------------------------------------------------------
// Optimizer

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m_embed, v_embed, m_proj, v_proj;
  std::vector<long> embed_row_steps;  // per-row timestep for bias correction
  long proj_steps = 0;
};

inline void optimizer_step(EncoderParams& params, const EncoderGrads& grads,
                           OptimizerState& state, double lr) {
  const auto check = [](double g) {
    if (!std::isfinite(g)) throw std::runtime_error("optimizer_step: non-finite gradient");
  };
  if (state.kind == OptimizerKind::Sgd) {
    for (const auto& [row, g] : grads.embed_rows) {
      double* p = params.embed_row(row);
      for (int h = 0; h < params.hidden; ++h) {
        check(g[h]);
        p[h] -= lr * g[h];
      }
    }
    if (!grads.proj.empty())
      for (std::size_t i = 0; i < params.proj.size(); ++i) {
        check(grads.proj[i]);
        params.proj[i] -= lr * grads.proj[i];
      }
    return;
  }

  // Adam with lazily updated sparse rows: moments and timestep advance
  // only for rows touched this step.
  if (state.m_embed.empty()) {
    state.m_embed.assign(params.embed_table.size(), 0.0);
    state.v_embed.assign(params.embed_table.size(), 0.0);
    state.m_proj.assign(params.proj.size(), 0.0);
    state.v_proj.assign(params.proj.size(), 0.0);
    state.embed_row_steps.assign(params.vocab, 0);
  }
  for (const auto& [row, g] : grads.embed_rows) {
    const long t = ++state.embed_row_steps[row];
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    double* p = params.embed_row(row);
    const std::size_t base = static_cast<std::size_t>(row) * params.hidden;
    for (int h = 0; h < params.hidden; ++h) {
      check(g[h]);
      double& m = state.m_embed[base + h];
      double& v = state.v_embed[base + h];
      m = state.beta1 * m + (1.0 - state.beta1) * g[h];
      v = state.beta2 * v + (1.0 - state.beta2) * g[h] * g[h];
      p[h] -= lr * (m / bc1) / (std::sqrt(v / bc2) + state.eps);
    }
  }
  if (!grads.proj.empty()) {
    const long t = ++state.proj_steps;
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.proj.size(); ++i) {
      check(grads.proj[i]);
      double& m = state.m_proj[i];
      double& v = state.v_proj[i];
      m = state.beta1 * m + (1.0 - state.beta1) * grads.proj[i];
      v = state.beta2 * v + (1.0 - state.beta2) * grads.proj[i] * grads.proj[i];
      params.proj[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + state.eps);
    }
  }
}

// ---------------------------------------------------------------------
// Batch sampling

namespace detail {

inline void fill_batch_structure(const Corpus& corpus, std::vector<int> queries,
                                 std::mt19937_64& rng, const LossConfig& loss_cfg,
                                 int uniform_labels, Batch& batch) {
  batch.query_ids = std::move(queries);
  batch.positives.resize(batch.query_ids.size());
  std::unordered_set<int> label_union;
  for (std::size_t qi = 0; qi < batch.query_ids.size(); ++qi) {
    auto pool = corpus.ground_truth.row_index[batch.query_ids[qi]];
    std::shuffle(pool.begin(), pool.end(), rng);
    if (static_cast<int>(pool.size()) > loss_cfg.num_positives)
      pool.resize(loss_cfg.num_positives);
    std::sort(pool.begin(), pool.end());
    batch.positives[qi] = pool;
    label_union.insert(pool.begin(), pool.end());
  }
  if (uniform_labels > 0 && corpus.num_labels() > 0) {
    std::vector<int> pool(corpus.num_labels());
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), rng);
    int added = 0;
    for (int l : pool) {
      if (added >= uniform_labels) break;
      if (label_union.insert(l).second) ++added;
    }
  }
  batch.label_ids.assign(label_union.begin(), label_union.end());
  std::sort(batch.label_ids.begin(), batch.label_ids.end());

  // Anchor draws come from a stream forked off the main generator, so the
  // query/positive sampling sequence does not depend on how many anchor
  // sets exist (keeps ablation runs batch-for-batch comparable).
  std::mt19937_64 anchor_rng(rng());
  const std::size_t num_sets = corpus.anchor_sets.size();
  batch.query_anchor.assign(num_sets, {});
  batch.label_anchor.assign(num_sets, {});
  batch.anchor_ids.assign(num_sets, {});
  for (std::size_t s = 0; s < num_sets; ++s) {
    const auto& set = corpus.anchor_sets[s];
    std::unordered_set<int> anchor_union;
    const auto sample_one = [&](const AnchorGraph& g, int item) {
      const auto& row = g.adjacency.row_index[item];
      if (row.empty()) return -1;
      std::uniform_int_distribution<std::size_t> pick(0, row.size() - 1);
      const int a = row[pick(anchor_rng)];
      anchor_union.insert(a);
      return a;
    };
    for (int q : batch.query_ids)
      batch.query_anchor[s].push_back(sample_one(set.point_graph, q));
    for (int l : batch.label_ids)
      batch.label_anchor[s].push_back(sample_one(set.label_graph, l));
    batch.anchor_ids[s].assign(anchor_union.begin(), anchor_union.end());
    std::sort(batch.anchor_ids[s].begin(), batch.anchor_ids[s].end());
  }
}

}  // namespace detail

// Uniformly chosen queries without replacement, clamped to the eligible
// pool when it is smaller than the batch size.
inline Batch sample_batch_uniform(const Corpus& corpus, const std::vector<int>& eligible,
                                  std::mt19937_64& rng, const TrainConfig& cfg,
                                  const LossConfig& loss_cfg) {
  std::vector<int> pool = eligible;
  std::shuffle(pool.begin(), pool.end(), rng);
  if (static_cast<int>(pool.size()) > cfg.batch_size) pool.resize(cfg.batch_size);
  Batch batch;
  detail::fill_batch_structure(corpus, std::move(pool), rng, loss_cfg, cfg.uniform_label_samples, batch);
  return batch;
}

// Recursive balanced 2-means over unit-sphere embeddings. Each split
// assigns exactly half the ids (by cosine margin to the two means) to
// each side, recursing until parts are at most `cluster_size`.
inline std::vector<std::vector<int>> build_clusters(
    const std::vector<std::vector<double>>& embeddings, const std::vector<int>& ids,
    int cluster_size, std::uint64_t seed) {
  if (cluster_size < 1) throw std::invalid_argument("build_clusters: cluster_size must be >= 1");
  std::vector<std::vector<int>> out;
  std::mt19937_64 rng(seed);

  const std::function<void(std::vector<int>)> split = [&](std::vector<int> part) {
    if (static_cast<int>(part.size()) <= cluster_size) {
      out.push_back(std::move(part));
      return;
    }
    const std::size_t dim = embeddings[part[0]].size();
    std::uniform_int_distribution<std::size_t> pick(0, part.size() - 1);
    std::vector<double> c0 = embeddings[part[pick(rng)]];
    std::vector<double> c1 = embeddings[part[pick(rng)]];
    const auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
      double s = 0.0;
      for (std::size_t d = 0; d < dim; ++d) s += a[d] * b[d];
      return s;
    };
    std::vector<double> margin(part.size());
    for (int iter = 0; iter < 10; ++iter) {
      for (std::size_t i = 0; i < part.size(); ++i)
        margin[i] = dot(embeddings[part[i]], c0) - dot(embeddings[part[i]], c1);
      // balanced assignment: top half by margin goes to c0
      std::vector<std::size_t> order(part.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (margin[a] != margin[b]) return margin[a] > margin[b];
        return part[a] < part[b];
      });
      const std::size_t half = part.size() / 2 + part.size() % 2;
      std::vector<double> n0(dim, 0.0), n1(dim, 0.0);
      for (std::size_t r = 0; r < order.size(); ++r) {
        const auto& e = embeddings[part[order[r]]];
        auto& acc = r < half ? n0 : n1;
        for (std::size_t d = 0; d < dim; ++d) acc[d] += e[d];
      }
      const auto normalize = [&](std::vector<double>& v) {
        double n = std::sqrt(dot(v, v));
        if (n > 1e-12)
          for (auto& x : v) x /= n;
      };
      normalize(n0);
      normalize(n1);
      if (iter == 9) {
        std::vector<int> left, right;
        for (std::size_t r = 0; r < order.size(); ++r)
          (r < half ? left : right).push_back(part[order[r]]);
        std::sort(left.begin(), left.end());
        std::sort(right.begin(), right.end());
        split(std::move(left));
        split(std::move(right));
        return;
      }
      c0 = std::move(n0);
      c1 = std::move(n1);
    }
  };
  split(ids);
  return out;
}

// Draws ceil(S/C) random clusters, unions their queries, truncates to S.
inline Batch sample_batch_clustered(const Corpus& corpus,
                                    const std::vector<std::vector<int>>& clusters,
                                    std::mt19937_64& rng, const TrainConfig& cfg,
                                    const LossConfig& loss_cfg, int cluster_size) {
  const int want = (cfg.batch_size + cluster_size - 1) / cluster_size;
  std::vector<std::size_t> order(clusters.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> pool;
  for (int c = 0; c < std::min<int>(want, static_cast<int>(order.size())); ++c)
    pool.insert(pool.end(), clusters[order[c]].begin(), clusters[order[c]].end());
  std::shuffle(pool.begin(), pool.end(), rng);
  if (static_cast<int>(pool.size()) > cfg.batch_size) pool.resize(cfg.batch_size);
  Batch batch;
  detail::fill_batch_structure(corpus, std::move(pool), rng, loss_cfg, cfg.uniform_label_samples, batch);
  return batch;
}

// ---------------------------------------------------------------------
// Training loop

struct EpochLog {
  int epoch = 0;
  double objective = 0.0;
  double task_loss = 0.0;
  double reg_x = 0.0;
  double reg_z = 0.0;
  long edges_pruned = 0;
};

struct TrainResult {
  EncoderParams params;
  std::vector<EpochLog> history;
  Corpus augmented;  // post-RWR reference graphs (pre-pruning)
  Corpus pruned;     // working graphs as of the last prune pass
};

inline void write_history_csv(std::ostream& os, const std::vector<EpochLog>& history) {
  os << "epoch,objective,task_loss,reg_x,reg_z,edges_pruned\n";
  for (const auto& h : history)
    os << h.epoch << ',' << h.objective << ',' << h.task_loss << ',' << h.reg_x << ','
       << h.reg_z << ',' << h.edges_pruned << '\n';
}

namespace detail {

inline std::vector<std::vector<double>> embed_records(const std::vector<TextRecord>& recs,
                                                      const EncoderParams& params,
                                                      const TokenizerConfig& tok) {
  std::vector<std::vector<double>> out;
  out.reserve(recs.size());
  for (const auto& r : recs) out.push_back(encode(tokenize(r.text, tok), params));
  return out;
}

}  // namespace detail

// Warmup on augmented unpruned graphs, then alternating cycles of
// refinement and re-pruning (each cycle re-prunes from the augmented
// reference, so early prunes are not permanent). Stops at total_epochs
// or when the objective settles across one cycle.
inline TrainResult train(const Corpus& corpus, const TrainConfig& cfg,
                         const LossConfig& loss_cfg_in, const TokenizerConfig& tok,
                         EncoderParams params, const WalkConfig& walk = {},
                         const std::function<void(const EpochLog&)>& on_epoch = nullptr) {
  cfg.validate();
  corpus.validate();
  LossConfig loss_cfg = loss_cfg_in;

  TrainResult result;
  result.augmented = corpus;
  if (cfg.rwr_augment) {
    WalkConfig wc = walk;
    wc.seed = walk.seed != 0 ? walk.seed : cfg.seed;
    for (auto& set : result.augmented.anchor_sets) {
      set.point_graph = rwr_augment(set.point_graph, build_anchor_anchor(set.point_graph), wc);
      set.label_graph = rwr_augment(set.label_graph, build_anchor_anchor(set.label_graph), wc);
    }
  }
  Corpus active = result.augmented;

  if (cfg.aug_gt) {
    // label-propagated ground truth, plain task loss
    for (const auto& set : active.anchor_sets)
      active.ground_truth =
          label_propagate_augment(active.ground_truth, set.point_graph, set.label_graph);
    result.augmented.ground_truth = active.ground_truth;
    loss_cfg.lambda_x.assign(std::max<std::size_t>(1, active.anchor_sets.size()), 0.0);
    loss_cfg.lambda_z = loss_cfg.lambda_x;
  }

  std::vector<int> eligible;
  for (int i = 0; i < active.num_points(); ++i)
    if (!active.ground_truth.row_index[i].empty()) eligible.push_back(i);
  if (eligible.empty()) throw std::invalid_argument("train: no queries with positives");

  std::mt19937_64 rng(cfg.seed);
  OptimizerState opt;
  opt.kind = cfg.optimizer;

  const int batches_per_epoch =
      std::max(1, (static_cast<int>(eligible.size()) + cfg.batch_size - 1) / cfg.batch_size);

  const auto prune_active = [&]() -> long {
    const auto anchor_embs = [&](const AnchorSet& set) {
      return detail::embed_records(set.anchors, params, tok);
    };
    const auto point_embs = detail::embed_records(active.points, params, tok);
    const auto label_embs = detail::embed_records(active.labels, params, tok);
    long pruned = 0;
    for (std::size_t s = 0; s < active.anchor_sets.size(); ++s) {
      const auto& ref = result.augmented.anchor_sets[s];
      const auto aemb = anchor_embs(ref);
      auto& dst = active.anchor_sets[s];
      dst.point_graph = prune_edges(ref.point_graph, point_embs, aemb);
      dst.label_graph = prune_edges(ref.label_graph, label_embs, aemb);
      pruned += static_cast<long>(ref.point_graph.adjacency.nnz() - dst.point_graph.adjacency.nnz());
      pruned += static_cast<long>(ref.label_graph.adjacency.nnz() - dst.label_graph.adjacency.nnz());
    }
    return pruned;
  };

  std::vector<std::vector<int>> clusters;
  int cluster_size = cfg.initial_cluster_size;
  double cycle_objective = std::numeric_limits<double>::quiet_NaN();
  long edges_pruned_now = 0;

  for (int epoch = 1; epoch <= cfg.total_epochs; ++epoch) {
    if (cfg.initial_cluster_size > 0) {
      const int doubled = cfg.initial_cluster_size
                          << ((epoch - 1) / cfg.cluster_size_doubling_epochs);
      const bool refresh = (epoch - 1) % cfg.cluster_refresh_epochs == 0 || doubled != cluster_size;
      cluster_size = std::min(doubled, cfg.batch_size - 1);
      if (refresh || clusters.empty()) {
        std::vector<std::vector<double>> embs(active.num_points());
        for (int q : eligible) embs[q] = encode(tokenize(active.points[q].text, tok), params);
        clusters = build_clusters(embs, eligible, cluster_size,
                                  detail::mix_seed(cfg.seed, 7000 + epoch));
      }
    }

    EpochLog log;
    log.epoch = epoch;
    log.edges_pruned = edges_pruned_now;
    for (int b = 0; b < batches_per_epoch; ++b) {
      Batch batch = cfg.initial_cluster_size > 0
                        ? sample_batch_clustered(active, clusters, rng, cfg, loss_cfg, cluster_size)
                        : sample_batch_uniform(active, eligible, rng, cfg, loss_cfg);
      auto obj = total_objective(active, batch, params, tok, loss_cfg, &result.augmented);
      if (!std::isfinite(obj.total)) {
        std::ostringstream diag;
        diag << "train: non-finite loss at epoch " << epoch << " batch " << b << "; queries:";
        for (int q : batch.query_ids) diag << ' ' << q;
        throw std::runtime_error(diag.str());
      }
      optimizer_step(params, obj.grads, opt, cfg.learning_rate);
      log.objective += obj.total;
      log.task_loss += obj.task;
      for (std::size_t t = 0; t < obj.reg_x.size(); ++t) {
        log.reg_x += obj.reg_x[t];
        log.reg_z += obj.reg_z[t];
      }
    }
    result.history.push_back(log);
    if (on_epoch) on_epoch(log);
    edges_pruned_now = 0;

    // schedule boundaries: end of warmup, then end of each refine cycle
    const bool cycle_end =
        epoch == cfg.warmup_epochs ||
        (epoch > cfg.warmup_epochs &&
         (epoch - cfg.warmup_epochs) % cfg.refine_epochs_per_cycle == 0);
    if (cycle_end && epoch < cfg.total_epochs) {
      if (cfg.prune) edges_pruned_now = prune_active();
      if (epoch > cfg.warmup_epochs) {
        const double prev = cycle_objective;
        if (std::isfinite(prev) &&
            std::abs(prev - log.objective) < 1e-4 * std::max(std::abs(prev), 1e-12))
          break;  // converged across a cycle
      }
      cycle_objective = log.objective;
    }
  }

  result.params = std::move(params);
  result.pruned = std::move(active);
  return result;
}

}  // namespace ramen

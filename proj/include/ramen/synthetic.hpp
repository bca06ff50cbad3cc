#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "ramen/corpus.hpp"

namespace ramen {

// Planted-topic corpus: every point/label/anchor belongs to one topic,
// texts are drawn from that topic's vocabulary slice, and all structure
// (ground truth, anchor edges) is intra-topic before noise.
struct SyntheticSpec {
  int num_topics = 10;
  int points_per_topic = 20;
  int labels_per_topic = 5;
  int anchors_per_topic = 5;
  double tail_fraction = 0.0;     // labels receiving <= 1 training edge
  double graph_noise_rate = 0.0;  // prob. an anchor edge is rewired wrongly
  int vocab_size = 2000;
  int tokens_per_text = 6;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_topics < 1 || points_per_topic < 1 || labels_per_topic < 1 ||
        anchors_per_topic < 1 || vocab_size < num_topics || tokens_per_text < 1)
      throw std::invalid_argument("synthetic spec: counts must be >= 1 (vocab >= topics)");
    if (tail_fraction < 0.0 || tail_fraction > 1.0)
      throw std::invalid_argument("synthetic spec: tail_fraction out of [0,1]");
    if (graph_noise_rate < 0.0 || graph_noise_rate > 1.0)
      throw std::invalid_argument("synthetic spec: graph_noise_rate out of [0,1]");
  }
};

namespace detail {

// topic < 0 draws from the whole vocabulary: text that carries no topic
// signal, so only graph metadata can place the item.
inline std::string synth_text(int topic, const SyntheticSpec& spec, std::mt19937_64& rng) {
  const int slice = spec.vocab_size / spec.num_topics;
  const int lo = topic < 0 ? 0 : topic * slice;
  const int hi = topic < 0 ? spec.vocab_size - 1 : lo + slice - 1;
  std::uniform_int_distribution<int> pick(lo, hi);
  std::string text;
  for (int k = 0; k < spec.tokens_per_text; ++k) {
    if (k) text += ' ';
    text += 'w';
    text += std::to_string(pick(rng));
  }
  return text;
}

// Rewires each edge, with probability rate, to a uniformly random anchor
// of a different topic.
inline void add_noise(SparseBinaryMatrix& g, double rate, int anchors_per_topic,
                      int num_topics, std::mt19937_64& rng) {
  if (rate <= 0.0 || num_topics < 2) return;
  const int total = anchors_per_topic * num_topics;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, total - 1);
  for (auto& ri : g.row_index) {
    bool changed = false;
    for (auto& a : ri) {
      if (coin(rng) < rate) {
        const int own_topic = a / anchors_per_topic;
        int b;
        do {
          b = pick(rng);
        } while (b / anchors_per_topic == own_topic);
        a = b;
        changed = true;
      }
    }
    if (changed) {
      std::sort(ri.begin(), ri.end());
      ri.erase(std::unique(ri.begin(), ri.end()), ri.end());
    }
  }
}

}  // namespace detail

inline Corpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  const int n = spec.num_topics * spec.points_per_topic;
  const int l = spec.num_topics * spec.labels_per_topic;
  const int m = spec.num_topics * spec.anchors_per_topic;

  Corpus corpus;
  corpus.points.reserve(n);
  corpus.labels.reserve(l);
  // Tail labels get a private token instead of topic vocabulary: their
  // text alone says nothing about where they belong, so placing them well
  // requires signal from the metadata graphs.
  const int tail_text_cut =
      static_cast<int>(spec.tail_fraction * spec.labels_per_topic + 0.5);
  for (int t = 0; t < spec.num_topics; ++t)
    for (int j = 0; j < spec.points_per_topic; ++j) {
      std::string text;
      if (j == spec.points_per_topic - 1 && tail_text_cut > 0) {
        // The last point of each topic is a probe written in its topic's
        // tail-label tokens. It only retrieves well when those labels have
        // been steered to the right region by the label graph.
        for (int k = 0; k < tail_text_cut; ++k)
          text += (k ? " u" : "u") + std::to_string(t * spec.labels_per_topic + k);
      } else {
        text = detail::synth_text(t, spec, rng);
      }
      corpus.points.push_back({t * spec.points_per_topic + j, std::move(text)});
    }
  for (int t = 0; t < spec.num_topics; ++t)
    for (int j = 0; j < spec.labels_per_topic; ++j) {
      const int id = t * spec.labels_per_topic + j;
      std::string text;
      if (j < tail_text_cut) {
        // Private token plus a single topic word: too weak to rank the label
        // by text alone, but enough to tell correct graph edges from noise.
        const int slice = spec.vocab_size / spec.num_topics;
        std::uniform_int_distribution<int> pick(t * slice, t * slice + slice - 1);
        text = "u" + std::to_string(id) + " w" + std::to_string(pick(rng));
      } else {
        text = detail::synth_text(t, spec, rng);
      }
      corpus.labels.push_back({id, std::move(text)});
    }

  AnchorSet set;
  set.name = "topic";
  set.anchors.reserve(m);
  for (int t = 0; t < spec.num_topics; ++t)
    for (int j = 0; j < spec.anchors_per_topic; ++j)
      set.anchors.push_back({t * spec.anchors_per_topic + j, detail::synth_text(t, spec, rng)});

  // Ground truth: per topic, the first ceil(tail_fraction * labels) labels
  // are tail (exactly one positive point); every other label is relevant
  // to every point of its topic, so ranking quality reduces to topic
  // identification plus tail coverage.
  const int tail_per_topic =
      static_cast<int>(spec.tail_fraction * spec.labels_per_topic + 0.5);
  corpus.ground_truth = SparseBinaryMatrix(n, l);
  for (int t = 0; t < spec.num_topics; ++t) {
    const int p0 = t * spec.points_per_topic;
    const int l0 = t * spec.labels_per_topic;
    for (int j = 0; j < spec.labels_per_topic; ++j) {
      const int label = l0 + j;
      if (j < tail_per_topic) {
        // Tail labels hang off the topic's last point, the region holdout
        // splits carve off first, so they are rare-to-unseen in training.
        corpus.ground_truth.row_index[p0 + spec.points_per_topic - 1].push_back(label);
      } else {
        for (int i = 0; i < spec.points_per_topic; ++i)
          corpus.ground_truth.row_index[p0 + i].push_back(label);
      }
    }
    // every point needs at least one positive for batch sampling
    for (int i = 0; i < spec.points_per_topic; ++i) {
      auto& ri = corpus.ground_truth.row_index[p0 + i];
      if (ri.empty()) {
        std::uniform_int_distribution<int> pick(tail_per_topic, spec.labels_per_topic - 1);
        ri.push_back(l0 + (tail_per_topic < spec.labels_per_topic ? pick(rng) : 0));
      }
      std::sort(ri.begin(), ri.end());
      ri.erase(std::unique(ri.begin(), ri.end()), ri.end());
    }
  }

  // Anchor graphs: two intra-topic edges per item, then noise.
  const auto build_graph = [&](int items, int per_topic) {
    SparseBinaryMatrix g(items, m);
    for (int t = 0; t < spec.num_topics; ++t) {
      const int a0 = t * spec.anchors_per_topic;
      std::uniform_int_distribution<int> pick(0, spec.anchors_per_topic - 1);
      for (int j = 0; j < per_topic; ++j) {
        auto& ri = g.row_index[t * per_topic + j];
        for (int e = 0; e < 2; ++e) ri.push_back(a0 + pick(rng));
        std::sort(ri.begin(), ri.end());
        ri.erase(std::unique(ri.begin(), ri.end()), ri.end());
      }
    }
    detail::add_noise(g, spec.graph_noise_rate, spec.anchors_per_topic, spec.num_topics, rng);
    return g;
  };
  set.point_graph = AnchorGraph(build_graph(n, spec.points_per_topic));
  set.label_graph = AnchorGraph(build_graph(l, spec.labels_per_topic));
  corpus.anchor_sets.push_back(std::move(set));

  corpus.validate();
  return corpus;
}

}  // namespace ramen

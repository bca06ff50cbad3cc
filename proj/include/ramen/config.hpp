#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ramen/encoder.hpp"
#include "ramen/graph.hpp"
#include "ramen/objective.hpp"
#include "ramen/synthetic.hpp"
#include "ramen/trainer.hpp"

namespace ramen {

// Everything a run needs, settable from a flat `key = value` file.
struct RunConfig {
  TrainConfig train;
  LossConfig loss;
  WalkConfig walk;
  TokenizerConfig tokenizer;
  SyntheticSpec synth;
  int hidden = 64;  // encoder H
  int dim = 64;     // encoder D
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

// Lines are `key = value`; blank lines and lines starting with '#' are
// skipped; unknown keys are an error naming the key and line.
inline RunConfig parse_config(std::istream& in, const std::string& name = "<config>") {
  RunConfig cfg;
  std::map<std::string, std::function<void(const std::string&)>> setters;
  const auto num = [](const std::string& v) { return std::stod(v); };
  const auto numeric_key = [&](const std::string& key, auto& dst) {
    setters[key] = [&dst, num](const std::string& v) { dst = static_cast<std::decay_t<decltype(dst)>>(num(v)); };
  };

  numeric_key("batch_size", cfg.train.batch_size);
  numeric_key("total_epochs", cfg.train.total_epochs);
  numeric_key("learning_rate", cfg.train.learning_rate);
  numeric_key("warmup_epochs", cfg.train.warmup_epochs);
  numeric_key("refine_epochs_per_cycle", cfg.train.refine_epochs_per_cycle);
  numeric_key("cluster_refresh_epochs", cfg.train.cluster_refresh_epochs);
  numeric_key("cluster_size_doubling_epochs", cfg.train.cluster_size_doubling_epochs);
  numeric_key("initial_cluster_size", cfg.train.initial_cluster_size);
  numeric_key("uniform_label_samples", cfg.train.uniform_label_samples);
  numeric_key("seed", cfg.train.seed);
  setters["optimizer"] = [&](const std::string& v) {
    if (v == "sgd") cfg.train.optimizer = OptimizerKind::Sgd;
    else if (v == "adam") cfg.train.optimizer = OptimizerKind::Adam;
    else throw std::runtime_error("optimizer must be sgd or adam, got '" + v + "'");
  };

  numeric_key("margin", cfg.loss.margin);
  const auto num_list = [](const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string piece;
    while (std::getline(ss, piece, ',')) out.push_back(std::stod(detail::trim(piece)));
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
  };
  setters["lambda_x"] = [&, num_list](const std::string& v) { cfg.loss.lambda_x = num_list(v); };
  setters["lambda_z"] = [&, num_list](const std::string& v) { cfg.loss.lambda_z = num_list(v); };
  numeric_key("num_positives", cfg.loss.num_positives);
  numeric_key("num_hard_negatives", cfg.loss.num_hard_negatives);

  numeric_key("walk_hops", cfg.walk.hops);
  numeric_key("restart_prob", cfg.walk.restart_prob);
  numeric_key("top_k_keep", cfg.walk.top_k_keep);
  numeric_key("walk_seed", cfg.walk.seed);

  numeric_key("hash_buckets", cfg.tokenizer.hash_buckets);
  numeric_key("max_len", cfg.tokenizer.max_len);
  setters["lowercase"] = [&](const std::string& v) { cfg.tokenizer.lowercase = v == "1" || v == "true"; };
  setters["ngram"] = [&](const std::string& v) {
    if (v == "unigram") cfg.tokenizer.ngram = NgramMode::WordUnigram;
    else if (v == "trigram") cfg.tokenizer.ngram = NgramMode::CharTrigram;
    else throw std::runtime_error("ngram must be unigram or trigram, got '" + v + "'");
  };

  numeric_key("hidden", cfg.hidden);
  numeric_key("dim", cfg.dim);

  numeric_key("num_topics", cfg.synth.num_topics);
  numeric_key("points_per_topic", cfg.synth.points_per_topic);
  numeric_key("labels_per_topic", cfg.synth.labels_per_topic);
  numeric_key("anchors_per_topic", cfg.synth.anchors_per_topic);
  numeric_key("tail_fraction", cfg.synth.tail_fraction);
  numeric_key("graph_noise_rate", cfg.synth.graph_noise_rate);
  numeric_key("vocab_size", cfg.synth.vocab_size);
  numeric_key("tokens_per_text", cfg.synth.tokens_per_text);
  numeric_key("synth_seed", cfg.synth.seed);

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(name + ": line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw std::invalid_argument(name + ": line " + std::to_string(lineno) + ": unknown key '" +
                                  key + "'");
    try {
      it->second(value);
    } catch (const std::exception& e) {
      throw std::invalid_argument(name + ": line " + std::to_string(lineno) +
                                  ": bad value for '" + key + "': " + e.what());
    }
  }
  cfg.synth.seed = cfg.synth.seed ? cfg.synth.seed : cfg.train.seed;
  return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return parse_config(in, path);
}

}  // namespace ramen

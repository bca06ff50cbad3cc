#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "ramen/corpus.hpp"
#include "ramen/sparse.hpp"

namespace ramen {

// On-disk dataset layout:
//   points.txt, labels.txt          id<TAB>text
//   ground_truth.txt                sparse N x L
//   sets.txt                        one anchor-set name per line
//   anchors_<name>.txt              anchor texts
//   point_graph_<name>.txt          sparse N x M (+ optional .weights)
//   label_graph_<name>.txt          sparse L x M (+ optional .weights)
//   test_ids.txt                    optional, one point id per line

namespace detail {

inline std::vector<std::vector<double>> load_weight_values(const std::string& path,
                                                           const SparseBinaryMatrix& shape) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);  // header, shape already known
  std::vector<std::vector<double>> weights(shape.rows);
  for (int i = 0; i < shape.rows; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error(path + ": truncated weights file");
    std::istringstream row(line);
    std::string pair;
    while (row >> pair) {
      const auto colon = pair.find(':');
      weights[i].push_back(std::stod(pair.substr(colon + 1)));
    }
    if (weights[i].size() != shape.row_index[i].size())
      throw std::runtime_error(path + ": weights row " + std::to_string(i) +
                               " does not align with adjacency");
  }
  return weights;
}

inline AnchorGraph load_anchor_graph(const std::string& base) {
  AnchorGraph g(load_sparse_matrix(base + ".txt"));
  if (std::filesystem::exists(base + ".weights"))
    g.weights = load_weight_values(base + ".weights", g.adjacency);
  return g;
}

inline void save_anchor_graph(const std::string& base, const AnchorGraph& g) {
  save_sparse_matrix(base + ".txt", g.adjacency);
  if (g.has_weights())
    save_sparse_matrix(base + ".weights", g.adjacency, &g.weights);
  else
    std::filesystem::remove(base + ".weights");
}

}  // namespace detail

inline void save_dataset(const std::string& dir, const Corpus& corpus) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_texts(dir + "/points.txt", corpus.points);
  save_texts(dir + "/labels.txt", corpus.labels);
  save_sparse_matrix(dir + "/ground_truth.txt", corpus.ground_truth);
  std::ofstream sets(dir + "/sets.txt");
  for (const auto& set : corpus.anchor_sets) {
    sets << set.name << '\n';
    save_texts(dir + "/anchors_" + set.name + ".txt", set.anchors);
    detail::save_anchor_graph(dir + "/point_graph_" + set.name, set.point_graph);
    detail::save_anchor_graph(dir + "/label_graph_" + set.name, set.label_graph);
  }
}

inline Corpus load_dataset(const std::string& dir) {
  Corpus corpus;
  corpus.points = load_texts(dir + "/points.txt");
  corpus.labels = load_texts(dir + "/labels.txt");
  corpus.ground_truth = load_sparse_matrix(dir + "/ground_truth.txt");
  std::ifstream sets(dir + "/sets.txt");
  if (!sets) throw std::runtime_error("cannot open " + dir + "/sets.txt");
  std::string name;
  while (std::getline(sets, name)) {
    if (name.empty()) continue;
    AnchorSet set;
    set.name = name;
    set.anchors = load_texts(dir + "/anchors_" + name + ".txt");
    set.point_graph = detail::load_anchor_graph(dir + "/point_graph_" + name);
    set.label_graph = detail::load_anchor_graph(dir + "/label_graph_" + name);
    corpus.anchor_sets.push_back(std::move(set));
  }
  corpus.validate();
  return corpus;
}

inline void save_test_ids(const std::string& dir, const std::set<int>& ids) {
  std::ofstream out(dir + "/test_ids.txt");
  for (int id : ids) out << id << '\n';
}

inline std::set<int> load_test_ids(const std::string& dir) {
  std::set<int> ids;
  std::ifstream in(dir + "/test_ids.txt");
  if (!in) return ids;
  int id;
  while (in >> id) ids.insert(id);
  return ids;
}

}  // namespace ramen

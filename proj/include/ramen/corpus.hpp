#pragma once

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ramen/graph.hpp"
#include "ramen/sparse.hpp"

namespace ramen {

struct TextRecord {
  int id = 0;
  std::string text;

  bool operator==(const TextRecord&) const = default;
};

// One family of metadata: anchor texts plus the item->anchor and
// label->anchor bipartite graphs sharing the same anchor columns.
struct AnchorSet {
  std::string name;
  std::vector<TextRecord> anchors;
  AnchorGraph point_graph;  // N x M
  AnchorGraph label_graph;  // L x M
};

struct Corpus {
  std::vector<TextRecord> points;
  std::vector<TextRecord> labels;
  SparseBinaryMatrix ground_truth;  // N x L, positives only
  std::vector<AnchorSet> anchor_sets;

  int num_points() const { return static_cast<int>(points.size()); }
  int num_labels() const { return static_cast<int>(labels.size()); }

  void validate() const {
    ground_truth.validate();
    if (ground_truth.rows != num_points())
      throw std::invalid_argument("corpus: ground truth rows != point count");
    if (ground_truth.cols != num_labels())
      throw std::invalid_argument("corpus: ground truth cols != label count");
    for (const auto& set : anchor_sets) {
      if (set.name.empty())
        throw std::invalid_argument("corpus: anchor set with empty name");
      const int m = static_cast<int>(set.anchors.size());
      set.point_graph.validate();
      set.label_graph.validate();
      if (set.point_graph.adjacency.rows != num_points() || set.point_graph.adjacency.cols != m)
        throw std::invalid_argument("corpus: point graph dims mismatch in set " + set.name);
      if (set.label_graph.adjacency.rows != num_labels() || set.label_graph.adjacency.cols != m)
        throw std::invalid_argument("corpus: label graph dims mismatch in set " + set.name);
    }
    check_ids(points, "points");
    check_ids(labels, "labels");
    for (const auto& set : anchor_sets) check_ids(set.anchors, "anchors:" + set.name);
  }

 private:
  static void check_ids(const std::vector<TextRecord>& recs, const std::string& what) {
    for (std::size_t i = 0; i < recs.size(); ++i)
      if (recs[i].id != static_cast<int>(i))
        throw std::invalid_argument("corpus: non-dense ids in " + what);
  }
};

// Two accepted layouts per file: "<id>\t<text>" with ids 0..n-1 in order,
// or raw lines where the line number is the id. A file whose first line
// contains a tab is read in TSV mode.
inline std::vector<TextRecord> load_texts(std::istream& in, const std::string& name = "<stream>") {
  std::vector<TextRecord> out;
  std::string line;
  bool tsv = false;
  bool first = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      tsv = line.find('\t') != std::string::npos;
      first = false;
    }
    if (tsv) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw std::runtime_error(name + ": line " + std::to_string(lineno + 1) +
                                 ": missing tab in TSV mode");
      int id = 0;
      try {
        id = std::stoi(line.substr(0, tab));
      } catch (const std::exception&) {
        throw std::runtime_error(name + ": line " + std::to_string(lineno + 1) + ": bad id");
      }
      if (id != lineno)
        throw std::runtime_error(name + ": line " + std::to_string(lineno + 1) +
                                 ": non-contiguous id " + std::to_string(id));
      out.push_back({id, line.substr(tab + 1)});
    } else {
      out.push_back({lineno, line});
    }
    ++lineno;
  }
  return out;
}

inline std::vector<TextRecord> load_texts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_texts(in, path);
}

inline void save_texts(std::ostream& out, const std::vector<TextRecord>& recs) {
  for (const auto& r : recs) out << r.id << '\t' << r.text << '\n';
}

inline void save_texts(const std::string& path, const std::vector<TextRecord>& recs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_texts(out, recs);
}

// Removes test points from the graph node set: their point-graph rows are
// emptied and any anchor whose text equals a test point's text is
// disconnected from both graphs. Ground truth is left alone.
inline Corpus isolate_test_points(const Corpus& corpus, const std::set<int>& test_ids) {
  for (int id : test_ids)
    if (id < 0 || id >= corpus.num_points())
      throw std::out_of_range("isolate_test_points: id " + std::to_string(id) + " out of range");

  std::unordered_set<std::string> test_texts;
  for (int id : test_ids) test_texts.insert(corpus.points[id].text);

  Corpus out = corpus;
  for (auto& set : out.anchor_sets) {
    for (int id : test_ids) {
      set.point_graph.adjacency.row_index[id].clear();
      if (set.point_graph.has_weights()) set.point_graph.weights[id].clear();
    }
    std::unordered_set<int> dead_anchors;
    for (const auto& a : set.anchors)
      if (test_texts.count(a.text)) dead_anchors.insert(a.id);
    if (!dead_anchors.empty()) {
      set.point_graph.drop_columns(dead_anchors);
      set.label_graph.drop_columns(dead_anchors);
    }
  }
  return out;
}

// Training-side view of a split corpus: test points lose their graph
// edges (isolate_test_points) and their ground-truth rows, so they are
// never sampled as training queries.
inline Corpus training_split(const Corpus& corpus, const std::set<int>& test_ids) {
  Corpus out = isolate_test_points(corpus, test_ids);
  for (int id : test_ids) out.ground_truth.row_index[id].clear();
  return out;
}

}  // namespace ramen

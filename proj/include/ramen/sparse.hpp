#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ramen {

// Binary sparse matrix in row-index form. Values are implicitly 1;
// absence encodes 0 (or -1 for ground-truth label vectors).
struct SparseBinaryMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<int>> row_index;  // per row, strictly increasing cols

  SparseBinaryMatrix() = default;
  SparseBinaryMatrix(int r, int c) : rows(r), cols(c), row_index(r) {}

  bool has(int r, int c) const {
    const auto& ri = row_index[r];
    return std::binary_search(ri.begin(), ri.end(), c);
  }

  std::size_t nnz() const {
    std::size_t n = 0;
    for (const auto& ri : row_index) n += ri.size();
    return n;
  }

  void validate() const {
    if (rows < 0 || cols < 0)
      throw std::invalid_argument("sparse matrix: negative dimension");
    if (static_cast<int>(row_index.size()) != rows)
      throw std::invalid_argument("sparse matrix: row count mismatch");
    for (const auto& ri : row_index) {
      for (std::size_t j = 0; j < ri.size(); ++j) {
        if (ri[j] < 0 || ri[j] >= cols)
          throw std::out_of_range("sparse matrix: column index out of range");
        if (j > 0 && ri[j] <= ri[j - 1])
          throw std::invalid_argument("sparse matrix: columns not strictly increasing");
      }
    }
  }

  bool operator==(const SparseBinaryMatrix& o) const {
    return rows == o.rows && cols == o.cols && row_index == o.row_index;
  }
};

// Format: first line "R C", then R lines of space-separated "col:val" pairs.
// val is parsed but only presence matters; columns may be unsorted on disk.
inline SparseBinaryMatrix load_sparse_matrix(std::istream& in, const std::string& name = "<stream>") {
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(name + ": empty file, expected header 'R C'");
  std::istringstream header(line);
  long r = -1, c = -1;
  if (!(header >> r >> c) || r < 0 || c < 0)
    throw std::runtime_error(name + ": bad header '" + line + "'");

  SparseBinaryMatrix m(static_cast<int>(r), static_cast<int>(c));
  for (int i = 0; i < m.rows; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error(name + ": header promises " + std::to_string(r) +
                               " rows, file has " + std::to_string(i));
    std::istringstream row(line);
    std::string pair;
    auto& ri = m.row_index[i];
    while (row >> pair) {
      const auto colon = pair.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error(name + ": row " + std::to_string(i) +
                                 ": expected col:val, got '" + pair + "'");
      const int col = std::stoi(pair.substr(0, colon));
      (void)std::stod(pair.substr(colon + 1));  // value parsed, presence kept
      if (col < 0 || col >= m.cols)
        throw std::out_of_range(name + ": row " + std::to_string(i) + ": column " +
                                std::to_string(col) + " out of range [0," +
                                std::to_string(m.cols) + ")");
      ri.push_back(col);
    }
    std::sort(ri.begin(), ri.end());
    ri.erase(std::unique(ri.begin(), ri.end()), ri.end());
  }
  // trailing non-empty rows mean the header lied
  while (std::getline(in, line)) {
    if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos)
      throw std::runtime_error(name + ": more data rows than header declares");
  }
  return m;
}

inline SparseBinaryMatrix load_sparse_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_sparse_matrix(in, path);
}

// Writes sorted columns with val=1. An optional parallel value table
// (same shape as row_index) substitutes real values, used for weights
// and prediction scores.
inline void save_sparse_matrix(std::ostream& out, const SparseBinaryMatrix& m,
                               const std::vector<std::vector<double>>* values = nullptr) {
  out << m.rows << ' ' << m.cols << '\n';
  for (int i = 0; i < m.rows; ++i) {
    const auto& ri = m.row_index[i];
    for (std::size_t j = 0; j < ri.size(); ++j) {
      if (j) out << ' ';
      out << ri[j] << ':';
      if (values)
        out << (*values)[i][j];
      else
        out << 1;
    }
    out << '\n';
  }
}

inline void save_sparse_matrix(const std::string& path, const SparseBinaryMatrix& m,
                               const std::vector<std::vector<double>>* values = nullptr) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_sparse_matrix(out, m, values);
}

}  // namespace ramen

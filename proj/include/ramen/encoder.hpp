#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ramen {

enum class NgramMode { WordUnigram, CharTrigram };

struct TokenizerConfig {
  int hash_buckets = 4096;  // V
  int max_len = 32;         // L_max
  bool lowercase = true;
  NgramMode ngram = NgramMode::WordUnigram;
};

namespace detail {

inline std::uint64_t fnv1a_64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

inline std::vector<int> tokenize(std::string_view text, const TokenizerConfig& cfg) {
  std::string buf;
  if (cfg.lowercase) {
    buf.reserve(text.size());
    for (char c : text) buf.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    text = buf;
  }
  std::vector<int> ids;
  const auto push = [&](std::string_view unit) {
    if (static_cast<int>(ids.size()) < cfg.max_len)
      ids.push_back(static_cast<int>(detail::fnv1a_64(unit) % cfg.hash_buckets));
  };
  if (cfg.ngram == NgramMode::WordUnigram) {
    std::size_t i = 0;
    while (i < text.size() && static_cast<int>(ids.size()) < cfg.max_len) {
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      std::size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j > i) push(text.substr(i, j - i));
      i = j;
    }
  } else {
    for (std::size_t i = 0; i + 3 <= text.size() && static_cast<int>(ids.size()) < cfg.max_len; ++i)
      push(text.substr(i, 3));
  }
  return ids;
}

// Hashing bag-of-embeddings encoder: token-embedding lookup, mean pool,
// linear projection, L2 normalization onto the unit sphere.
struct EncoderParams {
  int vocab = 0;   // V
  int hidden = 0;  // H
  int dim = 0;     // D
  std::vector<double> embed_table;  // V x H row-major
  std::vector<double> proj;         // H x D row-major

  const double* embed_row(int t) const { return embed_table.data() + static_cast<std::size_t>(t) * hidden; }
  double* embed_row(int t) { return embed_table.data() + static_cast<std::size_t>(t) * hidden; }
};

inline EncoderParams init_params(int vocab, int hidden, int dim, std::uint64_t seed) {
  if (vocab < 2 || hidden < 1 || dim < 2) throw std::invalid_argument("init_params: bad dims");
  EncoderParams p;
  p.vocab = vocab;
  p.hidden = hidden;
  p.dim = dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-bound, bound);
  p.embed_table.resize(static_cast<std::size_t>(vocab) * hidden);
  p.proj.resize(static_cast<std::size_t>(hidden) * dim);
  for (auto& x : p.embed_table) x = u(rng);
  for (auto& x : p.proj) x = u(rng);
  return p;
}

// Forward pass. Empty token lists (and degenerate near-zero poolings)
// encode as the first basis vector so rare texts never abort training.
inline std::vector<double> encode(const std::vector<int>& tokens, const EncoderParams& params) {
  std::vector<double> out(params.dim, 0.0);
  if (tokens.empty()) {
    out[0] = 1.0;
    return out;
  }
  std::vector<double> pooled(params.hidden, 0.0);
  for (int t : tokens) {
    if (t < 0 || t >= params.vocab) throw std::out_of_range("encode: token id out of range");
    const double* row = params.embed_row(t);
    for (int h = 0; h < params.hidden; ++h) pooled[h] += row[h];
  }
  const double inv_n = 1.0 / static_cast<double>(tokens.size());
  for (auto& x : pooled) x *= inv_n;

  for (int h = 0; h < params.hidden; ++h) {
    const double m = pooled[h];
    const double* prow = params.proj.data() + static_cast<std::size_t>(h) * params.dim;
    for (int d = 0; d < params.dim; ++d) out[d] += m * prow[d];
  }
  double norm = 0.0;
  for (double x : out) norm += x * x;
  norm = std::sqrt(norm);
  if (norm < 1e-12) {
    std::fill(out.begin(), out.end(), 0.0);
    out[0] = 1.0;
    return out;
  }
  for (auto& x : out) x /= norm;
  return out;
}

// Parameter gradients: sparse embed-table rows plus a dense projection
// gradient. Accumulated across calls by add_* so a whole batch reduces
// into one instance.
struct EncoderGrads {
  std::unordered_map<int, std::vector<double>> embed_rows;
  std::vector<double> proj;  // H x D, lazily sized

  void ensure(const EncoderParams& p) {
    if (proj.empty()) proj.assign(static_cast<std::size_t>(p.hidden) * p.dim, 0.0);
  }
  void add_scaled(const EncoderGrads& o, double scale) {
    if (!o.proj.empty()) {
      if (proj.empty()) proj.assign(o.proj.size(), 0.0);
      for (std::size_t i = 0; i < proj.size(); ++i) proj[i] += scale * o.proj[i];
    }
    for (const auto& [row, g] : o.embed_rows) {
      auto& dst = embed_rows[row];
      if (dst.empty()) dst.assign(g.size(), 0.0);
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += scale * g[i];
    }
  }
};

// Backward through normalize -> proj -> mean pool. The unit-normalization
// Jacobian is (I - u u^T)/||v||; upstream components parallel to the
// output vanish.
inline void encode_backward(const std::vector<int>& tokens, const EncoderParams& params,
                            const std::vector<double>& upstream, EncoderGrads& grads) {
  if (tokens.empty()) return;  // constant output

  std::vector<double> pooled(params.hidden, 0.0);
  for (int t : tokens) {
    if (t < 0 || t >= params.vocab) throw std::out_of_range("encode_backward: token id out of range");
    const double* row = params.embed_row(t);
    for (int h = 0; h < params.hidden; ++h) pooled[h] += row[h];
  }
  const double inv_n = 1.0 / static_cast<double>(tokens.size());
  for (auto& x : pooled) x *= inv_n;

  std::vector<double> v(params.dim, 0.0);
  for (int h = 0; h < params.hidden; ++h) {
    const double m = pooled[h];
    const double* prow = params.proj.data() + static_cast<std::size_t>(h) * params.dim;
    for (int d = 0; d < params.dim; ++d) v[d] += m * prow[d];
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm < 1e-12) return;  // fallback branch is constant

  std::vector<double> u(params.dim);
  for (int d = 0; d < params.dim; ++d) u[d] = v[d] / norm;
  double dot = 0.0;
  for (int d = 0; d < params.dim; ++d) dot += u[d] * upstream[d];
  std::vector<double> dv(params.dim);
  for (int d = 0; d < params.dim; ++d) dv[d] = (upstream[d] - dot * u[d]) / norm;

  grads.ensure(params);
  // dL/dproj[h][d] = pooled[h] * dv[d]; dL/dpooled[h] = sum_d proj[h][d] dv[d]
  std::vector<double> dpooled(params.hidden, 0.0);
  for (int h = 0; h < params.hidden; ++h) {
    const double m = pooled[h];
    const double* prow = params.proj.data() + static_cast<std::size_t>(h) * params.dim;
    double* gprow = grads.proj.data() + static_cast<std::size_t>(h) * params.dim;
    double acc = 0.0;
    for (int d = 0; d < params.dim; ++d) {
      gprow[d] += m * dv[d];
      acc += prow[d] * dv[d];
    }
    dpooled[h] = acc * inv_n;
  }
  for (int t : tokens) {
    auto& row = grads.embed_rows[t];
    if (row.empty()) row.assign(params.hidden, 0.0);
    for (int h = 0; h < params.hidden; ++h) row[h] += dpooled[h];
  }
}

// Checkpoint: "RAMENCK1", V,H,D little-endian int64, then embed_table and
// proj as row-major little-endian float32.
inline void save_checkpoint(const std::string& path, const EncoderParams& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write("RAMENCK1", 8);
  const std::int64_t dims[3] = {p.vocab, p.hidden, p.dim};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  const auto write_floats = [&](const std::vector<double>& src) {
    std::vector<float> buf(src.begin(), src.end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  };
  write_floats(p.embed_table);
  write_floats(p.proj);
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline EncoderParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "RAMENCK1", 8) != 0)
    throw std::runtime_error(path + ": bad checkpoint magic");
  std::int64_t dims[3];
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || dims[0] < 2 || dims[1] < 1 || dims[2] < 2)
    throw std::runtime_error(path + ": bad checkpoint dims");
  EncoderParams p;
  p.vocab = static_cast<int>(dims[0]);
  p.hidden = static_cast<int>(dims[1]);
  p.dim = static_cast<int>(dims[2]);
  const auto read_floats = [&](std::vector<double>& dst, std::size_t n) {
    std::vector<float> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) throw std::runtime_error(path + ": truncated checkpoint");
    dst.assign(buf.begin(), buf.end());
  };
  read_floats(p.embed_table, static_cast<std::size_t>(p.vocab) * p.hidden);
  read_floats(p.proj, static_cast<std::size_t>(p.hidden) * p.dim);
  return p;
}

}  // namespace ramen

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "ramen/encoder.hpp"

using namespace ramen;

namespace {

double norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("tokenize basics") {
  TokenizerConfig cfg;
  CHECK(tokenize("", cfg).empty());
  CHECK(tokenize("hello world", cfg) == tokenize("hello world", cfg));
  CHECK(tokenize("Hello", cfg) == tokenize("hello", cfg));  // lowercase default

  std::string forty_words;
  for (int i = 0; i < 40; ++i) forty_words += "w" + std::to_string(i) + " ";
  CHECK(tokenize(forty_words, cfg).size() == 32);

  for (int t : tokenize("a b c some words", cfg)) {
    CHECK(t >= 0);
    CHECK(t < cfg.hash_buckets);
  }
}

TEST_CASE("tokenize char trigram mode") {
  TokenizerConfig cfg;
  cfg.ngram = NgramMode::CharTrigram;
  CHECK(tokenize("ab", cfg).empty());  // shorter than one trigram
  CHECK(tokenize("abcd", cfg).size() == 2);
}

TEST_CASE("init_params shapes, determinism and bounds") {
  const auto p = init_params(100, 16, 8, 42);
  CHECK(p.embed_table.size() == 100 * 16);
  CHECK(p.proj.size() == 16 * 8);
  const auto q = init_params(100, 16, 8, 42);
  CHECK(p.embed_table == q.embed_table);
  CHECK(p.proj == q.proj);

  const double bound = 1.0 / std::sqrt(16.0);
  for (double x : p.embed_table) {
    CHECK(x >= -bound);
    CHECK(x <= bound);
  }
}

TEST_CASE("encode normalizes 3-4-5") {
  // H=D=2 with identity projection, single token with row (3,4)
  EncoderParams p;
  p.vocab = 2;
  p.hidden = 2;
  p.dim = 2;
  p.embed_table = {3, 4, 0, 0};
  p.proj = {1, 0, 0, 1};
  const auto e = encode({0}, p);
  CHECK(e[0] == Catch::Approx(0.6));
  CHECK(e[1] == Catch::Approx(0.8));
}

TEST_CASE("encode mean-pools token rows") {
  EncoderParams p;
  p.vocab = 2;
  p.hidden = 2;
  p.dim = 2;
  p.embed_table = {2, 0, 0, 2};
  p.proj = {1, 0, 0, 1};
  const auto e = encode({0, 1}, p);  // mean (1,1), normalized
  CHECK(e[0] == Catch::Approx(1.0 / std::sqrt(2.0)));
  CHECK(e[1] == Catch::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("encode of empty token list is the first basis vector") {
  const auto p = init_params(10, 4, 4, 1);
  const auto e = encode({}, p);
  CHECK(e[0] == 1.0);
  for (int d = 1; d < 4; ++d) CHECK(e[d] == 0.0);
}

TEST_CASE("encode rejects out-of-range token ids") {
  const auto p = init_params(10, 4, 4, 1);
  CHECK_THROWS_AS(encode({10}, p), std::out_of_range);
}

TEST_CASE("encode output always unit norm") {
  std::mt19937_64 rng(5);
  const auto p = init_params(50, 8, 4, 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> tokens;
    const int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) tokens.push_back(static_cast<int>(rng() % 50));
    CHECK(std::abs(norm(encode(tokens, p)) - 1.0) < 1e-6);
  }
}

TEST_CASE("upstream gradient parallel to output vanishes") {
  const auto p = init_params(50, 8, 4, 3);
  const std::vector<int> tokens = {1, 7, 30};
  const auto u = encode(tokens, p);
  EncoderGrads g;
  encode_backward(tokens, p, u, g);
  for (double x : g.proj) CHECK(std::abs(x) < 1e-12);
  for (const auto& [row, gr] : g.embed_rows)
    for (double x : gr) CHECK(std::abs(x) < 1e-12);
}

TEST_CASE("empty token list yields zero gradients") {
  const auto p = init_params(10, 4, 4, 1);
  EncoderGrads g;
  encode_backward({}, p, {1, 0, 0, 0}, g);
  CHECK(g.embed_rows.empty());
  CHECK(g.proj.empty());
}

// Finite-difference oracle: scalar probe f = w . encode(tokens) checked
// against the analytic chain rule, parameter by parameter.
TEST_CASE("encode_backward matches central finite differences") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  double max_rel = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto p = init_params(50, 8, 4, 100 + trial);
    std::vector<int> tokens;
    const int n = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) tokens.push_back(static_cast<int>(rng() % 50));
    std::vector<double> w(4);
    for (auto& x : w) x = gauss(rng);

    EncoderGrads g;
    encode_backward(tokens, p, w, g);

    const auto probe = [&]() {
      const auto e = encode(tokens, p);
      double s = 0;
      for (int d = 0; d < 4; ++d) s += w[d] * e[d];
      return s;
    };
    const double eps = 1e-5;
    const auto check_param = [&](double& param, double analytic) {
      const double save = param;
      param = save + eps;
      const double fp = probe();
      param = save - eps;
      const double fm = probe();
      param = save;
      const double fd = (fp - fm) / (2 * eps);
      const double rel = std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-8});
      max_rel = std::max(max_rel, rel);
    };
    // a few random proj entries and one entry of each touched row
    for (int probe_i = 0; probe_i < 5; ++probe_i) {
      const auto idx = rng() % p.proj.size();
      check_param(p.proj[idx], g.proj.empty() ? 0.0 : g.proj[idx]);
    }
    for (const auto& [row, gr] : g.embed_rows) {
      const int h = static_cast<int>(rng() % p.hidden);
      check_param(p.embed_row(row)[h], gr[h]);
    }
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  const auto p = init_params(37, 8, 6, 77);
  const std::string path = std::filesystem::temp_directory_path() / "ramen_ck_test.bin";
  save_checkpoint(path, p);
  const auto q = load_checkpoint(path);
  CHECK(q.vocab == p.vocab);
  CHECK(q.hidden == p.hidden);
  CHECK(q.dim == p.dim);
  // file-level round trip: float32 values survive a second pass untouched
  const std::string path2 = std::filesystem::temp_directory_path() / "ramen_ck_test2.bin";
  save_checkpoint(path2, q);
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), {});
  std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("checkpoint rejects bad magic") {
  const std::string path = std::filesystem::temp_directory_path() / "ramen_ck_bad.bin";
  std::ofstream(path, std::ios::binary) << "NOTRAMEN0000000000000000000000000";
  CHECK_THROWS(load_checkpoint(path));
  std::filesystem::remove(path);
}

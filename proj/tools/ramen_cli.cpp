// Command-line front end for the RAMEN pipeline: synthetic dataset
// generation, graph conditioning, training (with ablation flags),
// evaluation and inspection.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ramen/ramen.hpp"

namespace fs = std::filesystem;
using namespace ramen;

namespace {

std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void write_manifest(const std::string& dir, const std::string& config_echo,
                    std::uint64_t seed, const std::vector<std::string>& outputs) {
  std::ofstream out(dir + "/manifest.txt");
  out << "seed = " << seed << "\n";
  out << "[config]\n" << config_echo << "\n[hashes]\n";
  for (const auto& path : outputs)
    out << fs::path(path).filename().string() << " = " << std::hex << file_hash(path)
        << std::dec << "\n";
}

std::string config_echo(const std::string& config_path) {
  if (config_path.empty()) return "(defaults)";
  std::ifstream in(config_path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig load_run_config(const std::string& config_path) {
  return config_path.empty() ? RunConfig{} : parse_config_file(config_path);
}

struct EvalResult {
  // metric name ("P","N","PSP") x k -> mean value over evaluated queries
  std::map<std::pair<std::string, int>, double> values;
  int num_queries = 0;
};

EvalResult evaluate(const Corpus& corpus, const std::set<int>& test_ids,
                    const EncoderParams& params, const TokenizerConfig& tok,
                    const std::vector<int>& ks, int threads) {
  std::vector<int> eval_ids;
  if (test_ids.empty()) {
    for (int i = 0; i < corpus.num_points(); ++i)
      if (!corpus.ground_truth.row_index[i].empty()) eval_ids.push_back(i);
  } else {
    eval_ids.assign(test_ids.begin(), test_ids.end());
  }

  // propensities come from the training split only
  SparseBinaryMatrix train_gt = corpus.ground_truth;
  for (int id : test_ids) train_gt.row_index[id].clear();
  const auto prop = compute_propensities(train_gt);

  const auto index = build_index(corpus.labels, params, tok);
  int kmax = 1;
  for (int k : ks) kmax = std::max(kmax, k);
  std::vector<std::string> texts;
  for (int id : eval_ids) texts.push_back(corpus.points[id].text);
  const auto preds = batch_top_k(texts, index, params, tok, kmax, threads);

  EvalResult res;
  res.num_queries = static_cast<int>(eval_ids.size());
  for (int k : ks) {
    double p = 0, n = 0, psp = 0;
    for (std::size_t i = 0; i < eval_ids.size(); ++i) {
      const auto& truth = corpus.ground_truth.row_index[eval_ids[i]];
      p += precision_at_k(preds[i], truth, k);
      n += ndcg_at_k(preds[i], truth, k);
      psp += psp_at_k(preds[i], truth, prop, k);
    }
    const double denom = std::max<std::size_t>(1, eval_ids.size());
    res.values[{"P", k}] = p / denom;
    res.values[{"N", k}] = n / denom;
    res.values[{"PSP", k}] = psp / denom;
  }
  return res;
}

void write_eval_report(const std::string& out_path, const EvalResult& res,
                       const std::vector<int>& ks) {
  std::ofstream csv(out_path);
  csv << "metric,k,value\n";
  char buf[64];
  for (const auto& metric : {"PSP", "P", "N"})
    for (int k : ks) {
      std::snprintf(buf, sizeof(buf), "%.6f", res.values.at({metric, k}));
      csv << metric << ',' << k << ',' << buf << '\n';
    }
  // aligned table mirroring the benchmark column order
  std::ofstream table(out_path + ".txt");
  for (const auto& metric : {"PSP", "P", "N"})
    for (int k : ks) {
      std::snprintf(buf, sizeof(buf), "%s@%d", metric, k);
      table << std::left << std::setw(10) << buf;
    }
  table << '\n';
  for (const auto& metric : {"PSP", "P", "N"})
    for (int k : ks) {
      std::snprintf(buf, sizeof(buf), "%.4f", res.values.at({metric, k}));
      table << std::left << std::setw(10) << buf;
    }
  table << '\n';
}

struct TrainFlags {
  bool no_prune = false;
  bool no_doc_graph = false;
  bool no_lbl_graph = false;
  bool aug_gt = false;
};

TrainResult run_training(const Corpus& corpus, const std::set<int>& test_ids,
                         RunConfig cfg, const TrainFlags& flags) {
  if (flags.no_prune) cfg.train.prune = false;
  if (flags.aug_gt) cfg.train.aug_gt = true;
  const std::size_t sets = std::max<std::size_t>(1, corpus.anchor_sets.size());
  if (flags.no_doc_graph) cfg.loss.lambda_x.assign(sets, 0.0);
  if (flags.no_lbl_graph) cfg.loss.lambda_z.assign(sets, 0.0);

  const Corpus train_corpus = training_split(corpus, test_ids);
  auto params = init_params(cfg.tokenizer.hash_buckets, cfg.hidden, cfg.dim, cfg.train.seed);
  return train(train_corpus, cfg.train, cfg.loss, cfg.tokenizer, std::move(params), cfg.walk);
}

int cmd_synth(const std::string& config_path, const std::string& out_dir, double test_fraction) {
  const RunConfig cfg = load_run_config(config_path);
  const Corpus corpus = generate_synthetic(cfg.synth);
  fs::create_directories(out_dir);
  save_dataset(out_dir, corpus);

  // deterministic per-topic holdout: last ceil(fraction * points) of each topic
  std::set<int> test_ids;
  const int held = static_cast<int>(cfg.synth.points_per_topic * test_fraction + 0.5);
  for (int t = 0; t < cfg.synth.num_topics; ++t)
    for (int j = cfg.synth.points_per_topic - held; j < cfg.synth.points_per_topic; ++j)
      if (j >= 0) test_ids.insert(t * cfg.synth.points_per_topic + j);
  save_test_ids(out_dir, test_ids);

  std::vector<std::string> outputs;
  for (const auto& e : fs::directory_iterator(out_dir))
    if (e.path().filename() != "manifest.txt") outputs.push_back(e.path().string());
  std::sort(outputs.begin(), outputs.end());
  write_manifest(out_dir, config_echo(config_path), cfg.synth.seed, outputs);
  return 0;
}

int cmd_augment(const std::string& data_dir, const std::string& config_path,
                const std::string& out_dir) {
  const RunConfig cfg = load_run_config(config_path);
  Corpus corpus = load_dataset(data_dir);
  WalkConfig wc = cfg.walk;
  if (wc.seed == 0) wc.seed = cfg.train.seed;
  for (auto& set : corpus.anchor_sets) {
    set.point_graph = rwr_augment(set.point_graph, build_anchor_anchor(set.point_graph), wc);
    set.label_graph = rwr_augment(set.label_graph, build_anchor_anchor(set.label_graph), wc);
  }
  fs::create_directories(out_dir);
  save_dataset(out_dir, corpus);
  if (fs::exists(data_dir + "/test_ids.txt")) fs::copy_file(data_dir + "/test_ids.txt", out_dir + "/test_ids.txt", fs::copy_options::overwrite_existing);
  write_manifest(out_dir, config_echo(config_path), wc.seed, {});
  return 0;
}

int cmd_prune(const std::string& data_dir, const std::string& checkpoint,
              const std::string& config_path, const std::string& out_dir, double threshold) {
  const RunConfig cfg = load_run_config(config_path);
  Corpus corpus = load_dataset(data_dir);
  const auto params = load_checkpoint(checkpoint);
  TokenizerConfig tok = cfg.tokenizer;
  tok.hash_buckets = params.vocab;
  const auto embed = [&](const std::vector<TextRecord>& recs) {
    std::vector<std::vector<double>> out;
    for (const auto& r : recs) out.push_back(encode(tokenize(r.text, tok), params));
    return out;
  };
  const auto point_emb = embed(corpus.points);
  const auto label_emb = embed(corpus.labels);
  for (auto& set : corpus.anchor_sets) {
    const auto anchor_emb = embed(set.anchors);
    set.point_graph = prune_edges(set.point_graph, point_emb, anchor_emb, threshold);
    set.label_graph = prune_edges(set.label_graph, label_emb, anchor_emb, threshold);
  }
  fs::create_directories(out_dir);
  save_dataset(out_dir, corpus);
  if (fs::exists(data_dir + "/test_ids.txt")) fs::copy_file(data_dir + "/test_ids.txt", out_dir + "/test_ids.txt", fs::copy_options::overwrite_existing);
  write_manifest(out_dir, config_echo(config_path), 0, {});
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& config_path,
              const std::string& out_dir, const TrainFlags& flags) {
  const RunConfig cfg = load_run_config(config_path);
  const Corpus corpus = load_dataset(data_dir);
  const auto test_ids = load_test_ids(data_dir);
  const auto result = run_training(corpus, test_ids, cfg, flags);

  fs::create_directories(out_dir);
  save_checkpoint(out_dir + "/checkpoint.bin", result.params);
  std::ofstream hist(out_dir + "/history.csv");
  write_history_csv(hist, result.history);
  hist.close();
  write_manifest(out_dir, config_echo(config_path), cfg.train.seed,
                 {out_dir + "/checkpoint.bin", out_dir + "/history.csv"});
  return 0;
}

int cmd_eval(const std::string& data_dir, const std::string& checkpoint,
             const std::string& config_path, const std::string& k_list,
             const std::string& out_path, int threads) {
  const RunConfig cfg = load_run_config(config_path);
  const Corpus corpus = load_dataset(data_dir);
  const auto test_ids = load_test_ids(data_dir);
  const auto params = load_checkpoint(checkpoint);
  TokenizerConfig tok = cfg.tokenizer;
  tok.hash_buckets = params.vocab;

  std::vector<int> ks;
  std::stringstream ss(k_list);
  std::string item;
  while (std::getline(ss, item, ',')) ks.push_back(std::stoi(item));
  if (ks.empty()) throw std::runtime_error("eval: empty k list");

  const auto res = evaluate(corpus, test_ids, params, tok, ks, threads);
  write_eval_report(out_path, res, ks);
  return 0;
}

int cmd_ablate(const std::string& data_dir, const std::string& config_path,
               const std::string& out_dir, int threads) {
  const RunConfig cfg = load_run_config(config_path);
  const Corpus corpus = load_dataset(data_dir);
  const auto test_ids = load_test_ids(data_dir);
  const std::vector<int> ks = {1, 3, 5};

  struct Row {
    std::string name;
    TrainFlags flags;
  };
  const std::vector<Row> rows = {
      {"full", {}},
      {"No Pruning", {.no_prune = true}},
      {"No Doc. Graph", {.no_doc_graph = true}},
      {"No Lbl. Graph", {.no_lbl_graph = true}},
      {"AugGT", {.aug_gt = true}},
  };

  fs::create_directories(out_dir);
  std::ofstream table(out_dir + "/ablation_table.txt");
  table << std::left << std::setw(16) << "RAMEN";
  for (const char* col : {"P@1", "P@3", "P@5", "N@3", "N@5"})
    table << std::setw(9) << col;
  table << '\n';

  char buf[64];
  for (const auto& row : rows) {
    const auto trained = run_training(corpus, test_ids, cfg, row.flags);
    TokenizerConfig tok = cfg.tokenizer;
    const auto res = evaluate(corpus, test_ids, trained.params, tok, ks, threads);
    table << std::left << std::setw(16) << row.name;
    for (const auto& [metric, k] : std::vector<std::pair<std::string, int>>{
             {"P", 1}, {"P", 3}, {"P", 5}, {"N", 3}, {"N", 5}}) {
      std::snprintf(buf, sizeof(buf), "%.4f", res.values.at({metric, k}));
      table << std::setw(9) << buf;
    }
    table << '\n';
  }
  table.close();
  write_manifest(out_dir, config_echo(config_path), cfg.train.seed,
                 {out_dir + "/ablation_table.txt"});
  return 0;
}

int cmd_inspect(const std::string& data_dir) {
  const Corpus corpus = load_dataset(data_dir);
  std::cout << "points: " << corpus.num_points() << "\nlabels: " << corpus.num_labels()
            << "\nground-truth edges: " << corpus.ground_truth.nnz() << "\n";
  for (const auto& set : corpus.anchor_sets) {
    const auto ps = degree_stats(set.point_graph);
    const auto ls = degree_stats(set.label_graph);
    std::cout << "anchor set '" << set.name << "': " << set.anchors.size() << " anchors\n"
              << "  point graph: avg/doc " << ps.avg_per_row << ", avg/anchor " << ps.avg_per_col
              << ", isolated docs " << ps.isolated_rows << "\n"
              << "  label graph: avg/label " << ls.avg_per_row << ", avg/anchor " << ls.avg_per_col
              << ", isolated labels " << ls.isolated_rows << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RAMEN: graph-regularized dual-encoder training for extreme retrieval"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_path, checkpoint, k_list = "1,3,5";
  double test_fraction = 0.2, threshold = 0.0;
  int threads = 1;
  TrainFlags flags;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic planted-topic dataset");
  synth->add_option("--spec", config_path, "config file with synth_* keys");
  synth->add_option("--out", out_path, "output dataset directory")->required();
  synth->add_option("--test-fraction", test_fraction, "held-out fraction per topic");

  auto* augment = app.add_subcommand("augment", "Random-walk-with-restart graph densification");
  augment->add_option("--data", data_dir)->required();
  augment->add_option("--config", config_path);
  augment->add_option("--out", out_path)->required();

  auto* prune = app.add_subcommand("prune", "Prune graph edges by encoder cosine");
  prune->add_option("--data", data_dir)->required();
  prune->add_option("--checkpoint", checkpoint)->required();
  prune->add_option("--config", config_path);
  prune->add_option("--out", out_path)->required();
  prune->add_option("--threshold", threshold);

  auto* train_cmd = app.add_subcommand("train", "Train the regularized dual encoder");
  train_cmd->add_option("--data", data_dir)->required();
  train_cmd->add_option("--config", config_path);
  train_cmd->add_option("--out", out_path)->required();
  train_cmd->add_flag("--no-prune", flags.no_prune, "disable pruning cycles");
  train_cmd->add_flag("--no-doc-graph", flags.no_doc_graph, "lambda_x = 0");
  train_cmd->add_flag("--no-lbl-graph", flags.no_lbl_graph, "lambda_z = 0");
  train_cmd->add_flag("--aug-gt", flags.aug_gt, "plain task loss on label-propagated ground truth");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  eval_cmd->add_option("--data", data_dir)->required();
  eval_cmd->add_option("--checkpoint", checkpoint)->required();
  eval_cmd->add_option("--config", config_path);
  eval_cmd->add_option("--k", k_list, "comma-separated k values");
  eval_cmd->add_option("--out", out_path)->required();
  eval_cmd->add_option("--threads", threads);

  auto* ablate = app.add_subcommand("ablate", "Run full + ablations with a shared seed");
  ablate->add_option("--data", data_dir)->required();
  ablate->add_option("--config", config_path);
  ablate->add_option("--out", out_path)->required();
  ablate->add_option("--threads", threads);

  auto* inspect = app.add_subcommand("inspect", "Print dataset statistics");
  inspect->add_option("--data", data_dir)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(config_path, out_path, test_fraction);
    if (augment->parsed()) return cmd_augment(data_dir, config_path, out_path);
    if (prune->parsed()) return cmd_prune(data_dir, checkpoint, config_path, out_path, threshold);
    if (train_cmd->parsed()) return cmd_train(data_dir, config_path, out_path, flags);
    if (eval_cmd->parsed()) return cmd_eval(data_dir, checkpoint, config_path, k_list, out_path, threads);
    if (ablate->parsed()) return cmd_ablate(data_dir, config_path, out_path, threads);
    if (inspect->parsed()) return cmd_inspect(data_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

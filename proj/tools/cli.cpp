// Copyright 2026 The RepCONC Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "repconc/ablation.hpp"
#include "repconc/checkpoint.hpp"
#include "repconc/error.hpp"
#include "repconc/eval.hpp"
#include "repconc/index_io.hpp"
#include "repconc/ivf.hpp"
#include "repconc/opq.hpp"
#include "repconc/synthetic.hpp"
#include "repconc/training.hpp"

namespace repconc::cli {
namespace {

namespace fs = std::filesystem;

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Refuses to write an artifact over one of the command's inputs.
void check_distinct(const std::string& output, const std::vector<std::string>& inputs) {
  std::error_code ec;
  for (const std::string& in : inputs) {
    if (!in.empty() && fs::exists(output, ec) && fs::equivalent(output, in, ec)) {
      throw ConfigError("output " + output + " would overwrite input " + in);
    }
  }
}

struct Common {
  std::size_t threads = 0;
};

struct WarmupArgs {
  std::string docs, out, rotation = "on", doc_encoder = "linear";
  std::size_t m = 0, k = 0, outer_iters = 10, kmeans_iters = 20;
  std::uint64_t seed = 0;
};

int cmd_warmup(const WarmupArgs& a, std::ostream& out, std::ostream& err) {
  check_distinct(a.out, {a.docs});
  const Matrix docs = read_embeddings(a.docs);
  check_pq_shape(docs.cols(), a.m, a.k);
  OpqOptions opts;
  opts.num_blocks = a.m;
  opts.num_centroids = a.k;
  opts.outer_iters = a.outer_iters;
  opts.kmeans_iters = a.kmeans_iters;
  opts.rotation = a.rotation == "on";
  opts.seed = a.seed;
  err << "warmup: " << docs.rows() << " docs, D=" << docs.cols() << " M=" << a.m
      << " K=" << a.k << '\n';
  const OpqResult opq = train_opq(docs, opts);
  for (std::size_t i = 0; i < opq.distortion.size(); ++i) {
    out << (i + 1) << '\t' << number(opq.distortion[i]) << '\n';
  }
  const std::size_t dim = docs.cols();
  Encoder doc_encoder = parse_encoder_kind(a.doc_encoder) == EncoderKind::kLinear
                            ? Encoder::identity(dim)
                            : Encoder::table(MatrixD::cast_from(docs));
  Checkpoint ckpt;
  ckpt.model = Model::from_warmup(Encoder::identity(dim), std::move(doc_encoder), opq.codebook,
                                  opq.rotation);
  ckpt.doc_codes = quantize_corpus(ckpt.model, docs);
  ckpt.info = {{"command", "warmup"},
               {"outer_iters", std::to_string(a.outer_iters)},
               {"kmeans_iters", std::to_string(a.kmeans_iters)},
               {"seed", std::to_string(a.seed)}};
  save_checkpoint(a.out, ckpt);
  return 0;
}

struct TrainArgs {
  std::string docs, queries, qrels, from, out, assignment = "constrained";
  int stage = 1;
  std::optional<double> lambda;
  std::size_t steps = 0, batch_size = 64, negatives = 4, mining_depth = 100, refresh_every = 0;
  double lr_encoder = TrainConfig{}.lr_encoder, lr_codebook = TrainConfig{}.lr_codebook;
  double epsilon = 0.0, tol = 0.0;
  std::size_t sinkhorn_iters = 100;
  std::uint64_t seed = 0;
};

void copy_checkpoint(const std::string& from, const std::string& to) {
  std::error_code ec;
  fs::create_directories(to, ec);
  if (ec) throw InputError("cannot create " + to + ": " + ec.message());
  for (const auto& entry : fs::directory_iterator(from)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name == "metrics.jsonl") continue;
    fs::copy_file(entry.path(), fs::path(to) / name, fs::copy_options::overwrite_existing, ec);
    if (ec) throw InputError("cannot copy " + entry.path().string() + ": " + ec.message());
  }
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  check_distinct(a.out, {a.from});
  Checkpoint ckpt = load_checkpoint(a.from);
  const fs::path metrics_path = fs::path(a.out) / "metrics.jsonl";
  if (a.steps == 0) {
    copy_checkpoint(a.from, a.out);
    std::ofstream(metrics_path, std::ios::trunc);
    err << "train: 0 steps, checkpoint copied\n";
    return 0;
  }
  const Matrix docs = read_embeddings(a.docs);
  const QuerySet queries = read_queries(a.queries);
  const Qrels qrels = read_qrels(a.qrels);

  TrainingData data;
  data.doc_features = &docs;
  data.query_features = &queries.vectors;
  data.positives = positives_from_qrels(queries, qrels);
  CodeTable codes = ckpt.doc_codes ? std::move(*ckpt.doc_codes) : quantize_corpus(ckpt.model, docs);
  if (codes.rows() != docs.rows()) {
    throw DimensionError("checkpoint codes cover " + std::to_string(codes.rows()) +
                         " documents, corpus has " + std::to_string(docs.rows()));
  }

  TrainConfig config;
  config.lambda = a.lambda.value_or(default_lambda(ckpt.model.num_blocks));
  config.lr_encoder = a.lr_encoder;
  config.lr_codebook = a.lr_codebook;
  config.batch_size = a.batch_size;
  config.stage = a.stage;
  config.negatives_per_query = a.negatives;
  config.mining_depth = a.mining_depth;
  config.assignment =
      a.assignment == "constrained" ? AssignmentMode::kConstrained : AssignmentMode::kUnconstrained;
  config.sinkhorn.epsilon = a.epsilon;
  config.sinkhorn.tol = a.tol;
  config.sinkhorn.max_iters = a.sinkhorn_iters;
  config.seed = a.seed;
  validate(config);

  Trainer trainer(std::move(ckpt.model), data, config, std::move(codes));
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw InputError("cannot create " + a.out + ": " + ec.message());
  std::ofstream metrics(metrics_path, std::ios::trunc);
  if (!metrics) throw InputError("cannot write " + metrics_path.string());
  for (std::size_t s = 0; s < a.steps; ++s) {
    const StepMetrics m = trainer.step();
    nlohmann::ordered_json line;
    line["step"] = m.step;
    line["ranking_loss"] = m.ranking;
    line["mse_loss"] = m.mse;
    line["total_loss"] = m.total;
    line["balance_violation"] = m.balance_violation;
    line["codes_changed"] = m.codes_changed;
    const std::string text = line.dump();
    metrics << text << '\n';
    out << text << '\n';
    if (a.refresh_every > 0 && (s + 1) % a.refresh_every == 0) trainer.refresh_corpus_codes();
  }
  const std::size_t changed = trainer.refresh_corpus_codes();
  err << "train: " << a.steps << " steps, " << changed
      << " code bytes changed at the final refresh\n";

  Checkpoint result;
  result.model = trainer.model();
  result.doc_codes = trainer.corpus_codes();
  result.info = ckpt.info;
  result.info["command"] = "train";
  result.info["stage"] = std::to_string(a.stage);
  result.info["steps"] = std::to_string(a.steps);
  result.info["lambda"] = number(config.lambda);
  result.info["seed"] = std::to_string(a.seed);
  save_checkpoint(a.out, result);
  return 0;
}

struct EncodeArgs {
  std::string docs, from, out, embeddings_out;
};

int cmd_encode(const EncodeArgs& a, std::ostream& out, std::ostream&) {
  check_distinct(a.out, {a.docs});
  const Checkpoint ckpt = load_checkpoint(a.from);
  const Matrix docs = read_embeddings(a.docs);
  const Matrix embedded = encode_docs(ckpt.model, docs);
  const CodeTable codes =
      quantize_all(ckpt.model.rotation.apply_rows(embedded), ckpt.model.export_codebook());
  write_codes(a.out, codes);
  if (!a.embeddings_out.empty()) write_embeddings(a.embeddings_out, embedded);
  out << "docs\t" << codes.rows() << "\nnum_blocks\t" << codes.num_blocks() << "\nnum_centroids\t"
      << ckpt.model.num_centroids << '\n';
  return 0;
}

struct BuildArgs {
  std::string docs, from, out, codes;
  std::size_t lists = 0;
  std::uint64_t seed = 0;
};

int cmd_build_ivf(const BuildArgs& a, std::ostream& out, std::ostream& err) {
  check_distinct(a.out, {a.docs, a.codes});
  const Checkpoint ckpt = load_checkpoint(a.from);
  const Matrix docs = read_embeddings(a.docs);
  const std::size_t lists = a.lists == 0 ? default_num_lists(docs.rows()) : a.lists;
  std::optional<CodeTable> codes;
  if (!a.codes.empty()) {
    codes = read_codes(a.codes);
  } else if (ckpt.doc_codes) {
    codes = ckpt.doc_codes;
  }
  if (codes && codes->rows() != docs.rows()) {
    throw DimensionError("codes cover " + std::to_string(codes->rows()) + " documents, corpus has " +
                         std::to_string(docs.rows()));
  }
  err << "build-ivf: " << docs.rows() << " docs into " << lists << " lists\n";
  const IvfIndex index =
      build_model_index(ckpt.model, docs, lists, a.seed, codes ? &*codes : nullptr);
  write_index(index, a.out);
  out << "num_lists\t" << index.num_lists() << "\ndoc_count\t" << index.doc_count()
      << "\ncode_bytes\t" << index.code_bytes() << "\noverhead_bytes\t"
      << index.overhead_bytes() << '\n';
  return 0;
}

struct SearchArgs {
  std::string index, queries, from;
  std::size_t nprobe = 0, topk = 10;
};

int cmd_search(const SearchArgs& a, std::ostream& out, std::ostream& err) {
  const IvfIndex index = read_index(a.index);
  const QuerySet queries = read_queries(a.queries);
  Matrix vectors = queries.vectors;
  if (!a.from.empty()) vectors = encode_queries(load_checkpoint(a.from).model, queries.vectors);
  if (vectors.cols() != index.dim()) {
    throw DimensionError("queries have " + std::to_string(vectors.cols()) +
                         " dims, index has " + std::to_string(index.dim()));
  }
  const std::size_t nprobe = a.nprobe == 0 ? index.num_lists() : a.nprobe;
  std::vector<std::vector<SearchHit>> hits(queries.size());
  parallel_for(queries.size(),
               [&](std::size_t q) { hits[q] = search(index, vectors.row(q), nprobe, a.topk); });
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (std::size_t r = 0; r < hits[q].size(); ++r) {
      out << queries.ids[q] << ' ' << hits[q][r].doc_id << ' ' << (r + 1) << ' '
          << number(hits[q][r].score) << '\n';
    }
  }
  err << "search: " << queries.size() << " queries, nprobe " << nprobe << " of "
      << index.num_lists() << '\n';
  return 0;
}

struct EvalArgs {
  std::string run, qrels, index, embeddings, format = "table";
  std::vector<std::size_t> mrr_k{10};
  std::vector<std::size_t> recall_k{100};
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream&) {
  const Rankings rankings = read_run(a.run);
  const Qrels qrels = read_qrels(a.qrels);
  MetricReport report = evaluate_run(rankings, qrels, a.mrr_k, a.recall_k);
  if (!a.index.empty()) {
    const IvfIndex index = read_index(a.index);
    const CodeTable codes = index.codes_by_doc();
    report.balance = code_balance(codes, index.codebook().num_centroids());
    if (!a.embeddings.empty()) {
      report.distortion =
          mean_distortion(read_embeddings(a.embeddings), index.rotation(), index.codebook(), codes);
    }
  }
  out << (a.format == "csv" ? report.to_csv() : report.to_table());
  return 0;
}

int cmd_inspect(const std::string& path, std::ostream& out) {
  const IvfIndex index = read_index(path);
  const IndexHeader header = read_index_header(path);
  const Codebook& cb = index.codebook();
  out << "version\t" << header.version << "\ndim\t" << cb.dim() << "\nnum_blocks\t"
      << cb.num_blocks() << "\nnum_centroids\t" << cb.num_centroids() << "\nnum_lists\t"
      << index.num_lists() << "\ndoc_count\t" << index.doc_count() << "\nrotation\t"
      << (index.rotation().enabled() ? "on" : "off") << "\ncompression_ratio\t"
      << number(compression_ratio(cb.dim(), cb.num_blocks())) << "\ncode_bytes\t"
      << index.code_bytes() << "\noverhead_bytes\t" << index.overhead_bytes() << '\n';
  const CodeBalance balance = code_balance(index.codes_by_doc(), cb.num_centroids());
  out << "entropy_bits\t" << fixed(balance.mean_entropy) << "\ntop1_usage\t"
      << fixed(balance.top1_fraction) << '\n';
  for (std::size_t i = 0; i < balance.entropy.size(); ++i) {
    out << "block_entropy\t" << i << '\t' << fixed(balance.entropy[i]) << '\n';
  }
  return 0;
}

void add_synthetic_flags(CLI::App* cmd, SyntheticSpec& spec) {
  cmd->add_option("--docs", spec.num_docs, "Number of documents")->capture_default_str();
  cmd->add_option("--dim", spec.dim, "Embedding dimension")->capture_default_str();
  cmd->add_option("--clusters", spec.num_clusters, "Number of planted clusters")
      ->capture_default_str();
  cmd->add_option("--noise", spec.noise, "Query perturbation norm")->capture_default_str();
  cmd->add_option("--spread", spec.cluster_spread, "Document offset norm from its centre")
      ->capture_default_str();
  cmd->add_option("--train-queries", spec.train_queries, "Training queries")
      ->capture_default_str();
  cmd->add_option("--test-queries", spec.test_queries, "Test queries")->capture_default_str();
}

int cmd_gen_synthetic(const SyntheticSpec& spec, const std::string& dir, std::ostream& out) {
  const SyntheticBenchmark bench = generate_synthetic(spec);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir + ": " + ec.message());
  const fs::path root(dir);
  const std::vector<std::pair<std::string, std::function<void(const std::string&)>>> files = {
      {"docs.rcem", [&](const std::string& p) { write_embeddings(p, bench.docs); }},
      {"train_queries.tsv", [&](const std::string& p) { write_queries(p, bench.train_queries); }},
      {"train_qrels.tsv", [&](const std::string& p) { write_qrels(p, bench.train_qrels()); }},
      {"test_queries.tsv", [&](const std::string& p) { write_queries(p, bench.test_queries); }},
      {"test_qrels.tsv", [&](const std::string& p) { write_qrels(p, bench.test_qrels()); }},
  };
  for (const auto& [name, write] : files) {
    const std::string path = (root / name).string();
    write(path);
    out << path << '\n';
  }
  return 0;
}

struct AblationArgs {
  AblationConfig config;
  std::string out;
};

int cmd_ablation(const AblationArgs& a, std::ostream& out, std::ostream& err) {
  const AblationResult result =
      run_ablation(a.config, [&](const std::string& line) { err << line << '\n'; });
  const std::string csv = result.to_csv();
  out << csv;
  if (!a.out.empty()) {
    std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
    f << csv;
    if (!f) throw InputError("cannot write " + a.out);
  }
  err << "ablation: monotone " << (result.monotone() ? "yes" : "no") << ", gain "
      << fixed(result.gain()) << ", " << fixed(result.seconds) << " s\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Jointly trained product-quantized dense retrieval"};
  app.name("repconc");
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--threads", common.threads, "Worker thread cap (0 = hardware)");

  WarmupArgs warmup;
  auto* w = app.add_subcommand("warmup", "Train OPQ rotation and codebook");
  w->add_option("--docs", warmup.docs, "Document embeddings (.rcem)")->required();
  w->add_option("--M", warmup.m, "Sub-vector blocks")->required();
  w->add_option("--K", warmup.k, "Centroids per block")->required();
  w->add_option("--rotation", warmup.rotation, "Learn a rotation")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  w->add_option("--doc-encoder", warmup.doc_encoder, "Document encoder kind")
      ->check(CLI::IsMember({"linear", "table"}))
      ->capture_default_str();
  w->add_option("--outer-iters", warmup.outer_iters)->capture_default_str();
  w->add_option("--kmeans-iters", warmup.kmeans_iters)->capture_default_str();
  w->add_option("--seed", warmup.seed)->capture_default_str();
  w->add_option("--out", warmup.out, "Checkpoint directory")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Jointly train encoders and codebook");
  t->add_option("--docs", train.docs, "Document features (.rcem)")->required();
  t->add_option("--queries", train.queries, "Training queries (tsv)")->required();
  t->add_option("--qrels", train.qrels, "Training judgments (tsv)")->required();
  t->add_option("--from", train.from, "Input checkpoint directory")->required();
  t->add_option("--stage", train.stage, "1: static negatives, 2: dynamic negatives")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();
  t->add_option("--lambda", train.lambda, "MSE weight (default depends on M)");
  t->add_option("--steps", train.steps)->required();
  t->add_option("--lr-encoder", train.lr_encoder)->capture_default_str();
  t->add_option("--lr-codebook", train.lr_codebook)->capture_default_str();
  t->add_option("--batch-size", train.batch_size)->capture_default_str();
  t->add_option("--negatives", train.negatives, "Negatives per query")->capture_default_str();
  t->add_option("--mining-depth", train.mining_depth)->capture_default_str();
  t->add_option("--assignment", train.assignment)
      ->check(CLI::IsMember({"constrained", "unconstrained"}))
      ->capture_default_str();
  t->add_option("--epsilon", train.epsilon, "Sinkhorn temperature (0 = default)");
  t->add_option("--tol", train.tol, "Sinkhorn tolerance (0 = default)");
  t->add_option("--sinkhorn-iters", train.sinkhorn_iters)->capture_default_str();
  t->add_option("--refresh-every", train.refresh_every,
                "Re-quantize the corpus every N steps (0 = only at the end)");
  t->add_option("--seed", train.seed)->capture_default_str();
  t->add_option("--out", train.out, "Output checkpoint directory")->required();

  EncodeArgs encode;
  auto* e = app.add_subcommand("encode", "Quantize a corpus with a checkpoint");
  e->add_option("--docs", encode.docs)->required();
  e->add_option("--from", encode.from)->required();
  e->add_option("--out", encode.out, "Code table (.rccd)")->required();
  e->add_option("--embeddings-out", encode.embeddings_out, "Also write encoded embeddings");

  BuildArgs build;
  auto* b = app.add_subcommand("build-ivf", "Build an inverted-file index");
  b->add_option("--docs", build.docs)->required();
  b->add_option("--from", build.from)->required();
  b->add_option("--codes", build.codes, "Fixed codes (.rccd) instead of re-quantizing");
  b->add_option("--lists", build.lists, "Coarse lists (0 = one per 1600 docs)");
  b->add_option("--seed", build.seed)->capture_default_str();
  b->add_option("--out", build.out, "Index file (.rcix)")->required();

  SearchArgs search_args;
  auto* s = app.add_subcommand("search", "Search an index");
  s->add_option("--index", search_args.index)->required();
  s->add_option("--queries", search_args.queries)->required();
  s->add_option("--from", search_args.from, "Checkpoint whose query encoder to apply");
  s->add_option("--nprobe", search_args.nprobe, "Lists to probe (0 = all)");
  s->add_option("--topk", search_args.topk)->capture_default_str();
  s->add_option("--seed", build.seed, "Accepted for uniformity; search is deterministic");

  EvalArgs eval_args;
  auto* v = app.add_subcommand("eval", "Score a run file");
  v->add_option("--run", eval_args.run)->required();
  v->add_option("--qrels", eval_args.qrels)->required();
  v->add_option("--mrr-k", eval_args.mrr_k)->delimiter(',')->capture_default_str();
  v->add_option("--recall-k", eval_args.recall_k)->delimiter(',')->capture_default_str();
  v->add_option("--index", eval_args.index, "Report code balance of this index");
  v->add_option("--embeddings", eval_args.embeddings,
                "Document embeddings for the distortion figure (needs --index)");
  v->add_option("--format", eval_args.format)
      ->check(CLI::IsMember({"table", "csv"}))
      ->capture_default_str();

  std::string inspect_path;
  auto* i = app.add_subcommand("inspect", "Print index header and code balance");
  i->add_option("--index", inspect_path)->required();

  SyntheticSpec spec;
  std::string synth_out;
  auto* g = app.add_subcommand("gen-synthetic", "Write the planted benchmark");
  add_synthetic_flags(g, spec);
  g->add_option("--seed", spec.seed)->capture_default_str();
  g->add_option("--out", synth_out, "Output directory")->required();

  AblationArgs ablation;
  AblationConfig& ac = ablation.config;
  auto* l = app.add_subcommand("ablation", "Run the ablation ladder on synthetic data");
  add_synthetic_flags(l, ac.data);
  l->add_option("--M", ac.num_blocks)->capture_default_str();
  l->add_option("--K", ac.num_centroids)->capture_default_str();
  l->add_option("--stage1-steps", ac.stage1_steps)->capture_default_str();
  l->add_option("--stage2-steps", ac.stage2_steps)->capture_default_str();
  l->add_option("--lambda", ac.train.lambda)->capture_default_str();
  l->add_option("--lr-encoder", ac.train.lr_encoder)->capture_default_str();
  l->add_option("--lr-codebook", ac.train.lr_codebook)->capture_default_str();
  l->add_option("--batch-size", ac.train.batch_size)->capture_default_str();
  l->add_option("--negatives", ac.train.negatives_per_query)->capture_default_str();
  l->add_option("--mining-depth", ac.train.mining_depth)->capture_default_str();
  l->add_option("--sinkhorn-iters", ac.train.sinkhorn.max_iters)->capture_default_str();
  l->add_option("--epsilon", ac.train.sinkhorn.epsilon, "Sinkhorn temperature (0 = default)");
  l->add_option("--seeds", ac.seeds)->delimiter(',')->capture_default_str();
  l->add_option("--out", ablation.out, "Also write the CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code_for(ErrorKind::kConfig);
  }
  if (common.threads > 0) set_max_threads(common.threads);

  try {
    if (*w) return cmd_warmup(warmup, out, err);
    if (*t) return cmd_train(train, out, err);
    if (*e) return cmd_encode(encode, out, err);
    if (*b) return cmd_build_ivf(build, out, err);
    if (*s) return cmd_search(search_args, out, err);
    if (*v) return cmd_eval(eval_args, out, err);
    if (*i) return cmd_inspect(inspect_path, out);
    if (*g) return cmd_gen_synthetic(spec, synth_out, out);
    if (*l) return cmd_ablation(ablation, out, err);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return exit_code_for(ex.kind());
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << '\n';
    return exit_code_for(ErrorKind::kInternal);
  }
  return exit_code_for(ErrorKind::kInternal);
}

}  // namespace repconc::cli

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

#include "repconc/ablation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "repconc/eval.hpp"

namespace repconc {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

Trainer train(const Model& model, const TrainingData& data, TrainConfig config,
              CodeTable codes, std::size_t steps) {
  Trainer trainer(model, data, std::move(config), std::move(codes));
  for (std::size_t s = 0; s < steps; ++s) trainer.step();
  return trainer;
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

double evaluate_mrr(const Model& model, const Matrix& doc_features, const CodeTable& codes,
                    const QuerySet& queries, const Qrels& qrels, std::size_t cutoff) {
  const IvfIndex index = build_model_index(model, doc_features, 1, 0, &codes);
  const Matrix q = encode_queries(model, queries.vectors);
  std::vector<std::vector<std::uint32_t>> ranked(queries.size());
  parallel_for(queries.size(), [&](std::size_t r) {
    for (const SearchHit& hit : exhaustive_search(index, q.row(r), cutoff)) {
      ranked[r].push_back(hit.doc_id);
    }
  });
  Rankings rankings;
  for (std::size_t r = 0; r < queries.size(); ++r) rankings[queries.ids[r]] = ranked[r];
  return mrr_at_k(rankings, qrels, cutoff).value;
}

bool AblationResult::monotone() const {
  for (std::size_t r = 1; r < kNumRungs; ++r) {
    if (median[r] < median[r - 1]) return false;
  }
  return true;
}

std::string AblationResult::to_csv() const {
  std::ostringstream out;
  out << "seed";
  for (const char* name : kRungNames) out << ',' << name;
  out << ",entropy_unconstrained,entropy_constrained,top1_unconstrained,top1_constrained,"
         "seconds\n";
  for (const AblationRun& run : runs) {
    out << run.seed;
    for (double v : run.mrr) out << ',' << fmt(v);
    out << ',' << fmt(run.entropy_unconstrained) << ',' << fmt(run.entropy_constrained) << ','
        << fmt(run.top1_unconstrained) << ',' << fmt(run.top1_constrained) << ','
        << fmt(run.seconds) << '\n';
  }
  out << "median";
  for (double v : median) out << ',' << fmt(v);
  out << ",,,,," << fmt(seconds) << '\n';
  return out.str();
}

AblationResult run_ablation(const AblationConfig& config,
                            const std::function<void(const std::string&)>& log) {
  if (config.seeds.empty()) throw ConfigError("ablation: at least one seed is required");
  const auto start = Clock::now();
  AblationResult result;
  for (std::uint64_t seed : config.seeds) {
    const auto seed_start = Clock::now();
    SyntheticSpec spec = config.data;
    spec.seed = seed;
    const SyntheticBenchmark bench = generate_synthetic(spec);
    const Qrels test_qrels = bench.test_qrels();

    OpqOptions opq;
    opq.num_blocks = config.num_blocks;
    opq.num_centroids = config.num_centroids;
    opq.outer_iters = config.opq_outer_iters;
    opq.kmeans_iters = config.opq_kmeans_iters;
    opq.rotation = config.rotation;
    opq.seed = seed;
    const OpqResult warm = train_opq(bench.docs, opq);
    const std::size_t dim = bench.docs.cols();
    const Model base = Model::from_warmup(Encoder::identity(dim), Encoder::identity(dim),
                                          warm.codebook, warm.rotation);
    const CodeTable base_codes = quantize_corpus(base, bench.docs);

    TrainingData data;
    data.doc_features = &bench.docs;
    data.query_features = &bench.train_queries.vectors;
    data.positives.resize(bench.train_relevant.size());
    for (std::size_t q = 0; q < bench.train_relevant.size(); ++q) {
      data.positives[q] = {bench.train_relevant[q]};
    }

    AblationRun run;
    run.seed = seed;
    auto score = [&](const Model& model, const CodeTable& codes) {
      return evaluate_mrr(model, bench.docs, codes, bench.test_queries, test_qrels,
                          config.cutoff);
    };
    run.mrr[0] = score(base, base_codes);

    TrainConfig stage1 = config.train;
    stage1.stage = 1;
    stage1.seed = seed;
    stage1.assignment = AssignmentMode::kUnconstrained;
    Trainer clustering = train(base, data, stage1, base_codes, config.stage1_steps);
    clustering.refresh_corpus_codes();
    run.mrr[1] = score(clustering.model(), clustering.corpus_codes());

    stage1.assignment = AssignmentMode::kConstrained;
    Trainer constraint = train(base, data, stage1, base_codes, config.stage1_steps);
    constraint.refresh_corpus_codes();
    run.mrr[2] = score(constraint.model(), constraint.corpus_codes());

    const CodeBalance loose = code_balance(clustering.corpus_codes(), config.num_centroids);
    const CodeBalance tight = code_balance(constraint.corpus_codes(), config.num_centroids);
    run.entropy_unconstrained = loose.mean_entropy;
    run.entropy_constrained = tight.mean_entropy;
    run.top1_unconstrained = loose.top1_fraction;
    run.top1_constrained = tight.top1_fraction;

    TrainConfig stage2 = config.train;
    stage2.stage = 2;
    stage2.seed = seed ^ 0x5eedULL;
    Trainer dynamic = train(constraint.model(), data, stage2, constraint.corpus_codes(),
                            config.stage2_steps);
    run.mrr[3] = score(dynamic.model(), dynamic.corpus_codes());

    run.seconds = seconds_since(seed_start);
    if (log) {
      std::ostringstream line;
      line << "seed " << seed << ":";
      for (std::size_t r = 0; r < kNumRungs; ++r) line << ' ' << kRungNames[r] << '=' << fmt(run.mrr[r]);
      line << " entropy " << fmt(run.entropy_unconstrained) << " -> "
           << fmt(run.entropy_constrained) << " (" << fmt(run.seconds) << " s)";
      log(line.str());
    }
    result.runs.push_back(run);
  }
  for (std::size_t r = 0; r < kNumRungs; ++r) {
    std::vector<double> values;
    for (const AblationRun& run : result.runs) values.push_back(run.mrr[r]);
    result.median[r] = median(std::move(values));
  }
  result.seconds = seconds_since(start);
  return result;
}

}  // namespace repconc

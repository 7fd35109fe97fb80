#include "wta/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include "wta/binary_io.hpp"
#include "wta/checkpoint.hpp"
#include "wta/error.hpp"
#include "wta/metrics.hpp"
#include "wta/run_config.hpp"

namespace wta {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::filesystem::path echo_path(const std::filesystem::path& artifact) {
  return artifact.string() + ".config.json";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, [&](std::ostream& o) { o << text; }, false);
}

void write_echo(const std::filesystem::path& artifact, const json& config) {
  write_text(echo_path(artifact), config.dump(2) + "\n");
}

struct LoadedData {
  Dataset train;
  Dataset test;
};

LoadedData load_training_data(const RunConfig& cfg) {
  LoadedData d;
  if (cfg.data.synthetic) {
    const auto& s = *cfg.data.synthetic;
    auto all = gen_clustered(s.classes, s.dim, s.per_class, s.spread, s.seed);
    auto [train, test] = split_per_class(all, s.test_per_class);
    d.train = std::move(train);
    d.test = std::move(test);
  } else if (cfg.data.train) {
    d.train = load_dataset(*cfg.data.train);
    if (cfg.data.test) d.test = load_dataset(*cfg.data.test);
  } else {
    throw ConfigError("config needs data.train or data.synthetic");
  }
  if (d.train.empty()) throw InputError("training dataset is empty");
  if (!d.test.empty() && (d.test.dim() != d.train.dim() || d.test.num_classes() != d.train.num_classes())) {
    throw DimensionError("test dataset shape differs from the training dataset");
  }
  return d;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides, std::ostream& out) {
  const RunConfig cfg = load_run_config(config_path, overrides);
  if (!cfg.output.checkpoint) throw ConfigError("config needs output.checkpoint for train");
  LoadedData data = load_training_data(cfg);

  const std::uint32_t dim = data.train.dim();
  const WtaParams params = cfg.wta_params(dim);
  Trainer trainer(make_model(cfg.layer, cfg.mode, data.train.num_classes(), dim, cfg.train.seed, &params),
                  cfg.train);

  std::ostringstream log;
  log << "step,loss,lr,miss_rate,mean_active\n";
  for (std::uint64_t s = 0; s < cfg.train.steps; ++s) {
    const auto rows = trainer.next_batch(data.train.size());
    const StepMetrics m = trainer.step(data.train, rows);
    log << m.step << ',' << fmt(m.loss) << ',' << fmt(m.lr) << ',' << fmt(m.miss_rate) << ','
        << fmt(m.mean_active) << '\n';
  }

  json echo = cfg.to_json();
  echo["wta"] = {{"k", params.window}, {"P", params.permutations}, {"M", params.bands}, {"seed", params.seed}};
  if (cfg.output.log) {
    write_text(*cfg.output.log, log.str());
    write_echo(*cfg.output.log, echo);
  }
  if (cfg.output.test_data && !data.test.empty()) save_dataset_binary(data.test, *cfg.output.test_data);
  Checkpoint ck{trainer.model(), trainer.steps_taken(), trainer.cursor().next()};
  save_checkpoint(ck, *cfg.output.checkpoint);
  write_echo(*cfg.output.checkpoint, echo);

  out << "trained " << to_string(cfg.layer) << " for " << trainer.steps_taken() << " steps\n";
  if (!data.test.empty()) {
    PredictOptions opts;
    opts.top_k = cfg.train.top_k;
    const auto preds = top1(predict_rankings(trainer.model(), data.test, opts));
    out << "test top1 " << fmt(top1_accuracy(preds, data.test)) << '\n';
  }
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::size_t top_k = 100;
  std::vector<std::string> metrics{"top1"};
  bool exact = false;
  std::string out;
};

std::size_t parse_precision_metric(const std::string& name) {
  if (name.rfind("p@", 0) != 0) return 0;
  try {
    std::size_t pos = 0;
    const auto k = std::stoul(name.substr(2), &pos);
    if (pos + 2 == name.size() && k >= 1) return k;
  } catch (const std::exception&) {
  }
  return 0;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  std::size_t depth = 1;
  for (const auto& m : a.metrics) {
    if (m == "top1" || m == "miss_rate") continue;
    const std::size_t k = parse_precision_metric(m);
    if (k == 0) throw UsageError("unknown metric '" + m + "' (use top1, miss_rate or p@<k>)");
    depth = std::max(depth, k);
  }
  if (a.top_k < 1) throw UsageError("--K must be >= 1");
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const Dataset data = load_dataset(a.data);
  if (data.empty()) throw InputError("evaluation dataset is empty");
  if (data.dim() != ck.model.dim) throw DimensionError("dataset dimension differs from the checkpoint");

  PredictOptions opts;
  opts.force_exact = a.exact;
  opts.top_k = a.top_k;
  opts.depth = depth;
  RetrievalStats stats;
  const auto rankings = predict_rankings(ck.model, data, opts, &stats);
  const auto truths = truth_sets(data);

  std::ostringstream csv;
  csv << "metric,value\n";
  for (const auto& m : a.metrics) {
    double v = 0.0;
    if (m == "top1") {
      v = top1_accuracy(top1(rankings), data);
    } else if (m == "miss_rate") {
      v = stats.miss_rate();
    } else {
      v = precision_at_k(rankings, truths, parse_precision_metric(m)).value;
    }
    csv << m << ',' << fmt(v) << '\n';
  }
  if (a.out.empty()) {
    out << csv.str();
  } else {
    write_text(a.out, csv.str());
    std::string metrics;
    for (const auto& m : a.metrics) metrics += (metrics.empty() ? "" : ",") + m;
    write_echo(a.out, {{"checkpoint", a.checkpoint},
                       {"data", a.data},
                       {"K", a.top_k},
                       {"metrics", metrics},
                       {"exact", a.exact || ck.model.kind == LayerKind::kExact}});
  }
  return kExitOk;
}

struct BenchArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  bool tradeoff = false;
  std::string checkpoint;
  std::string data;
  std::vector<std::size_t> k_grid{10, 30, 100, 300, 1000};
  std::string svg;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  RunConfig cfg = a.config.empty() ? parse_run_config("{}", a.overrides) : load_run_config(a.config, a.overrides);
  std::ostringstream csv;
  std::ostringstream svg;
  json echo = cfg.to_json();
  if (!a.tradeoff) {
    ForwardBenchConfig b = cfg.bench;
    b.wta = cfg.wta_params(static_cast<std::uint32_t>(b.dim));
    echo["wta"] = {{"k", b.wta.window}, {"P", b.wta.permutations}, {"M", b.wta.bands}, {"seed", b.wta.seed}};
    bench_forward(b).write_csv(csv);
  } else {
    if (a.checkpoint.empty() || a.data.empty()) throw UsageError("--tradeoff needs --checkpoint and --data");
    if (a.k_grid.empty()) throw UsageError("--K-grid must not be empty");
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const Dataset data = load_dataset(a.data);
    if (data.empty()) throw InputError("evaluation dataset is empty");
    if (data.dim() != ck.model.dim) throw DimensionError("dataset dimension differs from the checkpoint");
    const WtaParams params =
        ck.model.index ? ck.model.index->params() : cfg.wta_params(static_cast<std::uint32_t>(ck.model.dim));
    const TradeoffReport report = bench_tradeoff(ck.model.weights, data, a.k_grid, params);
    report.write_csv(csv);
    if (!a.svg.empty()) report.write_svg(svg);
    echo["wta"] = {{"k", params.window}, {"P", params.permutations}, {"M", params.bands}, {"seed", params.seed}};
    echo["tradeoff"] = {{"checkpoint", a.checkpoint}, {"data", a.data}, {"K_grid", a.k_grid}};
  }
  std::string out_path = a.out;
  if (out_path.empty() && cfg.output.bench) out_path = cfg.output.bench->string();
  if (out_path.empty()) {
    out << csv.str();
  } else {
    write_text(out_path, csv.str());
    write_echo(out_path, echo);
  }
  if (!a.svg.empty()) write_text(a.svg, svg.str());
  return kExitOk;
}

struct StatsArgs {
  std::string checkpoint;
  std::string data;
  std::size_t top_k = 100;
  std::string out;
};

std::string pow2_bin(std::size_t size) {
  std::size_t lo = 1;
  while (lo * 2 <= size) lo *= 2;
  const std::size_t hi = lo * 2 - 1;
  return lo == hi ? std::to_string(lo) : std::to_string(lo) + "-" + std::to_string(hi);
}

int cmd_index_stats(const StatsArgs& a, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  if (!ck.model.index) throw InputError("checkpoint has no WTA index");
  const LshIndex& index = *ck.model.index;
  const WtaParams& p = index.params();

  std::size_t occupied = 0;
  std::size_t max_size = 0;
  std::size_t total_entries = 0;
  std::map<std::size_t, std::size_t> bins;  // keyed by lower bin edge
  std::vector<std::size_t> per_table(p.bands, 0);
  for (std::uint32_t m = 0; m < p.bands; ++m) {
    index.table(m).for_each_bucket([&](std::uint64_t, const std::vector<ClassId>& ids) {
      ++per_table[m];
      ++occupied;
      max_size = std::max(max_size, ids.size());
      total_entries += ids.size();
      std::size_t lo = 1;
      while (lo * 2 <= ids.size()) lo *= 2;
      ++bins[lo];
    });
  }

  std::ostringstream csv;
  csv << "kind,key,value\n";
  csv << "summary,classes," << index.size() << '\n';
  csv << "summary,tables," << p.bands << '\n';
  csv << "summary,occupied_buckets," << occupied << '\n';
  csv << "summary,max_bucket_size," << max_size << '\n';
  csv << "summary,mean_bucket_size," << fmt(occupied ? double(total_entries) / double(occupied) : 0.0) << '\n';
  for (const auto& [lo, count] : bins) csv << "bucket_size_hist," << pow2_bin(lo) << ',' << count << '\n';
  for (std::uint32_t m = 0; m < p.bands; ++m) csv << "occupied_per_table," << m << ',' << per_table[m] << '\n';

  if (!a.data.empty()) {
    if (a.top_k < 1) throw UsageError("--K must be >= 1");
    const Dataset data = load_dataset(a.data);
    if (data.empty()) throw InputError("query dataset is empty");
    if (data.dim() != ck.model.dim) throw DimensionError("dataset dimension differs from the checkpoint");
    std::size_t empty_bands = 0;
    std::size_t misses = 0;
    std::size_t candidates = 0;
    std::vector<std::uint64_t> keys(p.bands);
    std::vector<std::uint16_t> codes(p.permutations);
    QueryScratch scratch;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto x = data.features(i);
      wta_hash_into(x, index.permutations(), codes);
      band_keys_into(codes, p, keys);
      for (std::uint32_t m = 0; m < p.bands; ++m) {
        if (index.table(m).find(keys[m]) == nullptr) ++empty_bands;
      }
      const auto found = index.query(x, a.top_k, scratch);
      if (found.empty()) ++misses;
      candidates += found.size();
    }
    const double n = double(data.size());
    csv << "query,queries," << data.size() << '\n';
    csv << "query,empty_band_fraction," << fmt(double(empty_bands) / (n * p.bands)) << '\n';
    csv << "query,miss_rate," << fmt(double(misses) / n) << '\n';
    csv << "query,mean_candidates," << fmt(double(candidates) / n) << '\n';
  }

  if (a.out.empty()) {
    out << csv.str();
  } else {
    write_text(a.out, csv.str());
    write_echo(a.out, {{"checkpoint", a.checkpoint},
                       {"data", a.data.empty() ? json(nullptr) : json(a.data)},
                       {"K", a.top_k},
                       {"wta", {{"k", p.window}, {"P", p.permutations}, {"M", p.bands}, {"seed", p.seed}}}});
  }
  return kExitOk;
}

struct GenArgs {
  std::uint32_t classes = 100;
  std::uint32_t dim = 32;
  std::uint32_t per_class = 10;
  double spread = 0.1;
  std::uint64_t seed = 7;
  std::uint32_t test_per_class = 0;
  std::string out;
  std::string test_out;
  bool text = false;
};

int cmd_gen_data(const GenArgs& a, std::ostream& out) {
  if (a.classes < 1 || a.dim < 1 || a.per_class < 1) throw UsageError("classes, dim and per-class must be >= 1");
  if (a.test_per_class >= a.per_class) throw UsageError("--test-per-class must be smaller than --per-class");
  if (a.test_per_class > 0 && a.test_out.empty()) throw UsageError("--test-per-class needs --test-out");
  const Dataset all = gen_clustered(a.classes, a.dim, a.per_class, a.spread, a.seed);
  auto [train, test] = split_per_class(all, a.test_per_class);
  const auto save = [&](const Dataset& d, const std::string& path) {
    if (a.text) {
      save_dataset_text(d, path);
    } else {
      save_dataset_binary(d, path);
    }
  };
  save(train, a.out);
  if (a.test_per_class > 0) save(test, a.test_out);
  out << "wrote " << train.size() << " training examples";
  if (a.test_per_class > 0) out << " and " << test.size() << " test examples";
  out << '\n';
  return kExitOk;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(item, &pos);
      if (pos != item.size()) throw UsageError("bad list entry '" + item + "'");
      values.push_back(v);
    } catch (const std::logic_error&) {
      throw UsageError("bad list entry '" + item + "'");
    }
  }
  return values;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"WTA-hash approximate softmax: training, evaluation and benchmarks", "wtasoftmax"};
  app.require_subcommand(1);

  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> steps;
  std::optional<std::uint64_t> seed;
  auto* train = app.add_subcommand("train", "Train an output layer from a JSON config");
  train->add_option("-c,--config", config, "JSON config file")->required();
  train->add_option("--set", overrides, "Override a config key, e.g. --set train.steps=50");
  train->add_option("--steps", steps, "Shortcut for --set train.steps=N");
  train->add_option("--seed", seed, "Shortcut for --set train.seed=S");

  EvalArgs eval_args;
  std::string metrics = "top1";
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", eval_args.data, "Dataset file")->required();
  eval->add_option("--K", eval_args.top_k, "Retrieved classes per query for WTA models");
  eval->add_option("--metrics", metrics, "Comma-separated: top1, miss_rate, p@<k>");
  eval->add_flag("--exact", eval_args.exact, "Score every class instead of retrieving candidates");
  eval->add_option("-o,--out", eval_args.out, "Metrics CSV (stdout when omitted)");

  BenchArgs bench_args;
  std::string k_grid;
  auto* bench = app.add_subcommand("bench", "Forward-pass latency or accuracy/speed trade-off benchmark");
  bench->add_option("-c,--config", bench_args.config, "JSON config file (bench section)");
  bench->add_option("--set", bench_args.overrides, "Override a config key");
  bench->add_option("-o,--out", bench_args.out, "CSV report (stdout when omitted)");
  bench->add_flag("--tradeoff", bench_args.tradeoff, "Sweep K on a trained checkpoint");
  bench->add_option("--checkpoint", bench_args.checkpoint, "Checkpoint for --tradeoff");
  bench->add_option("--data", bench_args.data, "Evaluation dataset for --tradeoff");
  bench->add_option("--K-grid", k_grid, "Comma-separated K values for --tradeoff");
  bench->add_option("--svg", bench_args.svg, "Also write an SVG plot for --tradeoff");

  StatsArgs stats_args;
  auto* stats = app.add_subcommand("index-stats", "Bucket occupancy and retrieval statistics of a WTA index");
  stats->add_option("--checkpoint", stats_args.checkpoint, "Checkpoint with a WTA index")->required();
  stats->add_option("--data", stats_args.data, "Optional query dataset for miss and empty-band rates");
  stats->add_option("--K", stats_args.top_k, "Retrieved classes per query");
  stats->add_option("-o,--out", stats_args.out, "CSV output (stdout when omitted)");

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic clustered dataset");
  gen->add_option("--classes", gen_args.classes, "Number of classes");
  gen->add_option("--dim", gen_args.dim, "Feature dimension");
  gen->add_option("--per-class", gen_args.per_class, "Examples per class");
  gen->add_option("--spread", gen_args.spread, "Noise standard deviation")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gen_args.seed, "Generator seed");
  gen->add_option("--test-per-class", gen_args.test_per_class, "Examples per class moved to --test-out");
  gen->add_option("-o,--out", gen_args.out, "Output dataset")->required();
  gen->add_option("--test-out", gen_args.test_out, "Held-out split output");
  gen->add_flag("--text", gen_args.text, "Write the text format instead of binary");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed()) {
      if (steps) overrides.push_back("train.steps=" + std::to_string(*steps));
      if (seed) overrides.push_back("train.seed=" + std::to_string(*seed));
      return cmd_train(config, overrides, out);
    }
    if (eval->parsed()) {
      eval_args.metrics.clear();
      std::stringstream ss(metrics);
      std::string m;
      while (std::getline(ss, m, ',')) {
        if (!m.empty()) eval_args.metrics.push_back(m);
      }
      if (eval_args.metrics.empty()) throw UsageError("--metrics is empty");
      return cmd_eval(eval_args, out);
    }
    if (bench->parsed()) {
      if (!k_grid.empty()) bench_args.k_grid = parse_size_list(k_grid);
      return cmd_bench(bench_args, out);
    }
    if (stats->parsed()) return cmd_index_stats(stats_args, out);
    if (gen->parsed()) return cmd_gen_data(gen_args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace wta

#include "wta/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "wta/error.hpp"
#include "wta/hsoftmax.hpp"
#include "wta/layers.hpp"
#include "wta/metrics.hpp"
#include "wta/rng.hpp"

namespace wta {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Cells whose median is within this many timer ticks are flagged unreliable.
constexpr double kMinTicks = 100.0;

std::string fmt_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::size_t argmax(std::span<const Real> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::size_t sparse_argmax(const SparseActivation& act) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < act.size(); ++i) {
    if (act.probs[i] > act.probs[best] || (act.probs[i] == act.probs[best] && act.ids[i] < act.ids[best])) best = i;
  }
  return act.ids[best];
}

}  // namespace

LatencySummary summarize(std::vector<double> samples) {
  LatencySummary s;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(samples.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return samples[lo] + (samples[hi] - samples[lo]) * (pos - static_cast<double>(lo));
  };
  s.median = quantile(0.5);
  s.iqr = quantile(0.75) - quantile(0.25);
  return s;
}

double timer_resolution_ms() {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 200; ++i) {
    const auto a = Clock::now();
    auto b = Clock::now();
    while (b == a) b = Clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(b - a).count());
  }
  return best;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string ForwardBenchConfig::describe() const {
  std::ostringstream ss;
  ss << "N=" << num_classes << ";d=" << dim << ";batch=";
  for (auto b : batch_sizes) ss << b << ',';
  ss << ";K=";
  for (auto k : top_k_values) ss << k << ',';
  ss << ";reps=" << repetitions << ";warmup=" << warmup << ";hs=" << include_hs << ";threads=" << exact_threads
     << ";k=" << wta.window << ";P=" << wta.permutations << ";M=" << wta.bands << ";wta_seed=" << wta.seed
     << ";seed=" << seed << ";agree=" << agreement_queries;
  return ss.str();
}

void BenchReport::write_csv(std::ostream& out) const {
  out << "# timestamp=" << timestamp << "\n# config_hash=" << config_hash << '\n';
  out << "kind,N,d,batch,K,reps,median_ms,iqr_ms,speedup,accuracy_fraction,reliable\n";
  for (const auto& r : rows) {
    out << r.kind << ',' << r.num_classes << ',' << r.dim << ',' << r.batch << ',' << r.top_k << ',' << r.reps << ','
        << fmt_double(r.median_ms) << ',' << fmt_double(r.iqr_ms) << ',' << fmt_double(r.speedup) << ','
        << fmt_double(r.accuracy_fraction) << ',' << (r.reliable ? 1 : 0) << '\n';
  }
}

const BenchRow* BenchReport::find(const std::string& kind, std::size_t batch, std::size_t top_k) const {
  for (const auto& r : rows) {
    if (r.kind == kind && r.batch == batch && r.top_k == top_k) return &r;
  }
  return nullptr;
}

BenchReport bench_forward(const ForwardBenchConfig& config) {
  if (config.repetitions < 30) throw ConfigError("bench: at least 30 repetitions are required");
  if (config.batch_sizes.empty()) throw ConfigError("bench: no batch sizes");
  const std::size_t n = config.num_classes;
  const std::size_t d = config.dim;
  WtaParams params = config.wta;
  params.dim = static_cast<std::uint32_t>(d);
  params.validate();

  BenchReport report;
  report.timestamp = utc_timestamp();
  char hash[20];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(fnv1a64(config.describe())));
  report.config_hash = hash;
  const double resolution = timer_resolution_ms();

  const ParamMatrix weights = ParamMatrix::gaussian(n, d, derive_seed(config.seed, 20));
  auto build_start = Clock::now();
  const LshIndex index = LshIndex::build(weights, params);
  BenchRow build_row;
  build_row.kind = "wta_build";
  build_row.num_classes = n;
  build_row.dim = d;
  build_row.reps = 1;
  build_row.median_ms = ms_since(build_start);
  build_row.speedup = std::numeric_limits<double>::quiet_NaN();
  build_row.accuracy_fraction = std::numeric_limits<double>::quiet_NaN();
  report.rows.push_back(build_row);

  // Queries sit near randomly chosen class vectors.
  const std::size_t max_batch = *std::max_element(config.batch_sizes.begin(), config.batch_sizes.end());
  const std::size_t pool = std::max(max_batch * 4, config.agreement_queries);
  Rng rng(derive_seed(config.seed, 21));
  std::vector<Real> queries(pool * d);
  const double noise = 0.5 / std::sqrt(static_cast<double>(d));
  for (std::size_t q = 0; q < pool; ++q) {
    const auto w = weights.row(rng.bounded(n));
    for (std::size_t k = 0; k < d; ++k) queries[q * d + k] = w[k] + noise * rng.normal();
  }
  auto query = [&](std::size_t q) { return std::span<const Real>(queries.data() + (q % pool) * d, d); };

  std::vector<std::size_t> exact_top(config.agreement_queries);
  for (std::size_t q = 0; q < config.agreement_queries; ++q) {
    exact_top[q] = argmax(exact_softmax_forward(query(q), weights));
  }
  std::vector<double> agreement(config.top_k_values.size(), 0.0);
  {
    QueryScratch scratch;
    for (std::size_t ki = 0; ki < config.top_k_values.size(); ++ki) {
      std::size_t agree = 0;
      for (std::size_t q = 0; q < config.agreement_queries; ++q) {
        const auto act = sparse_softmax_forward(query(q), weights, index, config.top_k_values[ki], {}, nullptr, &scratch);
        if (!act.empty() && sparse_argmax(act) == exact_top[q]) ++agree;
      }
      agreement[ki] = config.agreement_queries == 0
                          ? std::numeric_limits<double>::quiet_NaN()
                          : static_cast<double>(agree) / static_cast<double>(config.agreement_queries);
    }
  }

  std::optional<HsTree> tree;
  if (config.include_hs && n >= 2) tree = hs_build_tree(n, d, derive_seed(config.seed, 22));

  volatile double sink = 0.0;
  auto measure = [&](auto&& body) {
    for (std::size_t i = 0; i < config.warmup; ++i) body(i);
    std::vector<double> samples;
    samples.reserve(config.repetitions);
    for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
      const auto start = Clock::now();
      body(rep + config.warmup);
      samples.push_back(ms_since(start));
    }
    return summarize(std::move(samples));
  };
  auto make_row = [&](const char* kind, std::size_t batch, std::size_t top_k, LatencySummary s) {
    BenchRow r;
    r.kind = kind;
    r.num_classes = n;
    r.dim = d;
    r.batch = batch;
    r.top_k = top_k;
    r.reps = config.repetitions;
    r.median_ms = s.median;
    r.iqr_ms = s.iqr;
    r.reliable = s.median >= kMinTicks * resolution;
    r.accuracy_fraction = std::numeric_limits<double>::quiet_NaN();
    return r;
  };

  for (std::size_t batch : config.batch_sizes) {
    std::vector<Real> xs(batch * d);
    const LatencySummary exact = measure([&](std::size_t rep) {
      for (std::size_t b = 0; b < batch; ++b) {
        const auto q = query(rep * batch + b);
        std::copy(q.begin(), q.end(), xs.begin() + static_cast<std::ptrdiff_t>(b * d));
      }
      std::vector<Real> probs = exact_logits_batch(xs, batch, weights, config.exact_threads);
      softmax_rows_inplace(probs, batch);
      sink = sink + probs[0];
    });
    BenchRow exact_row = make_row("exact", batch, n, exact);
    exact_row.speedup = 1.0;
    exact_row.accuracy_fraction = 1.0;
    report.rows.push_back(exact_row);

    QueryScratch scratch;
    for (std::size_t ki = 0; ki < config.top_k_values.size(); ++ki) {
      const std::size_t top_k = config.top_k_values[ki];
      const LatencySummary s = measure([&](std::size_t rep) {
        for (std::size_t b = 0; b < batch; ++b) {
          const auto act = sparse_softmax_forward(query(rep * batch + b), weights, index, top_k, {}, nullptr, &scratch);
          sink = sink + (act.empty() ? 0.0 : act.probs[0]);
        }
      });
      BenchRow row = make_row("wta", batch, top_k, s);
      row.speedup = exact.median / s.median;
      row.accuracy_fraction = agreement[ki];
      report.rows.push_back(row);
    }

    if (tree) {
      const LatencySummary s = measure([&](std::size_t rep) {
        for (std::size_t b = 0; b < batch; ++b) sink = sink + hs_predict_greedy(query(rep * batch + b), *tree);
      });
      BenchRow row = make_row("hs", batch, 0, s);
      row.speedup = exact.median / s.median;
      report.rows.push_back(row);
    }
  }
  return report;
}

void TradeoffReport::write_csv(std::ostream& out) const {
  out << "# timestamp=" << timestamp << "\n# config_hash=" << config_hash
      << "\n# index_build_ms=" << fmt_double(index_build_ms) << '\n';
  out << "K,accuracy,baseline_accuracy,accuracy_fraction,wta_median_ms,exact_median_ms,speedup,miss_rate,mean_active\n";
  for (const auto& r : rows) {
    out << r.top_k << ',' << fmt_double(r.accuracy) << ',' << fmt_double(r.baseline_accuracy) << ','
        << fmt_double(r.accuracy_fraction) << ',' << fmt_double(r.wta_median_ms) << ','
        << fmt_double(r.exact_median_ms) << ',' << fmt_double(r.speedup) << ',' << fmt_double(r.miss_rate) << ','
        << fmt_double(r.mean_active) << '\n';
  }
}

void TradeoffReport::write_svg(std::ostream& out) const {
  constexpr double kW = 640, kH = 360, kPad = 50;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (rows.empty()) {
    out << "</svg>\n";
    return;
  }
  double lo = std::log10(static_cast<double>(rows.front().top_k));
  double hi = std::log10(static_cast<double>(rows.back().top_k));
  if (hi <= lo) hi = lo + 1;
  double max_speedup = 1.0;
  for (const auto& r : rows) max_speedup = std::max(max_speedup, r.speedup);
  auto px = [&](std::size_t k) {
    return kPad + (std::log10(static_cast<double>(k)) - lo) / (hi - lo) * (kW - 2 * kPad);
  };
  auto py = [&](double v, double vmax) { return kH - kPad - std::clamp(v / vmax, 0.0, 1.0) * (kH - 2 * kPad); };
  out << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">K (log scale)</text>\n";
  auto polyline = [&](const char* color, auto value, double vmax) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& r : rows) out << px(r.top_k) << ',' << py(value(r), vmax) << ' ';
    out << "\"/>\n";
  };
  polyline("steelblue", [](const TradeoffRow& r) { return r.accuracy_fraction; }, 1.0);
  polyline("firebrick", [](const TradeoffRow& r) { return r.speedup; }, max_speedup);
  out << "<text x=\"" << kPad << "\" y=\"20\" fill=\"steelblue\">fraction of baseline accuracy (0..1)</text>\n";
  out << "<text x=\"" << kPad << "\" y=\"38\" fill=\"firebrick\">speedup (0.." << fmt_double(max_speedup)
      << ")</text>\n";
  out << "</svg>\n";
}

TradeoffReport bench_tradeoff(const ParamMatrix& weights, const Dataset& data, const std::vector<std::size_t>& k_grid,
                              const WtaParams& params) {
  if (data.empty()) throw UsageError("bench_tradeoff: empty dataset");
  if (data.dim() != weights.dim()) throw DimensionError("bench_tradeoff: dataset dim does not match weights");
  TradeoffReport report;
  report.timestamp = utc_timestamp();
  std::ostringstream desc;
  desc << "N=" << weights.rows() << ";d=" << weights.dim() << ";examples=" << data.size() << ";k=" << params.window
       << ";P=" << params.permutations << ";M=" << params.bands << ";seed=" << params.seed << ";K=";
  for (auto k : k_grid) desc << k << ',';
  char hash[20];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(fnv1a64(desc.str())));
  report.config_hash = hash;

  const auto build_start = Clock::now();
  const LshIndex index = LshIndex::build(weights, params);
  report.index_build_ms = ms_since(build_start);

  std::vector<Real> x(weights.dim());
  std::vector<ClassId> exact_pred(data.size());
  std::vector<double> exact_ms(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data.features_f64(i, x);
    const auto start = Clock::now();
    const auto probs = exact_softmax_forward(x, weights);
    exact_ms[i] = ms_since(start);
    exact_pred[i] = static_cast<ClassId>(argmax(probs));
  }
  const double baseline = top1_accuracy(exact_pred, data);
  const double exact_median = summarize(exact_ms).median;

  QueryScratch scratch;
  for (std::size_t top_k : k_grid) {
    RetrievalStats stats;
    std::vector<ClassId> pred(data.size());
    std::vector<double> wta_ms(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      data.features_f64(i, x);
      const auto start = Clock::now();
      const auto act = sparse_softmax_forward(x, weights, index, top_k, {}, &stats, &scratch);
      pred[i] = act.empty() ? kNoPrediction : static_cast<ClassId>(sparse_argmax(act));
      wta_ms[i] = ms_since(start);
    }
    TradeoffRow row;
    row.top_k = top_k;
    row.accuracy = top1_accuracy(pred, data);
    row.baseline_accuracy = baseline;
    row.accuracy_fraction = baseline > 0 ? row.accuracy / baseline : std::numeric_limits<double>::quiet_NaN();
    row.wta_median_ms = summarize(wta_ms).median;
    row.exact_median_ms = exact_median;
    row.speedup = exact_median / row.wta_median_ms;
    row.miss_rate = stats.miss_rate();
    row.mean_active = static_cast<double>(stats.active_total.load()) / static_cast<double>(data.size());
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace wta

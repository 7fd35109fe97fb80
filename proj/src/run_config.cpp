#include "wta/run_config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "wta/error.hpp"

namespace wta {

using nlohmann::json;

namespace {

void check_object(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + "." + key + "' has the wrong type");
  }
}

template <typename T>
void read(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  T v{};
  read(j, key, v, where);
  out = v;
}

void read_path(const json& j, const char* key, std::optional<std::filesystem::path>& out, const std::string& where) {
  std::optional<std::string> s;
  read(j, key, s, where);
  if (s) out = *s;
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json opt_path(const std::optional<std::filesystem::path>& p) { return p ? json(p->string()) : json(nullptr); }

void set_path(json& root, const std::string& dotted, const json& value) {
  json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const auto dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("bad override key '" + dotted + "'");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    if (!node->is_object()) throw ConfigError("override '" + dotted + "' descends into a non-object");
    start = dot + 1;
  }
}

json apply_overrides(json root, const std::vector<std::string>& overrides) {
  if (root.is_null()) root = json::object();
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    const std::string key = o.substr(0, eq);
    const std::string raw = o.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;
    }
    set_path(root, key, value);
  }
  return root;
}

}  // namespace

WtaParams RunConfig::wta_params(std::uint32_t dim) const {
  WtaParams p = profile == "full" ? WtaParams::full_defaults(dim, wta_seed) : WtaParams::desk_defaults(dim, wta_seed);
  if (wta_window) p.window = *wta_window;
  if (wta_permutations) p.permutations = *wta_permutations;
  if (wta_bands) p.bands = *wta_bands;
  return p;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  check_object(j, "", {"profile", "layer", "mode", "wta", "train", "data", "output", "bench"});
  read(j, "profile", c.profile, "");
  if (c.profile != "desk" && c.profile != "full") throw ConfigError("profile must be 'full' or 'desk'");
  if (j.contains("layer")) {
    std::string s;
    read(j, "layer", s, "");
    c.layer = parse_layer_kind(s.c_str());
  }
  if (j.contains("mode")) {
    std::string s;
    read(j, "mode", s, "");
    c.mode = parse_output_mode(s.c_str());
  }
  if (j.contains("wta")) {
    const json& w = j.at("wta");
    check_object(w, "wta", {"k", "P", "M", "seed"});
    read(w, "k", c.wta_window, "wta");
    read(w, "P", c.wta_permutations, "wta");
    read(w, "M", c.wta_bands, "wta");
    read(w, "seed", c.wta_seed, "wta");
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    check_object(t, "train", {"learning_rate", "decay", "decay_interval", "momentum", "batch_size", "K",
                              "rehash_batch", "refresh_touched", "steps", "seed"});
    read(t, "learning_rate", c.train.learning_rate, "train");
    read(t, "decay", c.train.decay, "train");
    read(t, "decay_interval", c.train.decay_interval, "train");
    read(t, "momentum", c.train.momentum, "train");
    read(t, "batch_size", c.train.batch_size, "train");
    read(t, "K", c.train.top_k, "train");
    read(t, "rehash_batch", c.train.rehash_batch, "train");
    read(t, "refresh_touched", c.train.refresh_touched, "train");
    read(t, "steps", c.train.steps, "train");
    read(t, "seed", c.train.seed, "train");
  }
  c.train.validate();
  if (j.contains("data")) {
    const json& d = j.at("data");
    check_object(d, "data", {"train", "test", "synthetic"});
    read_path(d, "train", c.data.train, "data");
    read_path(d, "test", c.data.test, "data");
    if (d.contains("synthetic") && !d.at("synthetic").is_null()) {
      const json& s = d.at("synthetic");
      check_object(s, "data.synthetic", {"classes", "dim", "per_class", "test_per_class", "spread", "seed"});
      SyntheticSpec spec;
      read(s, "classes", spec.classes, "data.synthetic");
      read(s, "dim", spec.dim, "data.synthetic");
      read(s, "per_class", spec.per_class, "data.synthetic");
      read(s, "test_per_class", spec.test_per_class, "data.synthetic");
      read(s, "spread", spec.spread, "data.synthetic");
      read(s, "seed", spec.seed, "data.synthetic");
      if (spec.classes < 1 || spec.dim < 1 || spec.per_class < 1) {
        throw ConfigError("data.synthetic: classes, dim and per_class must be >= 1");
      }
      if (spec.test_per_class >= spec.per_class) {
        throw ConfigError("data.synthetic: test_per_class must be smaller than per_class");
      }
      if (!(spec.spread >= 0.0)) throw ConfigError("data.synthetic: spread must be >= 0");
      c.data.synthetic = spec;
    }
    if (c.data.synthetic && c.data.train) throw ConfigError("data: give either 'train' or 'synthetic', not both");
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    check_object(o, "output", {"checkpoint", "log", "test_data", "bench"});
    read_path(o, "checkpoint", c.output.checkpoint, "output");
    read_path(o, "log", c.output.log, "output");
    read_path(o, "test_data", c.output.test_data, "output");
    read_path(o, "bench", c.output.bench, "output");
  }
  if (j.contains("bench")) {
    const json& b = j.at("bench");
    check_object(b, "bench", {"classes", "dim", "batch_sizes", "K_values", "repetitions", "warmup",
                              "agreement_queries", "include_hs", "threads", "seed"});
    read(b, "classes", c.bench.num_classes, "bench");
    read(b, "dim", c.bench.dim, "bench");
    read(b, "batch_sizes", c.bench.batch_sizes, "bench");
    read(b, "K_values", c.bench.top_k_values, "bench");
    read(b, "repetitions", c.bench.repetitions, "bench");
    read(b, "warmup", c.bench.warmup, "bench");
    read(b, "agreement_queries", c.bench.agreement_queries, "bench");
    read(b, "include_hs", c.bench.include_hs, "bench");
    read(b, "threads", c.bench.exact_threads, "bench");
    read(b, "seed", c.bench.seed, "bench");
    if (c.bench.repetitions < 30) throw ConfigError("bench.repetitions must be >= 30");
    if (c.bench.num_classes < 1 || c.bench.dim < 1) throw ConfigError("bench: classes and dim must be >= 1");
    for (auto b_size : c.bench.batch_sizes) {
      if (b_size < 1) throw ConfigError("bench.batch_sizes entries must be >= 1");
    }
    for (auto k : c.bench.top_k_values) {
      if (k < 1) throw ConfigError("bench.K_values entries must be >= 1");
    }
  }
  return c;
}

json RunConfig::to_json() const {
  json j;
  j["profile"] = profile;
  j["layer"] = to_string(layer);
  j["mode"] = to_string(mode);
  const std::uint32_t dim = data.synthetic ? data.synthetic->dim : 0;
  const WtaParams p = wta_params(dim);
  j["wta"] = {{"k", p.window}, {"P", p.permutations}, {"M", p.bands}, {"seed", p.seed}};
  j["train"] = {{"learning_rate", train.learning_rate},
                {"decay", train.decay},
                {"decay_interval", train.decay_interval},
                {"momentum", train.momentum},
                {"batch_size", train.batch_size},
                {"K", train.top_k},
                {"rehash_batch", opt(train.rehash_batch)},
                {"refresh_touched", train.refresh_touched},
                {"steps", train.steps},
                {"seed", train.seed}};
  json d;
  d["train"] = opt_path(data.train);
  d["test"] = opt_path(data.test);
  if (data.synthetic) {
    const auto& s = *data.synthetic;
    d["synthetic"] = {{"classes", s.classes},       {"dim", s.dim},       {"per_class", s.per_class},
                      {"test_per_class", s.test_per_class}, {"spread", s.spread}, {"seed", s.seed}};
  } else {
    d["synthetic"] = nullptr;
  }
  j["data"] = d;
  j["output"] = {{"checkpoint", opt_path(output.checkpoint)},
                 {"log", opt_path(output.log)},
                 {"test_data", opt_path(output.test_data)},
                 {"bench", opt_path(output.bench)}};
  j["bench"] = {{"classes", bench.num_classes},
                {"dim", bench.dim},
                {"batch_sizes", bench.batch_sizes},
                {"K_values", bench.top_k_values},
                {"repetitions", bench.repetitions},
                {"warmup", bench.warmup},
                {"agreement_queries", bench.agreement_queries},
                {"include_hs", bench.include_hs},
                {"threads", bench.exact_threads},
                {"seed", bench.seed}};
  return j;
}

RunConfig parse_run_config(const std::string& text, const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return RunConfig::from_json(apply_overrides(std::move(j), overrides));
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), overrides);
}

}  // namespace wta

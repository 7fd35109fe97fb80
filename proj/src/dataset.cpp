#include "wta/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "wta/binary_io.hpp"
#include "wta/error.hpp"
#include "wta/rng.hpp"

namespace wta {

namespace {
constexpr std::uint32_t kDatasetFormatVersion = 1;
constexpr const char* kTextHeader = "wta-dataset";
}  // namespace

void Dataset::add(std::span<const float> features, std::span<const ClassId> labels) {
  if (features.size() != dim_) throw DimensionError("Dataset::add: feature length does not match dim");
  for (float v : features) {
    if (!std::isfinite(v)) throw InputError("Dataset::add: non-finite feature");
  }
  for (ClassId c : labels) {
    if (c >= num_classes_) throw UsageError("Dataset::add: label " + std::to_string(c) + " out of range");
  }
  features_.insert(features_.end(), features.begin(), features.end());
  labels_.insert(labels_.end(), labels.begin(), labels.end());
  label_offsets_.push_back(labels_.size());
}

std::vector<double> Dataset::features_f64(std::size_t i) const {
  std::vector<double> out(dim_);
  features_f64(i, out);
  return out;
}

void Dataset::features_f64(std::size_t i, std::span<double> out) const {
  const auto f = features(i);
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = f[k];
}

Dataset gen_clustered(std::uint32_t num_classes, std::uint32_t dim, std::uint32_t per_class, double spread,
                      std::uint64_t seed) {
  if (num_classes < 1 || dim < 1 || per_class < 1) throw ConfigError("gen_clustered: counts must be >= 1");
  if (!(spread >= 0.0) || !std::isfinite(spread)) throw ConfigError("gen_clustered: spread must be finite and >= 0");

  Rng center_rng(derive_seed(seed, 1));
  Rng noise_rng(derive_seed(seed, 2));
  Dataset data(dim, num_classes);
  data.generator() = GeneratorInfo{seed, per_class, spread};

  std::vector<double> center(dim);
  std::vector<float> example(dim);
  for (ClassId c = 0; c < num_classes; ++c) {
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (auto& v : center) {
        v = center_rng.normal();
        norm2 += v * v;
      }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : center) v *= inv;
    const ClassId label[] = {c};
    for (std::uint32_t i = 0; i < per_class; ++i) {
      for (std::uint32_t k = 0; k < dim; ++k) {
        const double noise = spread > 0.0 ? spread * noise_rng.normal() : 0.0;
        example[k] = static_cast<float>(center[k] + noise);
      }
      data.add(example, label);
    }
  }
  return data;
}

std::pair<Dataset, Dataset> split_per_class(const Dataset& data, std::uint32_t test_per_class) {
  std::vector<std::size_t> remaining(data.num_classes(), 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data.labels(i).empty()) ++remaining[data.labels(i)[0]];
  }
  Dataset train(data.dim(), data.num_classes());
  Dataset test(data.dim(), data.num_classes());
  train.generator() = test.generator() = data.generator();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto labels = data.labels(i);
    bool to_test = false;
    if (!labels.empty()) {
      to_test = remaining[labels[0]] <= test_per_class;
      --remaining[labels[0]];
    }
    (to_test ? test : train).add(data.features(i), labels);
  }
  return {std::move(train), std::move(test)};
}

void save_dataset_binary(const Dataset& data, const std::filesystem::path& path) {
  write_file_atomic(path, [&](std::ostream& out) {
    BinaryWriter w(out);
    w.magic("WTAD");
    w.u32(kDatasetFormatVersion);
    w.u32(data.dim());
    w.u32(data.num_classes());
    w.u64(data.size());
    w.u64(data.generator().seed);
    w.u32(data.generator().per_class);
    w.f64(data.generator().spread);
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (float v : data.features(i)) w.f32(v);
      const auto labels = data.labels(i);
      w.u32(static_cast<std::uint32_t>(labels.size()));
      for (ClassId c : labels) w.u32(c);
    }
  });
}

void save_dataset_text(const Dataset& data, const std::filesystem::path& path) {
  write_file_atomic(
      path,
      [&](std::ostream& out) {
        out << kTextHeader << ' ' << kDatasetFormatVersion << ' ' << data.dim() << ' ' << data.num_classes() << '\n';
        char buf[32];
        for (std::size_t i = 0; i < data.size(); ++i) {
          const auto labels = data.labels(i);
          if (labels.empty()) out << '-';
          for (std::size_t j = 0; j < labels.size(); ++j) out << (j ? "," : "") << labels[j];
          for (float v : data.features(i)) {
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
            out << ' ' << buf;
          }
          out << '\n';
        }
      },
      false);
}

namespace {

Dataset load_binary(std::istream& in) {
  BinaryReader r(in);
  r.expect_magic("WTAD");
  const std::uint32_t version = r.u32();
  if (version != kDatasetFormatVersion) throw IoError("unsupported dataset version " + std::to_string(version));
  const std::uint32_t dim = r.u32();
  const std::uint32_t num_classes = r.u32();
  const std::uint64_t count = r.u64();
  Dataset data(dim, num_classes);
  data.generator().seed = r.u64();
  data.generator().per_class = r.u32();
  data.generator().spread = r.f64();
  std::vector<float> features(dim);
  std::vector<ClassId> labels;
  for (std::uint64_t i = 0; i < count; ++i) {
    for (auto& v : features) v = r.f32();
    labels.resize(r.u32());
    for (auto& c : labels) c = r.u32();
    try {
      data.add(features, labels);
    } catch (const Error& e) {
      throw IoError("dataset example " + std::to_string(i) + ": " + e.what());
    }
  }
  return data;
}

Dataset load_text(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw IoError("dataset text line " + std::to_string(line_no) + ": " + msg);
  };
  Dataset data;
  bool have_header = false;
  std::vector<float> features;
  std::vector<ClassId> labels;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    if (!have_header) {
      std::string tag;
      std::uint32_t version = 0, dim = 0, classes = 0;
      if (!(ss >> tag >> version >> dim >> classes) || tag != kTextHeader) fail("expected 'wta-dataset 1 <dim> <classes>'");
      if (version != kDatasetFormatVersion) fail("unsupported version");
      data = Dataset(dim, classes);
      have_header = true;
      continue;
    }
    std::string label_field;
    ss >> label_field;
    labels.clear();
    if (label_field != "-") {
      std::istringstream ls(label_field);
      std::string tok;
      while (std::getline(ls, tok, ',')) {
        try {
          std::size_t used = 0;
          const unsigned long v = std::stoul(tok, &used);
          if (used != tok.size()) fail("bad label '" + tok + "'");
          labels.push_back(static_cast<ClassId>(v));
        } catch (const std::logic_error&) {
          fail("bad label '" + tok + "'");
        }
      }
    }
    features.clear();
    std::string tok;
    while (ss >> tok) {
      char* end = nullptr;
      const float v = std::strtof(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') fail("bad number '" + tok + "'");
      features.push_back(v);
    }
    try {
      data.add(features, labels);
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  if (!have_header) throw IoError("dataset text file has no header");
  return data;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  in.clear();
  in.seekg(0);
  if (std::string(magic, 4) == "WTAD") return load_binary(in);
  return load_text(in);
}

}  // namespace wta

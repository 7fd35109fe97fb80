#include "wta/checkpoint.hpp"

#include <fstream>
#include <string>

#include "wta/binary_io.hpp"
#include "wta/error.hpp"

namespace wta {

namespace {
constexpr std::uint32_t kCheckpointVersion = 1;
}

void save_param_matrix(const ParamMatrix& m, std::ostream& out) {
  BinaryWriter w(out);
  w.magic("WTAP");
  w.u64(m.rows());
  w.u64(m.dim());
  w.u8(m.has_bias() ? 1 : 0);
  for (Real v : m.weights()) w.f64(v);
  for (Real v : m.biases()) w.f64(v);
}

ParamMatrix load_param_matrix(std::istream& in) {
  BinaryReader r(in);
  r.expect_magic("WTAP");
  const std::uint64_t rows = r.u64();
  const std::uint64_t dim = r.u64();
  const bool has_bias = r.u8() != 0;
  std::vector<Real> weights(rows * dim);
  for (auto& v : weights) v = r.f64();
  std::vector<Real> bias(has_bias ? rows : 0);
  for (auto& v : bias) v = r.f64();
  ParamMatrix m(rows, dim, std::move(weights), std::move(bias));
  try {
    m.check_finite();
  } catch (const NumericError& e) {
    throw IoError(std::string("parameter section: ") + e.what());
  }
  return m;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const Model& model = ckpt.model;
  write_file_atomic(path, [&](std::ostream& out) {
    BinaryWriter w(out);
    w.magic("WTAC");
    w.u32(kCheckpointVersion);
    w.u8(static_cast<std::uint8_t>(model.kind));
    w.u8(static_cast<std::uint8_t>(model.mode));
    w.u64(model.num_classes);
    w.u64(model.dim);
    w.u64(ckpt.step);
    w.u64(ckpt.cursor);
    if (model.kind == LayerKind::kHierarchical) {
      save_param_matrix(model.tree->nodes(), out);
    } else {
      save_param_matrix(model.weights, out);
    }
    if (model.kind == LayerKind::kWta) model.index->save(out);
  });
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  BinaryReader r(in);
  r.expect_magic("WTAC");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  Model& model = ckpt.model;
  const std::uint8_t kind = r.u8();
  const std::uint8_t mode = r.u8();
  if (kind > 2 || mode > 1) throw IoError("checkpoint: bad layer kind or mode");
  model.kind = static_cast<LayerKind>(kind);
  model.mode = static_cast<OutputMode>(mode);
  model.num_classes = r.u64();
  model.dim = r.u64();
  ckpt.step = r.u64();
  ckpt.cursor = r.u64();
  ParamMatrix params = load_param_matrix(in);
  if (model.kind == LayerKind::kHierarchical) {
    if (params.rows() + 1 != model.num_classes || params.dim() != model.dim) {
      throw IoError("checkpoint: tree node matrix has the wrong shape");
    }
    model.tree = hs_build_tree(model.num_classes, model.dim, 0);
    model.tree->nodes() = std::move(params);
  } else {
    if (params.rows() != model.num_classes || params.dim() != model.dim) {
      throw IoError("checkpoint: weight matrix has the wrong shape");
    }
    model.weights = std::move(params);
  }
  if (model.kind == LayerKind::kWta) {
    model.index = LshIndex::load(in);
    if (model.index->params().dim != model.dim) throw IoError("checkpoint: index dim does not match model");
  }
  return ckpt;
}

}  // namespace wta

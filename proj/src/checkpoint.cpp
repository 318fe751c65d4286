#include "cne/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace cne {

namespace {

constexpr char kMagic[4] = {'C', 'N', 'E', '1'};
constexpr uint32_t kFormatVersion = 1;

void put_u32(std::ostream& out, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw std::runtime_error("truncated checkpoint: " + path);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_floats(std::ostream& out, const float* v, size_t n) {
  static_assert(sizeof(float) == 4);
  // Host is little-endian on every supported target; keep an explicit byte
  // path anyway so the format stays pinned.
  std::vector<char> buf(n * 4);
  std::memcpy(buf.data(), v, n * 4);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void get_floats(std::istream& in, float* v, size_t n, const std::string& path) {
  in.read(reinterpret_cast<char*>(v), static_cast<std::streamsize>(n * 4));
  if (in.gcount() != static_cast<std::streamsize>(n * 4)) {
    throw std::runtime_error("truncated checkpoint section data: " + path);
  }
}

}  // namespace

void write_container(const std::string& path,
                     const std::vector<std::pair<std::string, const MatF*>>& sections) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<uint32_t>(sections.size()));
  for (const auto& [name, mat] : sections) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<uint32_t>(mat->rows));
    put_u32(out, static_cast<uint32_t>(mat->cols));
    put_floats(out, mat->data.data(), mat->data.size());
  }
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

std::map<std::string, MatF> read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("not a CNE1 checkpoint: " + path);
  }
  const uint32_t version = get_u32(in, path);
  if (version != kFormatVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                             " in " + path);
  }
  const uint32_t count = get_u32(in, path);
  std::map<std::string, MatF> sections;
  for (uint32_t s = 0; s < count; ++s) {
    const uint32_t name_len = get_u32(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (in.gcount() != static_cast<std::streamsize>(name_len)) {
      throw std::runtime_error("truncated checkpoint section name: " + path);
    }
    const uint32_t rows = get_u32(in, path);
    const uint32_t cols = get_u32(in, path);
    MatF mat(static_cast<int>(rows), static_cast<int>(cols));
    get_floats(in, mat.data.data(), mat.data.size(), path);
    sections.emplace(std::move(name), std::move(mat));
  }
  return sections;
}

namespace {

// Model config encoded as a float row; every field is a small integer so the
// encoding is exact.
MatF encode_config(const ModelConfig& cfg, bool bn_stats_initialized) {
  MatF row(1, 10);
  row(0, 0) = static_cast<float>(cfg.m);
  row(0, 1) = static_cast<float>(cfg.layers);
  row(0, 2) = static_cast<float>(cfg.channels);
  row(0, 3) = static_cast<float>(cfg.kernel_width);
  row(0, 4) = static_cast<float>(static_cast<int>(cfg.aggregation));
  row(0, 5) = static_cast<float>(cfg.pool_k);
  row(0, 6) = static_cast<float>(cfg.pad_target_len);
  row(0, 7) = static_cast<float>(cfg.residual_period);
  row(0, 8) = cfg.use_batch_norm ? 1.0f : 0.0f;
  row(0, 9) = bn_stats_initialized ? 1.0f : 0.0f;
  return row;
}

ModelConfig decode_config(const MatF& row, bool* bn_stats_initialized) {
  if (row.cols < 10) throw std::runtime_error("checkpoint model_config section too short");
  ModelConfig cfg;
  cfg.m = static_cast<int>(row(0, 0));
  cfg.layers = static_cast<int>(row(0, 1));
  cfg.channels = static_cast<int>(row(0, 2));
  cfg.kernel_width = static_cast<int>(row(0, 3));
  cfg.aggregation = static_cast<Aggregation>(static_cast<int>(row(0, 4)));
  cfg.pool_k = static_cast<int>(row(0, 5));
  cfg.pad_target_len = static_cast<int>(row(0, 6));
  cfg.residual_period = static_cast<int>(row(0, 7));
  cfg.use_batch_norm = row(0, 8) != 0.0f;
  *bn_stats_initialized = row(0, 9) != 0.0f;
  return cfg;
}

}  // namespace

void save_model(const std::string& path, EmbeddingModelF& model) {
  bool stats_initialized = true;
  for (const auto& layer : model.encoder.glu) {
    if (layer.bn_linear && !(layer.bn_linear->stats_initialized &&
                             layer.bn_gate->stats_initialized)) {
      stats_initialized = false;
    }
  }
  const MatF config = encode_config(model.encoder.config, stats_initialized);
  std::vector<std::pair<std::string, const MatF*>> sections;
  sections.emplace_back("model_config", &config);
  for (const auto& p : model.params()) sections.emplace_back(p.name, p.value);
  // Running statistics travel alongside the trainable tensors.
  for (size_t l = 0; l < model.encoder.glu.size(); ++l) {
    const auto& layer = model.encoder.glu[l];
    if (!layer.bn_linear) continue;
    const std::string prefix = "layer" + std::to_string(l + 1) + ".";
    sections.emplace_back(prefix + "bn_linear.running_mean", &layer.bn_linear->running_mean);
    sections.emplace_back(prefix + "bn_linear.running_var", &layer.bn_linear->running_var);
    sections.emplace_back(prefix + "bn_gate.running_mean", &layer.bn_gate->running_mean);
    sections.emplace_back(prefix + "bn_gate.running_var", &layer.bn_gate->running_var);
  }
  write_container(path, sections);
}

EmbeddingModelF load_model(const std::string& path) {
  auto sections = read_container(path);
  const auto cfg_it = sections.find("model_config");
  if (cfg_it == sections.end()) {
    throw std::runtime_error("checkpoint missing model_config section: " + path);
  }
  bool stats_initialized = false;
  const ModelConfig cfg = decode_config(cfg_it->second, &stats_initialized);
  cfg.validate();

  EmbeddingModelF model;
  model.encoder = build_encoder<float>(cfg, /*seed=*/0);
  const auto wv_it = sections.find("word_vectors");
  if (wv_it == sections.end()) {
    throw std::runtime_error("checkpoint missing word_vectors section: " + path);
  }
  model.word_vectors = wv_it->second;

  auto take = [&](const std::string& name, MatF* dst) {
    const auto it = sections.find(name);
    if (it == sections.end()) {
      throw std::runtime_error("checkpoint missing section \"" + name + "\": " + path);
    }
    if (it->second.rows != dst->rows || it->second.cols != dst->cols) {
      throw std::runtime_error("checkpoint section \"" + name + "\" has shape " +
                               std::to_string(it->second.rows) + "x" +
                               std::to_string(it->second.cols) + ", expected " +
                               std::to_string(dst->rows) + "x" + std::to_string(dst->cols));
    }
    *dst = it->second;
  };
  for (const auto& p : model.encoder.params()) take(p.name, p.value);
  for (size_t l = 0; l < model.encoder.glu.size(); ++l) {
    auto& layer = model.encoder.glu[l];
    if (!layer.bn_linear) continue;
    const std::string prefix = "layer" + std::to_string(l + 1) + ".";
    take(prefix + "bn_linear.running_mean", &layer.bn_linear->running_mean);
    take(prefix + "bn_linear.running_var", &layer.bn_linear->running_var);
    take(prefix + "bn_gate.running_mean", &layer.bn_gate->running_mean);
    take(prefix + "bn_gate.running_var", &layer.bn_gate->running_var);
    layer.bn_linear->stats_initialized = stats_initialized;
    layer.bn_gate->stats_initialized = stats_initialized;
  }
  return model;
}

}  // namespace cne

#include "cne/word_vectors.hpp"

#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cne/rng.hpp"

namespace cne {

namespace {

// The on-disk float encoding is little-endian IEEE 754; x86 matches, but go
// through byte copies so the readers/writers stay byte-exact by construction.
void put_f32_le(float v, std::string* out) {
  static_assert(sizeof(float) == 4);
  char b[4];
  std::memcpy(b, &v, 4);
  out->append(b, 4);
}

float get_f32_le(const char* b) {
  float v;
  std::memcpy(&v, b, 4);
  return v;
}

struct Header {
  int64_t count = 0;
  int64_t dim = 0;
  std::streampos body_start;
};

Header read_header(std::ifstream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty vector file: " + path);
  std::istringstream hs(line);
  Header h;
  if (!(hs >> h.count >> h.dim) || h.count < 0 || h.dim <= 0) {
    throw std::runtime_error("malformed vector file header in " + path + ": \"" + line + "\"");
  }
  h.body_start = in.tellg();
  return h;
}

bool looks_like_text(std::ifstream& in, const Header& h) {
  // Probe the first record: a text file has a line of exactly 1 + dim fields.
  in.clear();
  in.seekg(h.body_start);
  std::string line;
  if (!std::getline(in, line)) return false;
  std::istringstream ls(line);
  std::string tok;
  int fields = 0;
  bool numeric = true;
  while (ls >> tok) {
    if (fields > 0) {
      char* end = nullptr;
      std::strtod(tok.c_str(), &end);
      if (end == nullptr || *end != '\0') numeric = false;
    }
    ++fields;
  }
  return numeric && fields == static_cast<int>(h.dim) + 1;
}

RawVectors read_text_body(std::ifstream& in, const Header& h, const std::string& path) {
  RawVectors out;
  out.vectors = MatF(static_cast<int>(h.count), static_cast<int>(h.dim));
  out.names.reserve(h.count);
  std::string line;
  for (int64_t r = 0; r < h.count; ++r) {
    if (!std::getline(in, line)) {
      throw std::runtime_error(path + ": truncated at line " + std::to_string(r + 2));
    }
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) {
      throw std::runtime_error(path + ": malformed line " + std::to_string(r + 2));
    }
    float* row = out.vectors.row(static_cast<int>(r));
    for (int64_t c = 0; c < h.dim; ++c) {
      if (!(ls >> row[c])) {
        throw std::runtime_error(path + ": malformed line " + std::to_string(r + 2) +
                                 " (expected " + std::to_string(h.dim) + " values)");
      }
    }
    out.names.push_back(tok);
  }
  return out;
}

RawVectors read_binary_body(std::ifstream& in, const Header& h, const std::string& path) {
  RawVectors out;
  out.vectors = MatF(static_cast<int>(h.count), static_cast<int>(h.dim));
  out.names.reserve(h.count);
  std::vector<char> buf(static_cast<size_t>(h.dim) * 4);
  for (int64_t r = 0; r < h.count; ++r) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF && std::isspace(ch)) {
    }
    while (ch != EOF && ch != ' ' && ch != '\n') {
      tok.push_back(static_cast<char>(ch));
      ch = in.get();
    }
    if (tok.empty()) {
      throw std::runtime_error(path + ": truncated binary record " + std::to_string(r + 1));
    }
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
      throw std::runtime_error(path + ": truncated vector data in record " + std::to_string(r + 1));
    }
    float* row = out.vectors.row(static_cast<int>(r));
    for (int64_t c = 0; c < h.dim; ++c) row[c] = get_f32_le(buf.data() + c * 4);
    out.names.push_back(tok);
  }
  return out;
}

}  // namespace

WordTable random_word_table(int vocab_size, int dim, uint64_t seed) {
  WordTable table;
  table.vectors = MatF(vocab_size, dim);
  Rng rng(seed);
  const double bound = 0.5 / dim;
  for (int r = 1; r < vocab_size; ++r) {  // unk row stays zero
    float* row = table.vectors.row(r);
    for (int c = 0; c < dim; ++c) row[c] = static_cast<float>(rng.uniform_real(-bound, bound));
  }
  return table;
}

RawVectors read_vector_file(const std::string& path, VectorFileFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open vector file: " + path);
  const Header h = read_header(in, path);
  if (format == VectorFileFormat::kAuto) {
    format = looks_like_text(in, h) ? VectorFileFormat::kText : VectorFileFormat::kBinary;
    in.clear();
    in.seekg(h.body_start);
  }
  return format == VectorFileFormat::kText ? read_text_body(in, h, path)
                                           : read_binary_body(in, h, path);
}

WordTable load_word_vectors(const std::string& path, const Vocabulary& vocab, int expected_dim,
                            VectorFileFormat format, uint64_t seed, LoadReport* report) {
  RawVectors raw = read_vector_file(path, format);
  if (raw.vectors.cols != expected_dim) {
    throw std::runtime_error("word vector dimension mismatch: file " + path + " has m=" +
                             std::to_string(raw.vectors.cols) + ", expected m=" +
                             std::to_string(expected_dim));
  }
  // Start from the random init, then overwrite rows found in the file.
  WordTable table = random_word_table(vocab.size(), expected_dim, seed);
  LoadReport rep;
  rep.missing = vocab.size() - 1;  // unk never counts as found
  for (size_t r = 0; r < raw.names.size(); ++r) {
    const int id = vocab.id_of(raw.names[r]);
    if (id == Vocabulary::kUnkId) continue;
    std::memcpy(table.vectors.row(id), raw.vectors.row(static_cast<int>(r)),
                sizeof(float) * expected_dim);
    ++rep.found;
    --rep.missing;
  }
  if (report != nullptr) *report = rep;
  return table;
}

void save_word_vectors_text(const std::string& path, const std::vector<std::string>& names,
                            const MatF& vectors) {
  if (static_cast<int>(names.size()) != vectors.rows) {
    throw std::invalid_argument("save_word_vectors_text: name/row count mismatch");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write vector file: " + path);
  out << vectors.rows << ' ' << vectors.cols << '\n';
  char buf[48];
  for (int r = 0; r < vectors.rows; ++r) {
    out << names[r];
    const float* row = vectors.row(r);
    for (int c = 0; c < vectors.cols; ++c) {
      // 9 significant digits round-trip any float exactly.
      std::snprintf(buf, sizeof(buf), " %.9g", static_cast<double>(row[c]));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing vector file: " + path);
}

void save_word_vectors_binary(const std::string& path, const std::vector<std::string>& names,
                              const MatF& vectors) {
  if (static_cast<int>(names.size()) != vectors.rows) {
    throw std::invalid_argument("save_word_vectors_binary: name/row count mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vector file: " + path);
  out << vectors.rows << ' ' << vectors.cols << '\n';
  std::string payload;
  for (int r = 0; r < vectors.rows; ++r) {
    payload.clear();
    payload += names[r];
    payload += ' ';
    const float* row = vectors.row(r);
    for (int c = 0; c < vectors.cols; ++c) put_f32_le(row[c], &payload);
    payload += '\n';
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  }
  if (!out) throw std::runtime_error("failed writing vector file: " + path);
}

}  // namespace cne

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cne/mat.hpp"
#include "cne/vocab.hpp"

namespace cne {

// Row w holds the vector for vocabulary id w. Shared between the encoder
// input and the prediction targets; trainable.
struct WordTable {
  MatF vectors;  // V x m
  int dim() const { return vectors.cols; }
  int size() const { return vectors.rows; }
};

enum class VectorFileFormat { kAuto, kText, kBinary };

struct LoadReport {
  int found = 0;    // vocabulary tokens present in the file
  int missing = 0;  // initialized uniformly in [-0.5/m, 0.5/m]
  double coverage() const {
    const int total = found + missing;
    return total == 0 ? 0.0 : static_cast<double>(found) / total;
  }
};

// Uniform rows in [-0.5/m, 0.5/m]; the unknown-token row is zero.
WordTable random_word_table(int vocab_size, int dim, uint64_t seed);

// Reads the word2vec interchange format: a "V m" header line, then either
// "token v1 ... vm" text lines or "token " followed by m little-endian IEEE
// 32-bit floats per record. Vocabulary tokens absent from the file are
// initialized like random_word_table.
WordTable load_word_vectors(const std::string& path, const Vocabulary& vocab, int expected_dim,
                            VectorFileFormat format = VectorFileFormat::kAuto,
                            uint64_t seed = 1, LoadReport* report = nullptr);

// Writers for both interchange encodings. `names` supplies the token per row.
void save_word_vectors_text(const std::string& path, const std::vector<std::string>& names,
                            const MatF& vectors);
void save_word_vectors_binary(const std::string& path, const std::vector<std::string>& names,
                              const MatF& vectors);

// Raw reader used by tests and the embedding importer: returns every record
// in file order without consulting a vocabulary.
struct RawVectors {
  std::vector<std::string> names;
  MatF vectors;
};
RawVectors read_vector_file(const std::string& path,
                            VectorFileFormat format = VectorFileFormat::kAuto);

}  // namespace cne

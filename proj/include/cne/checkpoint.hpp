#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cne/mat.hpp"
#include "cne/model.hpp"

namespace cne {

// Versioned binary container: magic "CNE1", a format version, then named
// sections, each a shape header followed by little-endian IEEE 32-bit floats.
void write_container(const std::string& path,
                     const std::vector<std::pair<std::string, const MatF*>>& sections);

std::map<std::string, MatF> read_container(const std::string& path);

// Model checkpoints are containers holding every parameter tensor, the batch
// norm running statistics, the word table and a numeric "model_config"
// section.
void save_model(const std::string& path, EmbeddingModelF& model);
EmbeddingModelF load_model(const std::string& path);

}  // namespace cne

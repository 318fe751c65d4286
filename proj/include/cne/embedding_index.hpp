#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "cne/mat.hpp"

namespace cne {

// Immutable document-id -> vector store with cosine nearest-neighbor lookup.
struct EmbeddingIndex {
  std::vector<int64_t> ids;
  MatF vectors;              // one row per document
  std::vector<float> norms;  // Euclidean norms, precomputed

  static EmbeddingIndex build(std::vector<int64_t> ids, MatF vectors);
  int size() const { return vectors.rows; }
};

struct RetrievalHit {
  int64_t doc_id = 0;
  float score = 0.0f;  // cosine similarity
};

// Top-k by descending cosine similarity; equal scores order by ascending doc
// id; ids in `exclude` are dropped. Throws on a zero-norm query or an empty
// index. Zero-norm stored vectors rank below everything.
std::vector<RetrievalHit> retrieve(const EmbeddingIndex& index, const std::vector<float>& query,
                                   int top_k, const std::unordered_set<int64_t>& exclude = {});

// TSV rows "id<TAB>label<TAB>v1<TAB>...<TAB>vp" with 9 significant digits,
// ordered by ascending id. labels[i] pairs with index row i.
void export_embeddings(const EmbeddingIndex& index, const std::vector<int>& labels,
                       const std::string& path);

}  // namespace cne

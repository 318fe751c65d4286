#include "cne/embedding_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace cne {

EmbeddingIndex EmbeddingIndex::build(std::vector<int64_t> ids, MatF vectors) {
  if (static_cast<int>(ids.size()) != vectors.rows) {
    throw std::invalid_argument("EmbeddingIndex: id/vector count mismatch");
  }
  std::unordered_set<int64_t> seen;
  for (int64_t id : ids) {
    if (!seen.insert(id).second) {
      throw std::invalid_argument("EmbeddingIndex: duplicate doc id " + std::to_string(id));
    }
  }
  EmbeddingIndex index;
  index.ids = std::move(ids);
  index.norms.resize(vectors.rows);
  for (int r = 0; r < vectors.rows; ++r) {
    double acc = 0.0;
    const float* row = vectors.row(r);
    for (int c = 0; c < vectors.cols; ++c) acc += static_cast<double>(row[c]) * row[c];
    index.norms[r] = static_cast<float>(std::sqrt(acc));
  }
  index.vectors = std::move(vectors);
  return index;
}

std::vector<RetrievalHit> retrieve(const EmbeddingIndex& index, const std::vector<float>& query,
                                   int top_k, const std::unordered_set<int64_t>& exclude) {
  if (index.size() == 0) throw std::invalid_argument("retrieve: empty index");
  if (static_cast<int>(query.size()) != index.vectors.cols) {
    throw std::invalid_argument("retrieve: query dimension mismatch");
  }
  if (top_k < 1) throw std::invalid_argument("retrieve: top_k must be >= 1");
  double qnorm_sq = 0.0;
  for (float v : query) qnorm_sq += static_cast<double>(v) * v;
  const double qnorm = std::sqrt(qnorm_sq);
  if (qnorm == 0.0) throw std::invalid_argument("retrieve: zero-norm query");

  std::vector<RetrievalHit> hits;
  hits.reserve(index.size());
  for (int r = 0; r < index.size(); ++r) {
    if (exclude.count(index.ids[r]) != 0) continue;
    const float* row = index.vectors.row(r);
    double dot = 0.0;
    for (int c = 0; c < index.vectors.cols; ++c) dot += static_cast<double>(row[c]) * query[c];
    // A zero-norm stored vector has no defined direction; rank it last.
    const float score = index.norms[r] > 0.0f
                            ? static_cast<float>(dot / (qnorm * index.norms[r]))
                            : -2.0f;
    hits.push_back({index.ids[r], score});
  }
  std::sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
    return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
  });
  if (static_cast<int>(hits.size()) > top_k) hits.resize(top_k);
  return hits;
}

void export_embeddings(const EmbeddingIndex& index, const std::vector<int>& labels,
                       const std::string& path) {
  if (static_cast<int>(labels.size()) != index.size()) {
    throw std::invalid_argument("export_embeddings: label count mismatch");
  }
  std::vector<int> order(index.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return index.ids[a] < index.ids[b]; });
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write embedding export: " + path);
  char buf[48];
  for (int r : order) {
    out << index.ids[r] << '\t' << labels[r];
    const float* row = index.vectors.row(r);
    for (int c = 0; c < index.vectors.cols; ++c) {
      std::snprintf(buf, sizeof(buf), "\t%.9g", static_cast<double>(row[c]));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing embedding export: " + path);
}

}  // namespace cne

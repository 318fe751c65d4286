#pragma once

#include <optional>
#include <unordered_set>
#include <vector>

#include "cne/rng.hpp"
#include "cne/vocab.hpp"

namespace cne {

// A document qualifies for training when a prediction point with h words
// after it exists.
inline bool eligible_for_training(int doc_len, int h) { return doc_len > h + 1; }

// Effective lower bound of the prediction-point interval: the configured
// offset, pulled in for short documents, never below 2 so at least one word
// of context exists.
inline int effective_offset(int doc_len, int h, int epsilon) {
  return std::max(2, std::min(epsilon, doc_len - h));
}

// Uniform prediction point in [effective_offset, doc_len - h]. Empty when the
// document is too short; the caller skips such documents.
std::optional<int> sample_prediction_point(int doc_len, int h, int epsilon, Rng& rng);

// `count` distinct ids uniform over the vocabulary, none from `excluded`.
// Throws when fewer than `count` eligible ids exist.
std::vector<int> sample_negatives(int vocab_size, const std::unordered_set<int>& excluded,
                                  int count, Rng& rng);

// One mini-batch: member documents, the shared prediction point, per-document
// positive targets (the h words after the point) and the shared negatives.
struct TrainingSample {
  std::vector<int> doc_indices;
  int prediction_point = 0;  // 1-based word position i
  std::vector<std::vector<int>> positives;
  std::vector<int> negatives;
};

// Batches for one epoch: eligible documents are bucketed by floor(log2(len)),
// shuffled, cut into batches within each bucket, and the batch order is
// shuffled. Every eligible document appears in exactly one batch.
std::vector<std::vector<int>> plan_epoch(const std::vector<Document>& docs, int h,
                                         int batch_size, Rng& rng);

// Fills a TrainingSample for one planned batch. The shared prediction point
// is drawn from the intersection of the members' valid intervals (clamped to
// the shortest member when the offsets cannot all be honored); negatives
// exclude every member's positive window.
TrainingSample make_minibatch(const std::vector<Document>& docs,
                              const std::vector<int>& batch_doc_indices, int h, int epsilon,
                              int neg_count, int vocab_size, Rng& rng);

}  // namespace cne

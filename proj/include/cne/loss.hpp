#pragma once

#include <stdexcept>
#include <vector>

#include "cne/mat.hpp"
#include "cne/ops.hpp"

namespace cne {

// Probability that `word` follows the encoded sequence: the logistic of the
// embedding / word-vector dot product.
template <class T>
T word_probability(const std::vector<T>& embedding, const T* word_vec, int dim) {
  if (static_cast<int>(embedding.size()) != dim) {
    throw std::invalid_argument("word_probability: dimension mismatch");
  }
  T dot = T(0);
  for (int i = 0; i < dim; ++i) dot += embedding[i] * word_vec[i];
  return sigmoid(dot);
}

// Binary cross entropy over the positive window and the sampled negatives:
//   L = sum_pos -log sigma(dot) + sum_neg -log(1 - sigma(dot))
// evaluated through softplus so no |dot| within float range can overflow.
// Gradients accumulate into *d_embedding (same size as embedding, caller
// zeroes) and into rows of *d_word_vectors; either may be null.
template <class T>
T prediction_loss(const std::vector<T>& embedding, const std::vector<int>& positives,
                  const std::vector<int>& negatives, const Mat<T>& word_vectors,
                  std::vector<T>* d_embedding, Mat<T>* d_word_vectors) {
  if (positives.empty()) throw std::invalid_argument("prediction_loss: empty positive set");
  const int dim = word_vectors.cols;
  if (static_cast<int>(embedding.size()) != dim) {
    throw std::invalid_argument("prediction_loss: embedding dimension mismatch");
  }
  T loss = T(0);
  auto term = [&](int word, bool positive) {
    const T* w = word_vectors.row(word);
    T dot = T(0);
    for (int i = 0; i < dim; ++i) dot += embedding[i] * w[i];
    // -log sigma(dot) = softplus(-dot); -log(1 - sigma(dot)) = softplus(dot)
    loss += positive ? softplus(-dot) : softplus(dot);
    if (d_embedding != nullptr || d_word_vectors != nullptr) {
      const T ddot = positive ? sigmoid(dot) - T(1) : sigmoid(dot);
      if (d_embedding != nullptr) {
        for (int i = 0; i < dim; ++i) (*d_embedding)[i] += ddot * w[i];
      }
      if (d_word_vectors != nullptr) {
        T* dw = d_word_vectors->row(word);
        for (int i = 0; i < dim; ++i) dw[i] += ddot * embedding[i];
      }
    }
  };
  for (int w : positives) term(w, true);
  for (int w : negatives) term(w, false);
  return loss;
}

}  // namespace cne

#pragma once

#include <cstdint>
#include <vector>

#include "cne/mat.hpp"

namespace cne {

// Evaluation-side network: one tanh hidden layer over frozen embeddings, then
// softmax over the classes.
struct ShallowClassifier {
  MatF w1, b1;  // hidden x p, hidden x 1
  MatF w2, b2;  // classes x hidden, classes x 1
  int classes = 0;
};

struct ClassifierConfig {
  int hidden = 100;
  float lr = 0.01f;
  float momentum = 0.9f;
  int batch_size = 100;
  int epochs = 50;
  uint64_t seed = 1;
  float holdout_fraction = 0.0f;  // >0 tracks the accuracy curve on a held-out slice
};

struct CurvePoint {
  int epoch = 0;
  double accuracy = 0.0;
};

// Mini-batch cross-entropy training with SGD momentum; deterministic in the
// seed. Throws when fewer than two classes are present.
ShallowClassifier train_classifier(const std::vector<std::vector<float>>& embeddings,
                                   const std::vector<int>& labels, const ClassifierConfig& cfg,
                                   std::vector<CurvePoint>* curve = nullptr);

// Argmax class per embedding; ties resolve to the lowest class index.
std::vector<int> classify(const ShallowClassifier& clf,
                          const std::vector<std::vector<float>>& embeddings);

// Fraction of argmax-correct predictions. Throws on an empty test set.
double evaluate_accuracy(const ShallowClassifier& clf,
                         const std::vector<std::vector<float>>& embeddings,
                         const std::vector<int>& labels);

}  // namespace cne

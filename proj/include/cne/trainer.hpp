#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cne/model.hpp"
#include "cne/sampling.hpp"
#include "cne/thread_pool.hpp"
#include "cne/vocab.hpp"

namespace cne {

struct TrainConfig {
  int h = 10;            // forward prediction window
  int epsilon = 10;      // minimum prediction-point offset
  int neg_samples = 50;  // negative words per batch
  int batch_size = 100;
  int epochs = 10;
  uint64_t seed = 42;
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float adam_epsilon = 1e-8f;
  int checkpoint_every = 0;  // epochs; 0 saves only at the end

  void validate() const;
};

struct EpochStats {
  int epoch = 0;           // 1-based
  double mean_loss = 0.0;  // mean over batches of (batch loss / batch size)
  long long docs = 0;
  long long tokens = 0;    // encoder input tokens processed
  double seconds = 0.0;
  double tokens_per_sec = 0.0;
};

// Raised when a batch produces a non-finite loss or gradient.
struct TrainingNumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Runs the stochastic forward-prediction training loop: every epoch consumes
// each eligible document exactly once in freshly drawn mini-batches; each
// batch encodes the members' shared-length prefixes in train mode, scores the
// per-document positive window and the shared negatives, backpropagates and
// applies one Adam update to the encoder and the word table.
std::vector<EpochStats> fit(const std::vector<Document>& corpus, EmbeddingModelF& model,
                            const TrainConfig& cfg, ThreadPool* pool = nullptr,
                            const EpochCallback& on_epoch = nullptr);

std::string format_epoch_log_line(const EpochStats& s);

}  // namespace cne

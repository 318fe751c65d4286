#include "cne/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>

#include "cne/loss.hpp"
#include "cne/optim.hpp"

namespace cne {

void TrainConfig::validate() const {
  if (h < 1) throw std::invalid_argument("train config: h must be >= 1");
  if (epsilon < 2) throw std::invalid_argument("train config: epsilon must be >= 2");
  if (neg_samples < 1) throw std::invalid_argument("train config: negatives must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (!(lr > 0)) throw std::invalid_argument("train config: lr must be positive");
}

std::vector<EpochStats> fit(const std::vector<Document>& corpus, EmbeddingModelF& model,
                            const TrainConfig& cfg, ThreadPool* pool,
                            const EpochCallback& on_epoch) {
  cfg.validate();
  const int vocab_size = model.word_vectors.rows;
  const int dim = model.word_vectors.cols;
  if (model.encoder.config.m != dim) {
    throw std::invalid_argument("fit: word table dimension does not match the model");
  }

  long long skipped = 0;
  for (const Document& d : corpus) {
    if (!eligible_for_training(d.length(), cfg.h)) ++skipped;
  }
  if (skipped > 0) {
    std::cerr << "fit: skipping " << skipped << " document(s) shorter than h+2="
              << cfg.h + 2 << " words each epoch\n";
  }

  Rng rng(cfg.seed);
  auto params = model.params();
  AdamState<float> opt;
  opt.lr = cfg.lr;
  opt.beta1 = cfg.beta1;
  opt.beta2 = cfg.beta2;
  opt.epsilon = cfg.adam_epsilon;

  EncoderGrads<float> enc_grads;
  enc_grads.init_like(model.encoder);
  MatF word_grads(vocab_size, dim);

  std::vector<EpochStats> log;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto batches = plan_epoch(corpus, cfg.h, cfg.batch_size, rng);
    double loss_sum = 0.0;
    long long docs = 0, tokens = 0;
    for (size_t bi = 0; bi < batches.size(); ++bi) {
      const TrainingSample sample = make_minibatch(corpus, batches[bi], cfg.h, cfg.epsilon,
                                                   cfg.neg_samples, vocab_size, rng);
      const int i = sample.prediction_point;
      const int batch = static_cast<int>(sample.doc_indices.size());

      std::vector<MatF> inputs;
      inputs.reserve(batch);
      for (int d : sample.doc_indices) {
        MatF x = lookup(model.word_vectors, corpus[d].word_ids, 1, i);
        if (model.encoder.config.aggregation == Aggregation::kPad) {
          x = pad_or_truncate(x, model.encoder.config.pad_target_len);
        }
        inputs.push_back(std::move(x));
        tokens += i;
      }

      EncoderCache<float> cache;
      const auto embeddings =
          encoder_forward(model.encoder, inputs, Mode::kTrain, &cache, pool);
      for (int b = 0; b < batch; ++b) {
        for (float v : embeddings[b]) {
          if (!std::isfinite(v)) {
            throw TrainingNumericalError(
                "non-finite embedding at epoch " + std::to_string(epoch) + " batch " +
                std::to_string(bi) + " (doc id " +
                std::to_string(corpus[sample.doc_indices[b]].id) + ", prediction point " +
                std::to_string(i) + ")");
          }
        }
      }

      enc_grads.zero();
      word_grads.zero();
      const float inv_batch = 1.0f / static_cast<float>(batch);
      double batch_loss = 0.0;
      std::vector<std::vector<float>> d_embeddings(batch);
      for (int b = 0; b < batch; ++b) {
        d_embeddings[b].assign(dim, 0.0f);
        const float l = prediction_loss(embeddings[b], sample.positives[b], sample.negatives,
                                        model.word_vectors, &d_embeddings[b], &word_grads);
        batch_loss += l;
        for (float& g : d_embeddings[b]) g *= inv_batch;
      }
      batch_loss *= inv_batch;
      // The word-vector gradients from the loss share the 1/batch scale.
      for (float& g : word_grads.data) g *= inv_batch;

      if (!std::isfinite(batch_loss)) {
        throw TrainingNumericalError(
            "non-finite loss at epoch " + std::to_string(epoch) + " batch " +
            std::to_string(bi) + " (prediction point " + std::to_string(i) + ", " +
            std::to_string(batch) + " docs, first doc id " +
            std::to_string(corpus[sample.doc_indices[0]].id) + ")");
      }

      std::vector<MatF> d_inputs;
      encoder_backward(model.encoder, inputs, cache, d_embeddings, &enc_grads, &d_inputs, pool);
      for (int b = 0; b < batch; ++b) {
        MatF d_in = model.encoder.config.aggregation == Aggregation::kPad
                        ? pad_or_truncate_backward(d_inputs[b], i)
                        : std::move(d_inputs[b]);
        // d_in already carries the 1/batch scale from d_embeddings.
        lookup_backward(d_in, corpus[sample.doc_indices[b]].word_ids, 1, &word_grads);
      }

      std::vector<const MatF*> grads = enc_grads.flat(model.encoder);
      grads.push_back(&word_grads);
      try {
        adam_step(params, grads, opt, pool);
      } catch (const std::runtime_error& e) {
        throw TrainingNumericalError(std::string(e.what()) + " at epoch " +
                                     std::to_string(epoch) + " batch " + std::to_string(bi));
      }

      loss_sum += batch_loss;
      docs += batch;
    }
    const auto t1 = std::chrono::steady_clock::now();
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / static_cast<double>(batches.size());
    stats.docs = docs;
    stats.tokens = tokens;
    stats.seconds = std::chrono::duration<double>(t1 - t0).count();
    stats.tokens_per_sec = stats.seconds > 0 ? static_cast<double>(tokens) / stats.seconds : 0.0;
    log.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return log;
}

std::string format_epoch_log_line(const EpochStats& s) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d\t%.6f\t%lld\t%.0f", s.epoch, s.mean_loss, s.docs,
                s.tokens_per_sec);
  return std::string(buf);
}

}  // namespace cne

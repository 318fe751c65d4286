#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cne/mat.hpp"
#include "cne/ops.hpp"
#include "cne/optim.hpp"
#include "cne/rng.hpp"
#include "cne/vocab.hpp"

namespace cne {

enum class Aggregation { kPad, kMaxPool, kMaxKPool, kMeanPool };

const char* aggregation_name(Aggregation a);
Aggregation aggregation_from_name(const std::string& name);

struct ModelConfig {
  int m = 300;               // word vector and embedding dimension (p = m)
  int layers = 6;
  int channels = 900;        // kernels per GLU layer
  int kernel_width = 3;
  Aggregation aggregation = Aggregation::kMaxKPool;
  int pool_k = 3;            // for kMaxKPool
  int pad_target_len = 400;  // for kPad
  int residual_period = 2;   // 0 disables skip connections
  bool use_batch_norm = true;

  void validate() const;
  // Width of the flattened vector handed to the output layer.
  int pooled_width() const;
  // Words influencing one activation of the last layer.
  int receptive_field() const { return 1 + layers * (kernel_width - 1); }
};

// Gated convolutional stack -> aggregation -> single dense layer of width m.
// Layer 1 maps m input channels to `channels`; later layers map channels to
// channels. A skip connection adds the output of layer l-residual_period to
// layer l for l > residual_period with (l-1) divisible by the period, the
// first point where both ends have equal channel counts.
template <class T>
struct Encoder {
  ModelConfig config;
  std::vector<GluParams<T>> glu;
  Mat<T> out_weight;  // m x pooled_width
  Mat<T> out_bias;    // m x 1

  std::vector<NamedParam<T>> params();
  long long param_count() const;
  bool skip_at(int layer_1based) const {
    const int p = config.residual_period;
    return p > 0 && layer_1based > p && (layer_1based - 1) % p == 0;
  }
};

using EncoderF = Encoder<float>;
using EncoderD = Encoder<double>;

// Fan-in scaled uniform init, deterministic in the seed.
template <class T>
Encoder<T> build_encoder(const ModelConfig& config, uint64_t seed);

// Columns i0..i1 (1-based, inclusive) of the document as an m x (i1-i0+1)
// matrix of word vectors.
template <class T>
Mat<T> lookup(const Mat<T>& word_vectors, const std::vector<int>& word_ids, int i0, int i1);

template <class T>
void lookup_backward(const Mat<T>& d_input, const std::vector<int>& word_ids, int i0,
                     Mat<T>* d_word_vectors);

// Eq-style left zero-padding / truncation to a fixed number of columns.
template <class T>
Mat<T> pad_or_truncate(const Mat<T>& input, int target_len);

template <class T>
struct EncoderCache {
  std::vector<Mat<T>> padded_inputs;              // only for kPad
  std::vector<std::vector<Mat<T>>> layer_out;     // per layer, per doc (post-residual)
  std::vector<GluCache<T>> glu;
  std::vector<MaxPoolResult<T>> max_pool;         // per doc
  std::vector<MaxKResult<T>> max_k;               // per doc
  std::vector<std::vector<T>> dense_in;           // per doc
  int input_cols = 0;
};

// Forward pass over a batch of equally sized inputs; returns one p-vector per
// input. Train mode updates batch-norm statistics and fills `cache`.
template <class T>
std::vector<std::vector<T>> encoder_forward(Encoder<T>& enc, const std::vector<Mat<T>>& inputs,
                                            Mode mode, EncoderCache<T>* cache,
                                            ThreadPool* pool = nullptr);

template <class T>
struct EncoderGrads {
  std::vector<GluGrads<T>> glu;
  Mat<T> out_weight, out_bias;

  void init_like(const Encoder<T>& enc);
  void zero();
  // Same order as Encoder::params().
  std::vector<const Mat<T>*> flat(const Encoder<T>& enc) const;
};

template <class T>
void encoder_backward(Encoder<T>& enc, const std::vector<Mat<T>>& inputs,
                      const EncoderCache<T>& cache,
                      const std::vector<std::vector<T>>& d_embeddings, EncoderGrads<T>* grads,
                      std::vector<Mat<T>>* d_inputs, ThreadPool* pool = nullptr);

// Checkpointable unit: the encoder plus the shared trainable word table.
template <class T>
struct EmbeddingModel {
  Encoder<T> encoder;
  Mat<T> word_vectors;  // V x m

  std::vector<NamedParam<T>> params();
};

using EmbeddingModelF = EmbeddingModel<float>;

// Deterministic eval-mode embedding of word positions i0..i1 (defaults to the
// whole document). Throws on an empty document.
template <class T>
std::vector<T> embed_document(EmbeddingModel<T>& model, const std::vector<int>& word_ids,
                              ThreadPool* pool = nullptr, int i0 = 1, int i1 = -1);

// Receptive-field trace of each pooled activation back to input words.
struct SalientSpan {
  int channel = 0;
  int slot = 0;       // pooling slot (0 for plain max)
  int column = 0;     // winning activation column, 1-based word position
  int begin = 0;      // input word span, 1-based inclusive
  int end = 0;
};

template <class T>
std::vector<SalientSpan> trace_salient_words(EmbeddingModel<T>& model,
                                             const std::vector<int>& word_ids,
                                             ThreadPool* pool = nullptr);

}  // namespace cne

#include "cne/model_impl.hpp"

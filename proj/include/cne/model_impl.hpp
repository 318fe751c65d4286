#pragma once

// Implementation of the templated encoder. Included by model.hpp.

namespace cne {

inline const char* aggregation_name(Aggregation a) {
  switch (a) {
    case Aggregation::kPad: return "pad";
    case Aggregation::kMaxPool: return "max";
    case Aggregation::kMaxKPool: return "max_k";
    case Aggregation::kMeanPool: return "mean";
  }
  return "?";
}

inline Aggregation aggregation_from_name(const std::string& name) {
  if (name == "pad") return Aggregation::kPad;
  if (name == "max") return Aggregation::kMaxPool;
  if (name == "max_k") return Aggregation::kMaxKPool;
  if (name == "mean") return Aggregation::kMeanPool;
  throw std::invalid_argument("unknown aggregation: " + name +
                              " (expected pad, max, max_k or mean)");
}

inline void ModelConfig::validate() const {
  if (m < 1) throw std::invalid_argument("model config: m must be >= 1");
  if (layers < 1) throw std::invalid_argument("model config: layers must be >= 1");
  if (channels < 1) throw std::invalid_argument("model config: channels must be >= 1");
  if (kernel_width < 1) throw std::invalid_argument("model config: kernel_width must be >= 1");
  if (aggregation == Aggregation::kMaxKPool && pool_k < 1) {
    throw std::invalid_argument("model config: pool_k must be >= 1");
  }
  if (aggregation == Aggregation::kPad && pad_target_len < kernel_width) {
    throw std::invalid_argument("model config: pad_target_len must be >= kernel_width");
  }
  if (residual_period < 0) throw std::invalid_argument("model config: residual_period must be >= 0");
}

inline int ModelConfig::pooled_width() const {
  switch (aggregation) {
    case Aggregation::kPad: return channels * pad_target_len;
    case Aggregation::kMaxPool: return channels;
    case Aggregation::kMaxKPool: return channels * pool_k;
    case Aggregation::kMeanPool: return channels;
  }
  return 0;
}

template <class T>
std::vector<NamedParam<T>> Encoder<T>::params() {
  std::vector<NamedParam<T>> out;
  for (size_t l = 0; l < glu.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l + 1) + ".";
    out.push_back({prefix + "linear.weight", &glu[l].linear.weight});
    out.push_back({prefix + "linear.bias", &glu[l].linear.bias});
    out.push_back({prefix + "gate.weight", &glu[l].gate.weight});
    out.push_back({prefix + "gate.bias", &glu[l].gate.bias});
    if (glu[l].bn_linear) {
      out.push_back({prefix + "bn_linear.gamma", &glu[l].bn_linear->gamma});
      out.push_back({prefix + "bn_linear.beta", &glu[l].bn_linear->beta});
      out.push_back({prefix + "bn_gate.gamma", &glu[l].bn_gate->gamma});
      out.push_back({prefix + "bn_gate.beta", &glu[l].bn_gate->beta});
    }
  }
  out.push_back({"output.weight", &out_weight});
  out.push_back({"output.bias", &out_bias});
  return out;
}

template <class T>
long long Encoder<T>::param_count() const {
  long long n = 0;
  for (const auto& layer : glu) {
    n += static_cast<long long>(layer.linear.weight.size()) + layer.linear.bias.size();
    n += static_cast<long long>(layer.gate.weight.size()) + layer.gate.bias.size();
    if (layer.bn_linear) {
      n += static_cast<long long>(layer.bn_linear->gamma.size()) + layer.bn_linear->beta.size();
      n += static_cast<long long>(layer.bn_gate->gamma.size()) + layer.bn_gate->beta.size();
    }
  }
  n += static_cast<long long>(out_weight.size()) + out_bias.size();
  return n;
}

template <class T>
Encoder<T> build_encoder(const ModelConfig& config, uint64_t seed) {
  config.validate();
  Encoder<T> enc;
  enc.config = config;
  Rng rng(seed);
  auto init_uniform = [&](Mat<T>& w, int fan_in) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : w.data) v = static_cast<T>(rng.uniform_real(-s, s));
  };
  for (int l = 0; l < config.layers; ++l) {
    const int in_ch = l == 0 ? config.m : config.channels;
    GluParams<T> layer;
    layer.linear = ConvKernels<T>(config.channels, in_ch, config.kernel_width);
    layer.gate = ConvKernels<T>(config.channels, in_ch, config.kernel_width);
    init_uniform(layer.linear.weight, in_ch * config.kernel_width);
    init_uniform(layer.gate.weight, in_ch * config.kernel_width);
    if (config.use_batch_norm) {
      layer.bn_linear.emplace(config.channels);
      layer.bn_gate.emplace(config.channels);
    }
    enc.glu.push_back(std::move(layer));
  }
  enc.out_weight = Mat<T>(config.m, config.pooled_width());
  enc.out_bias = Mat<T>(config.m, 1);
  init_uniform(enc.out_weight, config.pooled_width());
  return enc;
}

template <class T>
Mat<T> lookup(const Mat<T>& word_vectors, const std::vector<int>& word_ids, int i0, int i1) {
  const int len = static_cast<int>(word_ids.size());
  if (i0 < 1 || i1 < i0 || i1 > len) {
    throw std::out_of_range("lookup: bounds [" + std::to_string(i0) + "," + std::to_string(i1) +
                            "] invalid for document of length " + std::to_string(len));
  }
  const int m = word_vectors.cols;
  Mat<T> out(m, i1 - i0 + 1);
  for (int t = 0; t < out.cols; ++t) {
    const int w = word_ids[static_cast<size_t>(i0 - 1 + t)];
    if (w < 0 || w >= word_vectors.rows) {
      throw std::out_of_range("lookup: word id " + std::to_string(w) + " outside table of " +
                              std::to_string(word_vectors.rows) + " rows");
    }
    const T* src = word_vectors.row(w);
    for (int r = 0; r < m; ++r) out(r, t) = src[r];
  }
  return out;
}

template <class T>
void lookup_backward(const Mat<T>& d_input, const std::vector<int>& word_ids, int i0,
                     Mat<T>* d_word_vectors) {
  for (int t = 0; t < d_input.cols; ++t) {
    const int w = word_ids[static_cast<size_t>(i0 - 1 + t)];
    T* dst = d_word_vectors->row(w);
    for (int r = 0; r < d_input.rows; ++r) dst[r] += d_input(r, t);
  }
}

template <class T>
Mat<T> pad_or_truncate(const Mat<T>& input, int target_len) {
  if (target_len < 1) throw std::invalid_argument("pad_or_truncate: target_len must be >= 1");
  if (input.cols == target_len) return input;
  Mat<T> out(input.rows, target_len);
  const int copy = std::min(input.cols, target_len);
  const int offset = target_len - copy;  // leading zero columns when short
  for (int r = 0; r < input.rows; ++r) {
    const T* src = input.row(r);
    T* dst = out.row(r);
    for (int t = 0; t < copy; ++t) dst[offset + t] = src[t];
  }
  return out;
}

// Maps gradients of the padded matrix back onto the original columns.
template <class T>
Mat<T> pad_or_truncate_backward(const Mat<T>& d_padded, int original_cols) {
  Mat<T> out(d_padded.rows, original_cols);
  const int copy = std::min(original_cols, d_padded.cols);
  const int offset = d_padded.cols - copy;
  for (int r = 0; r < d_padded.rows; ++r) {
    const T* src = d_padded.row(r);
    T* dst = out.row(r);
    for (int t = 0; t < copy; ++t) dst[t] = src[offset + t];
  }
  return out;
}

namespace detail {

template <class T>
std::vector<const Mat<T>*> mat_ptrs(const std::vector<Mat<T>>& mats) {
  std::vector<const Mat<T>*> out;
  out.reserve(mats.size());
  for (const auto& m : mats) out.push_back(&m);
  return out;
}

}  // namespace detail

template <class T>
std::vector<std::vector<T>> encoder_forward(Encoder<T>& enc, const std::vector<Mat<T>>& inputs,
                                            Mode mode, EncoderCache<T>* cache, ThreadPool* pool) {
  const ModelConfig& cfg = enc.config;
  if (inputs.empty()) throw std::invalid_argument("encoder_forward: empty batch");
  for (const Mat<T>& x : inputs) {
    if (x.rows != cfg.m) {
      throw std::invalid_argument("encoder_forward: input has " + std::to_string(x.rows) +
                                  " rows, model expects m=" + std::to_string(cfg.m));
    }
    if (x.cols < 1) throw std::invalid_argument("encoder_forward: input needs >= 1 column");
    if (cfg.aggregation == Aggregation::kPad && x.cols != cfg.pad_target_len) {
      throw std::invalid_argument("encoder_forward: pad aggregation expects exactly " +
                                  std::to_string(cfg.pad_target_len) + " columns, got " +
                                  std::to_string(x.cols));
    }
  }
  if (mode == Mode::kTrain && cache == nullptr) {
    throw std::invalid_argument("encoder_forward: train mode requires a cache");
  }
  if (cache != nullptr) {
    cache->layer_out.assign(enc.glu.size(), {});
    cache->glu.assign(enc.glu.size(), GluCache<T>{});
    cache->max_pool.clear();
    cache->max_k.clear();
    cache->dense_in.clear();
    cache->input_cols = inputs[0].cols;
  }

  // Skip connections read activations from several layers back, so layer
  // outputs are kept for the whole pass even without a caller cache.
  std::vector<std::vector<Mat<T>>> local_out;
  std::vector<std::vector<Mat<T>>>* store = &local_out;
  if (cache != nullptr) {
    store = &cache->layer_out;
  } else {
    local_out.assign(enc.glu.size(), {});
  }
  const std::vector<Mat<T>>* current = &inputs;
  for (size_t l = 0; l < enc.glu.size(); ++l) {
    GluCache<T>* gc = cache != nullptr ? &cache->glu[l] : nullptr;
    std::vector<Mat<T>> out =
        glu_layer(detail::mat_ptrs(*current), enc.glu[l], mode, gc, pool);
    const int layer_1based = static_cast<int>(l) + 1;
    if (enc.skip_at(layer_1based)) {
      const std::vector<Mat<T>>& source = (*store)[l - static_cast<size_t>(cfg.residual_period)];
      for (size_t b = 0; b < out.size(); ++b) {
        for (size_t j = 0; j < out[b].size(); ++j) out[b].data[j] += source[b].data[j];
      }
    }
    (*store)[l] = std::move(out);
    current = &(*store)[l];
  }

  const std::vector<Mat<T>>& last = *current;
  std::vector<std::vector<T>> embeddings(last.size());
  for (size_t b = 0; b < last.size(); ++b) {
    std::vector<T> flat;
    switch (cfg.aggregation) {
      case Aggregation::kMaxPool: {
        MaxPoolResult<T> res = max_pool_time(last[b]);
        flat = res.values;
        if (cache != nullptr) cache->max_pool.push_back(std::move(res));
        break;
      }
      case Aggregation::kMaxKPool: {
        MaxKResult<T> res = max_k_pool_time(last[b], cfg.pool_k);
        flat.assign(res.values.data.begin(), res.values.data.end());
        if (cache != nullptr) cache->max_k.push_back(std::move(res));
        break;
      }
      case Aggregation::kPad: {
        flat.assign(last[b].data.begin(), last[b].data.end());
        break;
      }
      case Aggregation::kMeanPool: {
        flat.resize(last[b].rows);
        for (int r = 0; r < last[b].rows; ++r) {
          T acc = T(0);
          const T* row = last[b].row(r);
          for (int t = 0; t < last[b].cols; ++t) acc += row[t];
          flat[r] = acc / static_cast<T>(last[b].cols);
        }
        break;
      }
    }
    embeddings[b] = dense(flat, enc.out_weight, enc.out_bias);
    if (cache != nullptr) cache->dense_in.push_back(std::move(flat));
  }
  return embeddings;
}

template <class T>
void EncoderGrads<T>::init_like(const Encoder<T>& enc) {
  glu.clear();
  for (const auto& layer : enc.glu) {
    GluGrads<T> g;
    g.init_like(layer);
    glu.push_back(std::move(g));
  }
  out_weight = Mat<T>(enc.out_weight.rows, enc.out_weight.cols);
  out_bias = Mat<T>(enc.out_bias.rows, 1);
}

template <class T>
void EncoderGrads<T>::zero() {
  for (auto& g : glu) {
    g.linear.weight.zero();
    g.linear.bias.zero();
    g.gate.weight.zero();
    g.gate.bias.zero();
    if (!g.bn_linear.gamma.empty()) {
      g.bn_linear.gamma.zero();
      g.bn_linear.beta.zero();
      g.bn_gate.gamma.zero();
      g.bn_gate.beta.zero();
    }
  }
  out_weight.zero();
  out_bias.zero();
}

template <class T>
std::vector<const Mat<T>*> EncoderGrads<T>::flat(const Encoder<T>& enc) const {
  std::vector<const Mat<T>*> out;
  for (size_t l = 0; l < glu.size(); ++l) {
    out.push_back(&glu[l].linear.weight);
    out.push_back(&glu[l].linear.bias);
    out.push_back(&glu[l].gate.weight);
    out.push_back(&glu[l].gate.bias);
    if (enc.glu[l].bn_linear) {
      out.push_back(&glu[l].bn_linear.gamma);
      out.push_back(&glu[l].bn_linear.beta);
      out.push_back(&glu[l].bn_gate.gamma);
      out.push_back(&glu[l].bn_gate.beta);
    }
  }
  out.push_back(&out_weight);
  out.push_back(&out_bias);
  return out;
}

template <class T>
void encoder_backward(Encoder<T>& enc, const std::vector<Mat<T>>& inputs,
                      const EncoderCache<T>& cache,
                      const std::vector<std::vector<T>>& d_embeddings, EncoderGrads<T>* grads,
                      std::vector<Mat<T>>* d_inputs, ThreadPool* pool) {
  const ModelConfig& cfg = enc.config;
  const size_t layer_count = enc.glu.size();
  const std::vector<Mat<T>>& last = cache.layer_out[layer_count - 1];
  const size_t batch = last.size();

  // Dense layer, then undo the aggregation per document.
  std::vector<Mat<T>> d_last;
  d_last.reserve(batch);
  for (size_t b = 0; b < batch; ++b) {
    std::vector<T> d_flat(cache.dense_in[b].size(), T(0));
    dense_backward(cache.dense_in[b], enc.out_weight, d_embeddings[b],
                   grads != nullptr ? &grads->out_weight : nullptr,
                   grads != nullptr ? &grads->out_bias : nullptr, &d_flat);
    const int rows = last[b].rows;
    const int cols = last[b].cols;
    switch (cfg.aggregation) {
      case Aggregation::kMaxPool:
        d_last.push_back(max_pool_time_backward(cache.max_pool[b], d_flat, rows, cols));
        break;
      case Aggregation::kMaxKPool: {
        Mat<T> dv(rows, cfg.pool_k);
        dv.data.assign(d_flat.begin(), d_flat.end());
        d_last.push_back(max_k_pool_time_backward(cache.max_k[b], dv, rows, cols));
        break;
      }
      case Aggregation::kPad: {
        Mat<T> d(rows, cols);
        d.data.assign(d_flat.begin(), d_flat.end());
        d_last.push_back(std::move(d));
        break;
      }
      case Aggregation::kMeanPool: {
        Mat<T> d(rows, cols);
        for (int r = 0; r < rows; ++r) {
          const T g = d_flat[r] / static_cast<T>(cols);
          T* row = d.row(r);
          for (int t = 0; t < cols; ++t) row[t] = g;
        }
        d_last.push_back(std::move(d));
        break;
      }
    }
  }

  // Walk the stack in reverse, accumulating gradients of each layer output.
  std::vector<std::vector<Mat<T>>> d_out(layer_count);
  d_out[layer_count - 1] = std::move(d_last);
  auto accumulate = [](std::vector<Mat<T>>& dst, const std::vector<Mat<T>>& src) {
    if (dst.empty()) {
      dst = src;
      return;
    }
    for (size_t b = 0; b < src.size(); ++b) {
      for (size_t j = 0; j < src[b].size(); ++j) dst[b].data[j] += src[b].data[j];
    }
  };
  for (size_t l = layer_count; l-- > 0;) {
    const int layer_1based = static_cast<int>(l) + 1;
    std::vector<Mat<T>>& d_cur = d_out[l];
    if (enc.skip_at(layer_1based)) {
      accumulate(d_out[l - static_cast<size_t>(cfg.residual_period)], d_cur);
    }
    const std::vector<Mat<T>>& layer_inputs = l == 0 ? inputs : cache.layer_out[l - 1];
    std::vector<Mat<T>> dx =
        glu_layer_backward(detail::mat_ptrs(layer_inputs), enc.glu[l], cache.glu[l], d_cur,
                           grads != nullptr ? &grads->glu[l] : nullptr, pool);
    d_cur.clear();
    if (l == 0) {
      if (d_inputs != nullptr) *d_inputs = std::move(dx);
    } else {
      accumulate(d_out[l - 1], dx);
    }
  }
}

template <class T>
std::vector<NamedParam<T>> EmbeddingModel<T>::params() {
  std::vector<NamedParam<T>> out = encoder.params();
  out.push_back({"word_vectors", &word_vectors});
  return out;
}

template <class T>
std::vector<T> embed_document(EmbeddingModel<T>& model, const std::vector<int>& word_ids,
                              ThreadPool* pool, int i0, int i1) {
  if (word_ids.empty()) throw std::invalid_argument("embed_document: empty document");
  if (i1 < 0) i1 = static_cast<int>(word_ids.size());
  std::vector<Mat<T>> input;
  input.push_back(lookup(model.word_vectors, word_ids, i0, i1));
  if (model.encoder.config.aggregation == Aggregation::kPad) {
    input[0] = pad_or_truncate(input[0], model.encoder.config.pad_target_len);
  }
  auto out = encoder_forward(model.encoder, input, Mode::kEval,
                             static_cast<EncoderCache<T>*>(nullptr), pool);
  return std::move(out[0]);
}

template <class T>
std::vector<SalientSpan> trace_salient_words(EmbeddingModel<T>& model,
                                             const std::vector<int>& word_ids, ThreadPool* pool) {
  const ModelConfig& cfg = model.encoder.config;
  if (cfg.aggregation != Aggregation::kMaxPool && cfg.aggregation != Aggregation::kMaxKPool) {
    throw std::invalid_argument("trace_salient_words: requires max or max_k aggregation");
  }
  if (word_ids.empty()) throw std::invalid_argument("trace_salient_words: empty document");
  std::vector<Mat<T>> input;
  input.push_back(lookup(model.word_vectors, word_ids, 1, static_cast<int>(word_ids.size())));
  EncoderCache<T> cache;
  encoder_forward(model.encoder, input, Mode::kEval, &cache, pool);

  const int doc_len = static_cast<int>(word_ids.size());
  const int reach = cfg.receptive_field() - 1;
  std::vector<SalientSpan> spans;
  auto add = [&](int channel, int slot, int col0) {
    SalientSpan s;
    s.channel = channel;
    s.slot = slot;
    s.column = col0 + 1;  // 1-based word position
    s.begin = std::max(1, s.column - reach);
    s.end = std::min(doc_len, s.column);
    spans.push_back(s);
  };
  if (cfg.aggregation == Aggregation::kMaxPool) {
    const MaxPoolResult<T>& res = cache.max_pool[0];
    for (int c = 0; c < cfg.channels; ++c) add(c, 0, res.argmax[c]);
  } else {
    const MaxKResult<T>& res = cache.max_k[0];
    for (int c = 0; c < cfg.channels; ++c) {
      for (int j = 0; j < res.k; ++j) {
        const int src = res.source[static_cast<size_t>(c) * res.k + j];
        if (src >= 0) add(c, j, src);
      }
    }
  }
  return spans;
}

}  // namespace cne

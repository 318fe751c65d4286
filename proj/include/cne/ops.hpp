#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cne/mat.hpp"
#include "cne/thread_pool.hpp"

namespace cne {

enum class Mode { kTrain, kEval };

template <class T>
inline T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  T e = std::exp(x);
  return e / (T(1) + e);
}

// log(1 + e^x) without overflow.
template <class T>
inline T softplus(T x) {
  return std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x)));
}

// ---------------------------------------------------------------------------
// Causal 1-D convolution
// ---------------------------------------------------------------------------

// Kernels operating on `width` consecutive time steps. weight(c, i*width+tap)
// multiplies input channel i at offset tap-(width-1) relative to the output
// position, so output column t reads input columns t-width+1 .. t and
// positions before the sequence start act as zero vectors.
template <class T>
struct ConvKernels {
  int out_channels = 0;
  int in_channels = 0;
  int width = 1;
  Mat<T> weight;  // out_channels x (in_channels * width)
  Mat<T> bias;    // out_channels x 1

  ConvKernels() = default;
  ConvKernels(int out_ch, int in_ch, int w)
      : out_channels(out_ch), in_channels(in_ch), width(w),
        weight(out_ch, in_ch * w), bias(out_ch, 1) {
    if (w < 1) throw std::invalid_argument("conv kernel width must be >= 1");
  }
};

template <class T>
struct ConvGrads {
  Mat<T> weight;
  Mat<T> bias;

  void init_like(const ConvKernels<T>& k) {
    weight = Mat<T>(k.weight.rows, k.weight.cols);
    bias = Mat<T>(k.bias.rows, 1);
  }
};

namespace detail {

template <class T>
void conv_rows(const std::vector<const Mat<T>*>& xs, const ConvKernels<T>& k,
               std::vector<Mat<T>>& ys, int c_begin, int c_end) {
  const int d = k.width;
  for (int c = c_begin; c < c_end; ++c) {
    const T* w = k.weight.row(c);
    const T bias = k.bias(c, 0);
    for (size_t b = 0; b < xs.size(); ++b) {
      const Mat<T>& x = *xs[b];
      const int tcols = x.cols;
      T* y = ys[b].row(c);
      std::fill(y, y + tcols, bias);
      for (int i = 0; i < k.in_channels; ++i) {
        const T* xr = x.row(i);
        for (int tap = 0; tap < d; ++tap) {
          const T wv = w[i * d + tap];
          const int off = (d - 1) - tap;  // source column = t - off
          for (int t = off; t < tcols; ++t) y[t] += wv * xr[t - off];
        }
      }
    }
  }
}

}  // namespace detail

template <class T>
std::vector<Mat<T>> conv1d_causal_batch(const std::vector<const Mat<T>*>& xs,
                                        const ConvKernels<T>& k, ThreadPool* pool) {
  std::vector<Mat<T>> ys;
  ys.reserve(xs.size());
  for (const Mat<T>* x : xs) {
    if (x->rows != k.in_channels) {
      throw std::invalid_argument("conv1d_causal: input has " + std::to_string(x->rows) +
                                  " channels, kernels expect " +
                                  std::to_string(k.in_channels));
    }
    ys.emplace_back(k.out_channels, x->cols);
  }
  parallel_chunks(pool, k.out_channels, [&](int begin, int end) {
    detail::conv_rows(xs, k, ys, begin, end);
  });
  for (const Mat<T>& y : ys) {
    assert(all_finite(y) && "conv1d_causal produced non-finite values");
    (void)y;
  }
  return ys;
}

template <class T>
Mat<T> conv1d_causal(const Mat<T>& x, const ConvKernels<T>& k, ThreadPool* pool = nullptr) {
  std::vector<const Mat<T>*> xs{&x};
  return std::move(conv1d_causal_batch(xs, k, pool)[0]);
}

// Accumulates parameter gradients into *dk (caller zeroes); writes d/dx into dxs.
template <class T>
void conv1d_causal_backward(const std::vector<const Mat<T>*>& xs, const ConvKernels<T>& k,
                            const std::vector<Mat<T>>& dys, ConvGrads<T>* dk,
                            std::vector<Mat<T>>* dxs, ThreadPool* pool) {
  const int d = k.width;
  assert(xs.size() == dys.size());
  if (dk != nullptr) {
    parallel_chunks(pool, k.out_channels, [&](int c_begin, int c_end) {
      for (int c = c_begin; c < c_end; ++c) {
        T* dw = dk->weight.row(c);
        T db = T(0);
        for (size_t b = 0; b < xs.size(); ++b) {
          const Mat<T>& x = *xs[b];
          const T* dy = dys[b].row(c);
          const int tcols = x.cols;
          for (int t = 0; t < tcols; ++t) db += dy[t];
          for (int i = 0; i < k.in_channels; ++i) {
            const T* xr = x.row(i);
            for (int tap = 0; tap < d; ++tap) {
              const int off = (d - 1) - tap;
              T acc = T(0);
              for (int t = off; t < tcols; ++t) acc += dy[t] * xr[t - off];
              dw[i * d + tap] += acc;
            }
          }
        }
        dk->bias(c, 0) += db;
      }
    });
  }
  if (dxs != nullptr) {
    assert(dxs->size() == xs.size());
    parallel_chunks(pool, k.in_channels, [&](int i_begin, int i_end) {
      for (int i = i_begin; i < i_end; ++i) {
        for (size_t b = 0; b < xs.size(); ++b) {
          Mat<T>& dx = (*dxs)[b];
          const int tcols = dx.cols;
          T* dxr = dx.row(i);
          for (int c = 0; c < k.out_channels; ++c) {
            const T* w = k.weight.row(c);
            const T* dy = dys[b].row(c);
            for (int tap = 0; tap < d; ++tap) {
              const T wv = w[i * d + tap];
              const int off = (d - 1) - tap;  // dy column = s + off
              for (int s = 0; s + off < tcols; ++s) dxr[s] += wv * dy[s + off];
            }
          }
        }
      }
    });
  }
}

// ---------------------------------------------------------------------------
// Batch normalization (per channel, statistics over batch x time)
// ---------------------------------------------------------------------------

template <class T>
struct BatchNormState {
  Mat<T> gamma, beta;               // C x 1
  Mat<T> running_mean, running_var; // C x 1
  T momentum = T(0.1);
  T epsilon = T(1e-5);
  bool stats_initialized = false;

  BatchNormState() = default;
  explicit BatchNormState(int channels)
      : gamma(channels, 1, T(1)), beta(channels, 1),
        running_mean(channels, 1), running_var(channels, 1, T(1)) {}

  int channels() const { return gamma.rows; }

  // Marks running statistics as the identity transform (mean 0, var 1).
  void set_identity_stats() {
    running_mean.zero();
    running_var.fill(T(1));
    stats_initialized = true;
  }
};

template <class T>
struct BatchNormCache {
  std::vector<Mat<T>> xhat;  // normalized inputs, per batch entry
  Mat<T> inv_std;            // C x 1
  long long sample_count = 0;
};

template <class T>
struct BatchNormGrads {
  Mat<T> gamma, beta;

  void init_like(const BatchNormState<T>& st) {
    gamma = Mat<T>(st.gamma.rows, 1);
    beta = Mat<T>(st.beta.rows, 1);
  }
};

// Train mode normalizes with batch statistics and folds them into the running
// estimates; eval mode applies the running statistics only, so a single
// document at inference time is well-defined.
template <class T>
std::vector<Mat<T>> batch_norm(const std::vector<Mat<T>>& xs, BatchNormState<T>& st,
                               Mode mode, BatchNormCache<T>* cache, ThreadPool* pool) {
  const int channels = st.channels();
  long long samples = 0;
  std::vector<Mat<T>> ys;
  ys.reserve(xs.size());
  for (const Mat<T>& x : xs) {
    if (x.rows != channels) throw std::invalid_argument("batch_norm: channel mismatch");
    samples += x.cols;
    ys.emplace_back(x.rows, x.cols);
  }
  if (mode == Mode::kTrain) {
    if (samples < 2) {
      throw std::invalid_argument("batch_norm: train mode needs at least 2 samples per channel");
    }
    if (cache != nullptr) {
      cache->xhat.clear();
      for (const Mat<T>& x : xs) cache->xhat.emplace_back(x.rows, x.cols);
      cache->inv_std = Mat<T>(channels, 1);
      cache->sample_count = samples;
    }
    const T n = static_cast<T>(samples);
    parallel_chunks(pool, channels, [&](int begin, int end) {
      for (int c = begin; c < end; ++c) {
        T sum = T(0);
        for (const Mat<T>& x : xs) {
          const T* xr = x.row(c);
          for (int t = 0; t < x.cols; ++t) sum += xr[t];
        }
        const T mean = sum / n;
        T sq = T(0);
        for (const Mat<T>& x : xs) {
          const T* xr = x.row(c);
          for (int t = 0; t < x.cols; ++t) sq += (xr[t] - mean) * (xr[t] - mean);
        }
        const T var = sq / n;  // biased, used for normalization
        const T inv_std = T(1) / std::sqrt(var + st.epsilon);
        const T g = st.gamma(c, 0), be = st.beta(c, 0);
        for (size_t b = 0; b < xs.size(); ++b) {
          const T* xr = xs[b].row(c);
          T* yr = ys[b].row(c);
          T* hr = cache != nullptr ? cache->xhat[b].row(c) : nullptr;
          for (int t = 0; t < xs[b].cols; ++t) {
            T xhat = (xr[t] - mean) * inv_std;
            if (hr != nullptr) hr[t] = xhat;
            yr[t] = g * xhat + be;
          }
        }
        if (cache != nullptr) cache->inv_std(c, 0) = inv_std;
        // Unbiased variance for the running estimate.
        const T var_unbiased = sq / (n - T(1));
        st.running_mean(c, 0) = (T(1) - st.momentum) * st.running_mean(c, 0) + st.momentum * mean;
        st.running_var(c, 0) = (T(1) - st.momentum) * st.running_var(c, 0) + st.momentum * var_unbiased;
      }
    });
    st.stats_initialized = true;
  } else {
    if (!st.stats_initialized) {
      throw std::runtime_error("batch_norm: uninitialized statistics");
    }
    parallel_chunks(pool, channels, [&](int begin, int end) {
      for (int c = begin; c < end; ++c) {
        const T inv_std = T(1) / std::sqrt(st.running_var(c, 0) + st.epsilon);
        const T mean = st.running_mean(c, 0);
        const T g = st.gamma(c, 0), be = st.beta(c, 0);
        for (size_t b = 0; b < xs.size(); ++b) {
          const T* xr = xs[b].row(c);
          T* yr = ys[b].row(c);
          for (int t = 0; t < xs[b].cols; ++t) yr[t] = g * (xr[t] - mean) * inv_std + be;
        }
      }
    });
  }
  return ys;
}

// Train-mode backward; differentiates through the batch statistics.
template <class T>
std::vector<Mat<T>> batch_norm_backward(const std::vector<Mat<T>>& dys,
                                        const BatchNormCache<T>& cache,
                                        const BatchNormState<T>& st,
                                        BatchNormGrads<T>* dst, ThreadPool* pool) {
  const int channels = st.channels();
  std::vector<Mat<T>> dxs;
  dxs.reserve(dys.size());
  for (const Mat<T>& dy : dys) dxs.emplace_back(dy.rows, dy.cols);
  const T n = static_cast<T>(cache.sample_count);
  parallel_chunks(pool, channels, [&](int begin, int end) {
    for (int c = begin; c < end; ++c) {
      T sum_dy = T(0), sum_dy_xhat = T(0);
      for (size_t b = 0; b < dys.size(); ++b) {
        const T* dy = dys[b].row(c);
        const T* xh = cache.xhat[b].row(c);
        for (int t = 0; t < dys[b].cols; ++t) {
          sum_dy += dy[t];
          sum_dy_xhat += dy[t] * xh[t];
        }
      }
      if (dst != nullptr) {
        dst->gamma(c, 0) += sum_dy_xhat;
        dst->beta(c, 0) += sum_dy;
      }
      const T g = st.gamma(c, 0);
      const T inv_std = cache.inv_std(c, 0);
      const T scale = g * inv_std / n;
      for (size_t b = 0; b < dys.size(); ++b) {
        const T* dy = dys[b].row(c);
        const T* xh = cache.xhat[b].row(c);
        T* dx = dxs[b].row(c);
        for (int t = 0; t < dys[b].cols; ++t) {
          dx[t] = scale * (n * dy[t] - sum_dy - xh[t] * sum_dy_xhat);
        }
      }
    }
  });
  return dxs;
}

// ---------------------------------------------------------------------------
// Gated linear unit layer: (x*W+b) elementwise-scaled by sigmoid(x*V+c),
// each branch optionally batch-normalized before the product.
// ---------------------------------------------------------------------------

template <class T>
struct GluParams {
  ConvKernels<T> linear, gate;
  std::optional<BatchNormState<T>> bn_linear, bn_gate;
};

template <class T>
struct GluCache {
  std::vector<Mat<T>> a;      // linear branch after optional batch norm
  std::vector<Mat<T>> sig_b;  // sigmoid of gate branch after optional batch norm
  BatchNormCache<T> bn_a, bn_b;
};

template <class T>
struct GluGrads {
  ConvGrads<T> linear, gate;
  BatchNormGrads<T> bn_linear, bn_gate;

  void init_like(const GluParams<T>& p) {
    linear.init_like(p.linear);
    gate.init_like(p.gate);
    if (p.bn_linear) bn_linear.init_like(*p.bn_linear);
    if (p.bn_gate) bn_gate.init_like(*p.bn_gate);
  }
};

template <class T>
std::vector<Mat<T>> glu_layer(const std::vector<const Mat<T>*>& xs, GluParams<T>& p,
                              Mode mode, GluCache<T>* cache, ThreadPool* pool) {
  if (p.linear.out_channels != p.gate.out_channels ||
      p.linear.in_channels != p.gate.in_channels || p.linear.width != p.gate.width) {
    throw std::invalid_argument("glu_layer: linear and gate kernel shapes differ");
  }
  std::vector<Mat<T>> a = conv1d_causal_batch(xs, p.linear, pool);
  std::vector<Mat<T>> b = conv1d_causal_batch(xs, p.gate, pool);
  if (p.bn_linear) {
    a = batch_norm(a, *p.bn_linear, mode, cache != nullptr ? &cache->bn_a : nullptr, pool);
  }
  if (p.bn_gate) {
    b = batch_norm(b, *p.bn_gate, mode, cache != nullptr ? &cache->bn_b : nullptr, pool);
  }
  std::vector<Mat<T>> out;
  out.reserve(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (!a[i].same_shape(b[i])) throw std::invalid_argument("glu_layer: branch shape mismatch");
    Mat<T> y(a[i].rows, a[i].cols);
    for (size_t j = 0; j < y.size(); ++j) {
      b[i].data[j] = sigmoid(b[i].data[j]);
      y.data[j] = a[i].data[j] * b[i].data[j];
    }
    out.push_back(std::move(y));
  }
  if (cache != nullptr) {
    cache->a = std::move(a);
    cache->sig_b = std::move(b);
  }
  return out;
}

template <class T>
std::vector<Mat<T>> glu_layer_backward(const std::vector<const Mat<T>*>& xs,
                                       const GluParams<T>& p, const GluCache<T>& cache,
                                       const std::vector<Mat<T>>& dys, GluGrads<T>* gp,
                                       ThreadPool* pool) {
  std::vector<Mat<T>> da, db;
  da.reserve(dys.size());
  db.reserve(dys.size());
  for (size_t i = 0; i < dys.size(); ++i) {
    Mat<T> dai(dys[i].rows, dys[i].cols);
    Mat<T> dbi(dys[i].rows, dys[i].cols);
    for (size_t j = 0; j < dys[i].size(); ++j) {
      const T s = cache.sig_b[i].data[j];
      dai.data[j] = dys[i].data[j] * s;
      dbi.data[j] = dys[i].data[j] * cache.a[i].data[j] * s * (T(1) - s);
    }
    da.push_back(std::move(dai));
    db.push_back(std::move(dbi));
  }
  if (p.bn_linear) {
    da = batch_norm_backward(da, cache.bn_a, *p.bn_linear,
                             gp != nullptr ? &gp->bn_linear : nullptr, pool);
  }
  if (p.bn_gate) {
    db = batch_norm_backward(db, cache.bn_b, *p.bn_gate,
                             gp != nullptr ? &gp->bn_gate : nullptr, pool);
  }
  std::vector<Mat<T>> dx;
  dx.reserve(xs.size());
  for (const Mat<T>* x : xs) dx.emplace_back(x->rows, x->cols);
  conv1d_causal_backward(xs, p.linear, da, gp != nullptr ? &gp->linear : nullptr, &dx, pool);
  conv1d_causal_backward(xs, p.gate, db, gp != nullptr ? &gp->gate : nullptr, &dx, pool);
  return dx;
}

// ---------------------------------------------------------------------------
// Pooling over the time axis
// ---------------------------------------------------------------------------

template <class T>
struct MaxPoolResult {
  std::vector<T> values;   // per row
  std::vector<int> argmax; // first column attaining the max
};

template <class T>
MaxPoolResult<T> max_pool_time(const Mat<T>& x) {
  if (x.cols < 1) throw std::invalid_argument("max_pool_time: empty input");
  MaxPoolResult<T> out;
  out.values.resize(x.rows);
  out.argmax.resize(x.rows);
  for (int c = 0; c < x.rows; ++c) {
    const T* r = x.row(c);
    int best = 0;
    for (int t = 1; t < x.cols; ++t) {
      if (r[t] > r[best]) best = t;  // first occurrence wins ties
    }
    out.values[c] = r[best];
    out.argmax[c] = best;
  }
  return out;
}

// Gradient routes only to the argmax positions.
template <class T>
Mat<T> max_pool_time_backward(const MaxPoolResult<T>& res, const std::vector<T>& dvalues,
                              int rows, int cols) {
  Mat<T> dx(rows, cols);
  for (int c = 0; c < rows; ++c) dx(c, res.argmax[c]) += dvalues[c];
  return dx;
}

// Top-k per row, emitted in their original temporal order. Rows shorter than
// k are left-filled with zeros so the real values occupy the rightmost slots.
template <class T>
struct MaxKResult {
  Mat<T> values;            // rows x k
  std::vector<int> source;  // rows*k source columns, -1 for zero fill
  int k = 0;
};

template <class T>
MaxKResult<T> max_k_pool_time(const Mat<T>& x, int k) {
  if (k < 1) throw std::invalid_argument("max_k_pool_time: k must be >= 1");
  if (x.cols < 1) throw std::invalid_argument("max_k_pool_time: empty input");
  MaxKResult<T> out;
  out.k = k;
  out.values = Mat<T>(x.rows, k);
  out.source.assign(static_cast<size_t>(x.rows) * k, -1);
  const int take = std::min(k, x.cols);
  std::vector<int> order(x.cols);
  for (int c = 0; c < x.rows; ++c) {
    const T* r = x.row(c);
    std::iota(order.begin(), order.end(), 0);
    // Largest first; earlier column wins among equals. NaN sorts last so a
    // poisoned forward pass stays well-defined until the loss check trips.
    std::partial_sort(order.begin(), order.begin() + take, order.end(), [&](int a, int b) {
      const bool na = std::isnan(r[a]), nb = std::isnan(r[b]);
      if (na || nb) return nb && !na;
      return r[a] > r[b] || (r[a] == r[b] && a < b);
    });
    std::sort(order.begin(), order.begin() + take);  // restore temporal order
    for (int j = 0; j < take; ++j) {
      const int slot = k - take + j;  // left-fill: values end up rightmost
      out.values(c, slot) = r[order[j]];
      out.source[static_cast<size_t>(c) * k + slot] = order[j];
    }
  }
  return out;
}

template <class T>
Mat<T> max_k_pool_time_backward(const MaxKResult<T>& res, const Mat<T>& dvalues,
                                int rows, int cols) {
  Mat<T> dx(rows, cols);
  for (int c = 0; c < rows; ++c) {
    for (int j = 0; j < res.k; ++j) {
      const int src = res.source[static_cast<size_t>(c) * res.k + j];
      if (src >= 0) dx(c, src) += dvalues(c, j);
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Fully connected layer
// ---------------------------------------------------------------------------

template <class T>
std::vector<T> dense(const std::vector<T>& x, const Mat<T>& w, const Mat<T>& b) {
  if (static_cast<int>(x.size()) != w.cols || w.rows != b.rows) {
    throw std::invalid_argument("dense: shape mismatch");
  }
  std::vector<T> y(w.rows);
  for (int o = 0; o < w.rows; ++o) {
    const T* wr = w.row(o);
    T acc = b(o, 0);
    for (size_t i = 0; i < x.size(); ++i) acc += wr[i] * x[i];
    y[o] = acc;
  }
  return y;
}

// Accumulates into dw/db/dx (caller zeroes dx or passes fresh).
template <class T>
void dense_backward(const std::vector<T>& x, const Mat<T>& w, const std::vector<T>& dy,
                    Mat<T>* dw, Mat<T>* db, std::vector<T>* dx) {
  for (int o = 0; o < w.rows; ++o) {
    const T g = dy[o];
    if (dw != nullptr) {
      T* dwr = dw->row(o);
      for (size_t i = 0; i < x.size(); ++i) dwr[i] += g * x[i];
    }
    if (db != nullptr) (*db)(o, 0) += g;
    if (dx != nullptr) {
      const T* wr = w.row(o);
      for (size_t i = 0; i < x.size(); ++i) (*dx)[i] += g * wr[i];
    }
  }
}

}  // namespace cne

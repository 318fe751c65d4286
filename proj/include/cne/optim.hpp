#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cne/mat.hpp"
#include "cne/thread_pool.hpp"

namespace cne {

template <class T>
struct NamedParam {
  std::string name;
  Mat<T>* value = nullptr;
};

// Adam with bias correction (Kingma & Ba defaults).
template <class T>
struct AdamState {
  T lr = T(1e-3);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T epsilon = T(1e-8);
  long long step = 0;
  std::vector<Mat<T>> m, v;  // first/second moments, sized lazily
};

template <class T>
void adam_step(const std::vector<NamedParam<T>>& params,
               const std::vector<const Mat<T>*>& grads, AdamState<T>& st,
               ThreadPool* pool = nullptr) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: param/grad count mismatch");
  if (st.m.empty()) {
    for (const auto& p : params) {
      st.m.emplace_back(p.value->rows, p.value->cols);
      st.v.emplace_back(p.value->rows, p.value->cols);
    }
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i].value->same_shape(*grads[i])) {
      throw std::invalid_argument("adam_step: gradient shape mismatch for " + params[i].name);
    }
    if (!all_finite(*grads[i])) {
      throw std::runtime_error("adam_step: non-finite gradient for parameter " + params[i].name);
    }
  }
  ++st.step;
  const T bc1 = T(1) - std::pow(st.beta1, static_cast<T>(st.step));
  const T bc2 = T(1) - std::pow(st.beta2, static_cast<T>(st.step));
  parallel_chunks(pool, static_cast<int>(params.size()), [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      T* p = params[i].value->data.data();
      const T* g = grads[i]->data.data();
      T* m = st.m[i].data.data();
      T* v = st.v[i].data.data();
      const size_t n = params[i].value->size();
      for (size_t j = 0; j < n; ++j) {
        m[j] = st.beta1 * m[j] + (T(1) - st.beta1) * g[j];
        v[j] = st.beta2 * v[j] + (T(1) - st.beta2) * g[j] * g[j];
        const T mhat = m[j] / bc1;
        const T vhat = v[j] / bc2;
        p[j] -= st.lr * mhat / (std::sqrt(vhat) + st.epsilon);
      }
    }
  });
}

// Plain momentum: v <- mu*v + g, p <- p - lr*v.
template <class T>
struct SgdMomentumState {
  T lr = T(0.01);
  T momentum = T(0.9);
  std::vector<Mat<T>> velocity;
};

template <class T>
void sgd_momentum_step(const std::vector<NamedParam<T>>& params,
                       const std::vector<const Mat<T>*>& grads, SgdMomentumState<T>& st) {
  if (params.size() != grads.size()) throw std::invalid_argument("sgd_momentum_step: param/grad count mismatch");
  if (st.velocity.empty()) {
    for (const auto& p : params) st.velocity.emplace_back(p.value->rows, p.value->cols);
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i].value->same_shape(*grads[i])) {
      throw std::invalid_argument("sgd_momentum_step: gradient shape mismatch for " + params[i].name);
    }
    if (!all_finite(*grads[i])) {
      throw std::runtime_error("sgd_momentum_step: non-finite gradient for parameter " + params[i].name);
    }
    T* p = params[i].value->data.data();
    const T* g = grads[i]->data.data();
    T* v = st.velocity[i].data.data();
    const size_t n = params[i].value->size();
    for (size_t j = 0; j < n; ++j) {
      v[j] = st.momentum * v[j] + g[j];
      p[j] -= st.lr * v[j];
    }
  }
}

}  // namespace cne

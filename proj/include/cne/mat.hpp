#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cne {

// Dense row-major matrix. The production dtype is float; double instantiations
// exist for finite-difference gradient checking.
template <class T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, T(0)) {
    assert(r >= 0 && c >= 0);
  }
  Mat(int r, int c, T fill)
      : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

  T* row(int r) {
    assert(r >= 0 && r < rows);
    return data.data() + static_cast<size_t>(r) * cols;
  }
  const T* row(int r) const {
    assert(r >= 0 && r < rows);
    return data.data() + static_cast<size_t>(r) * cols;
  }

  T& operator()(int r, int c) {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return data[static_cast<size_t>(r) * cols + c];
  }
  T operator()(int r, int c) const {
    assert(r >= 0 && r < rows && c >= 0 && c < cols);
    return data[static_cast<size_t>(r) * cols + c];
  }

  size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  void zero() { std::fill(data.begin(), data.end(), T(0)); }
  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Mat& other) const {
    return rows == other.rows && cols == other.cols;
  }

  static Mat zeros_like(const Mat& other) { return Mat(other.rows, other.cols); }
};

using MatF = Mat<float>;
using MatD = Mat<double>;

template <class T>
bool all_finite(const Mat<T>& m) {
  for (T v : m.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template <class T>
void require_shape(const Mat<T>& m, int rows, int cols, const char* what) {
  if (m.rows != rows || m.cols != cols) {
    throw std::invalid_argument(std::string(what) + ": expected " +
                                std::to_string(rows) + "x" + std::to_string(cols) +
                                ", got " + std::to_string(m.rows) + "x" +
                                std::to_string(m.cols));
  }
}

template <class U, class T>
Mat<U> convert(const Mat<T>& m) {
  Mat<U> out(m.rows, m.cols);
  for (size_t i = 0; i < m.data.size(); ++i) out.data[i] = static_cast<U>(m.data[i]);
  return out;
}

}  // namespace cne

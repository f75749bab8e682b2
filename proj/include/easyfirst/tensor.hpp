#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace easyfirst {

/// Dense row-major matrix of doubles. Column vectors are (n x 1).
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  static Tensor column(std::vector<double> values) {
    Tensor t;
    t.rows = values.size();
    t.cols = 1;
    t.data = std::move(values);
    return t;
  }
  static Tensor column(std::initializer_list<double> values) {
    return column(std::vector<double>(values));
  }
  static Tensor from(std::size_t r, std::size_t c, std::vector<double> values) {
    if (values.size() != r * c) throw std::invalid_argument("Tensor::from: data length does not match shape");
    Tensor t;
    t.rows = r;
    t.cols = c;
    t.data = std::move(values);
    return t;
  }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  std::span<double> span() { return data; }
  std::span<const double> span() const { return data; }

  std::string shape_string() const { return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")"; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool operator==(const Tensor& o) const = default;
};

namespace kernels {

// Every matrix-vector product in the library goes through these two loops, so
// cached and graph-built evaluations of the same expression agree bit-for-bit.
inline void matmul(const Tensor& a, const Tensor& b, Tensor& out) {
  out.rows = a.rows;
  out.cols = b.cols;
  out.data.assign(a.rows * b.cols, 0.0);
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double* arow = a.data.data() + r * a.cols;
    for (std::size_t c = 0; c < b.cols; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * b.data[k * b.cols + c];
      out.data[r * b.cols + c] = acc;
    }
  }
}

inline void matvec(const Tensor& w, std::span<const double> x, std::span<double> out) {
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wrow = w.data.data() + r * w.cols;
    double acc = 0.0;
    for (std::size_t k = 0; k < w.cols; ++k) acc += wrow[k] * x[k];
    out[r] = acc;
  }
}

inline void add_into(std::span<double> acc, std::span<const double> x) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
}

}  // namespace kernels
}  // namespace easyfirst

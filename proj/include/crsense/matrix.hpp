#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace crsense {

// Dense row-major matrix of doubles. Rows index agents (SUs), columns index
// tasks (bands) everywhere in this library.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill_value = 0.0)
      : rows(r), cols(c), data(r * c, fill_value) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }

  void assign(std::size_t r, std::size_t c, double fill_value) {
    rows = r;
    cols = c;
    data.assign(r * c, fill_value);
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
  }
};

}  // namespace crsense

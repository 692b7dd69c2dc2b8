// Dense row-major 2-D grid used for masks, instance maps, and boundary maps.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "patchseg/errors.hpp"

namespace patchseg {

using ClassId = std::uint16_t;
using InstanceId = std::uint32_t;

template <typename T>
class Grid {
 public:
  Grid() = default;

  Grid(int height, int width, T fill = T{}) : height_(height), width_(width) {
    if (height <= 0 || width <= 0) {
      throw DataError("grid dimensions must be positive, got " + std::to_string(height) + "x" +
                      std::to_string(width));
    }
    data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), fill);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  // Unchecked access, (row, col).
  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * width_ + c]; }
  const T& operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * width_ + c];
  }

  // Bounds-checked access.
  T& at(int r, int c) {
    check(r, c);
    return (*this)(r, c);
  }
  const T& at(int r, int c) const {
    check(r, c);
    return (*this)(r, c);
  }

  bool in_bounds(int r, int c) const { return r >= 0 && r < height_ && c >= 0 && c < width_; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  void check(int r, int c) const {
    if (!in_bounds(r, c)) {
      throw DataError("grid index (" + std::to_string(r) + "," + std::to_string(c) +
                      ") outside " + std::to_string(height_) + "x" + std::to_string(width_));
    }
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

using SemanticMask = Grid<ClassId>;
using BoundaryMap = Grid<float>;

}  // namespace patchseg

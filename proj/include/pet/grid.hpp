#pragma once

#include <cstdint>
#include <vector>

#include "pet/errors.hpp"

namespace pet {

// Dense row-major H x W grid. The workhorse container for every per-pixel
// map in the library (labels, categories, heatmaps, offset components).
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{})
      : height_(height), width_(width), data_(size_t(height) * size_t(width), fill) {
    if (height < 0 || width < 0) {
      throw ShapeMismatch("grid dimensions must be non-negative");
    }
  }

  int height() const { return height_; }
  int width() const { return width_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int y, int x) { return data_[size_t(y) * width_ + x]; }
  const T& at(int y, int x) const { return data_[size_t(y) * width_ + x]; }
  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  bool in_bounds(int y, int x) const {
    return y >= 0 && y < height_ && x >= 0 && x < width_;
  }
  bool same_shape(const Grid& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.height_ == b.height_ && a.width_ == b.width_ && a.data_ == b.data_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

// Encoded panoptic label value; 0 means non-edge.
using Label = uint32_t;
inline constexpr Label kNonEdge = 0;

using LabelGrid = Grid<Label>;       // panoptic labels (segmentation or edge maps)
using CategoryGrid = Grid<int>;      // semantic categories, 0 = non-edge
using ScalarGrid = Grid<double>;     // heatmaps, masks, per-pixel scalars

// Dense C x H x W volume (channel-major), used for logits and feature maps.
class Volume {
 public:
  Volume() = default;
  Volume(int channels, int height, int width, double fill = 0.0)
      : channels_(channels),
        height_(height),
        width_(width),
        data_(size_t(channels) * height * width, fill) {
    if (channels < 0 || height < 0 || width < 0) {
      throw ShapeMismatch("volume dimensions must be non-negative");
    }
  }

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  size_t size() const { return data_.size(); }

  double& at(int c, int y, int x) {
    return data_[(size_t(c) * height_ + y) * width_ + x];
  }
  const double& at(int c, int y, int x) const {
    return data_[(size_t(c) * height_ + y) * width_ + x];
  }
  double& operator[](size_t i) { return data_[i]; }
  const double& operator[](size_t i) const { return data_[i]; }

  bool same_shape(const Volume& other) const {
    return channels_ == other.channels_ && height_ == other.height_ &&
           width_ == other.width_;
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

// Per-pixel 2D offset field; convention: pixel + (dy, dx) lands on the
// instance center the pixel belongs to.
struct OffsetField {
  ScalarGrid dy;
  ScalarGrid dx;

  OffsetField() = default;
  OffsetField(int height, int width) : dy(height, width, 0.0), dx(height, width, 0.0) {}

  int height() const { return dy.height(); }
  int width() const { return dy.width(); }
  bool same_shape(const OffsetField& o) const {
    return dy.same_shape(o.dy) && dx.same_shape(o.dx);
  }
};

}  // namespace pet

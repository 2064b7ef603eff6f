#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace lumi {

/// Planar float raster: plane c occupies data[c*W*H .. (c+1)*W*H), rows top-down.
/// Display images live in [0,1]; derivative and gradient maps are unbounded.
template <typename T>
struct ImageT {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<T> data;

  ImageT() = default;
  ImageT(int w, int h, int c, T fill = T(0))
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t value_count() const { return data.size(); }

  T& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  const T& at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  std::span<T> plane(int c) { return {data.data() + c * pixel_count(), pixel_count()}; }
  std::span<const T> plane(int c) const {
    return {data.data() + c * pixel_count(), pixel_count()};
  }

  bool same_shape(const ImageT& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }

  bool all_finite() const {
    for (T v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  T mean() const {
    if (data.empty()) return T(0);
    T s = 0;
    for (T v : data) s += v;
    return s / static_cast<T>(data.size());
  }

  void clamp(T lo, T hi) {
    for (T& v : data) v = std::clamp(v, lo, hi);
  }
};

using Image = ImageT<float>;
using ImageD = ImageT<double>;

template <typename To, typename From>
ImageT<To> image_cast(const ImageT<From>& in) {
  ImageT<To> out(in.width, in.height, in.channels);
  for (std::size_t i = 0; i < in.data.size(); ++i)
    out.data[i] = static_cast<To>(in.data[i]);
  return out;
}

}  // namespace lumi

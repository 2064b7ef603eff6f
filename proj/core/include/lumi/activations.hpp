#pragma once

#include <cmath>

namespace lumi {

template <typename T>
T sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

template <typename T>
T sigmoid_grad(T x) {
  const T s = sigmoid(x);
  return s * (T(1) - s);
}

template <typename T>
T logit(T p) {
  return std::log(p / (T(1) - p));
}

}  // namespace lumi

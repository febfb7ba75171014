#pragma once

#include <cstddef>
#include <vector>

namespace atcor::model {

struct ConvSpec {
  int kh = 3;
  int kw = 3;
  int out = 1;
  bool operator==(const ConvSpec&) const = default;
};

// Geometry of one convolution (+ rectifier, + optional 2x2/2 max-pool).
// Padding is "same": (k-1)/2 before, the remainder after.
struct ConvLayerShape {
  int in_h, in_w, in_c;
  int kh, kw, out_c;
  bool pool;
  int pooled_h, pooled_w;  // equal to in_h/in_w when !pool

  std::size_t positions() const { return static_cast<std::size_t>(in_h) * static_cast<std::size_t>(in_w); }
  std::size_t patch() const { return static_cast<std::size_t>(kh * kw * in_c); }
  std::size_t out_size() const {
    return static_cast<std::size_t>(pooled_h) * static_cast<std::size_t>(pooled_w) * static_cast<std::size_t>(out_c);
  }
};

// Convs in order; every conv but the last is followed by max-pooling, then
// flatten and an affine map to one scalar. Inputs are rows x cols x channels
// with channel fastest.
struct CnnShape {
  int rows = 11;
  int cols = 11;
  int channels = 1;
  std::vector<ConvSpec> convs;

  // Throws ShapeError if a pooling stage would produce an empty map.
  std::vector<ConvLayerShape> layers() const;
  std::size_t input_size() const {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * static_cast<std::size_t>(channels);
  }
  std::size_t flat_size() const;
};

struct CnnWeights {
  std::vector<const double*> w;  // out_c x patch, patch ordered (ki, kj, channel)
  std::vector<const double*> b;  // out_c
  const double* fc_w = nullptr;  // flat
  const double* fc_b = nullptr;  // 1
};

struct CnnGrads {
  std::vector<double*> w;
  std::vector<double*> b;
  double* fc_w = nullptr;
  double* fc_b = nullptr;
};

struct CnnCache {
  struct Layer {
    std::vector<double> cols;  // positions x patch
    std::vector<double> y;     // positions x out_c, after the rectifier
    std::vector<double> pooled;
    std::vector<std::size_t> argmax;  // per pooled element, index into y
  };
  std::vector<Layer> layers;
  double out = 0.0;
};

double cnn_forward(const std::vector<ConvLayerShape>& shape, std::size_t flat, const CnnWeights& w,
                   const double* input, CnnCache& cache);

// Accumulates into g. dinput may be null (input gradients are not needed
// when the input is data).
void cnn_backward(const std::vector<ConvLayerShape>& shape, std::size_t flat, const CnnWeights& w,
                  const CnnCache& cache, double dout, const CnnGrads& g, double* dinput);

void im2col(const ConvLayerShape& s, const double* in, double* cols);
void col2im_add(const ConvLayerShape& s, const double* cols, double* in);

}  // namespace atcor::model

#include "atcor/model/cnn.hpp"

#include <algorithm>

#include "atcor/common/error.hpp"
#include "atcor/simd/kernels.hpp"

namespace atcor::model {

std::vector<ConvLayerShape> CnnShape::layers() const {
  if (convs.empty()) throw ShapeError("CNN needs at least one convolution");
  std::vector<ConvLayerShape> out;
  int h = rows, w = cols, c = channels;
  for (std::size_t i = 0; i < convs.size(); ++i) {
    const auto& cv = convs[i];
    if (cv.kh < 1 || cv.kw < 1 || cv.out < 1) throw ShapeError("convolution sizes must be positive");
    const bool pool = i + 1 < convs.size();
    ConvLayerShape l{h, w, c, cv.kh, cv.kw, cv.out, pool, pool ? h / 2 : h, pool ? w / 2 : w};
    if (l.pooled_h < 1 || l.pooled_w < 1)
      throw ShapeError("pooling after conv " + std::to_string(i + 1) + " empties a " + std::to_string(h) + "x" +
                       std::to_string(w) + " map");
    out.push_back(l);
    h = l.pooled_h;
    w = l.pooled_w;
    c = cv.out;
  }
  return out;
}

std::size_t CnnShape::flat_size() const { return layers().back().out_size(); }

void im2col(const ConvLayerShape& s, const double* in, double* cols) {
  const int pt = (s.kh - 1) / 2, pl = (s.kw - 1) / 2;
  const std::size_t patch = s.patch();
  const auto c = static_cast<std::size_t>(s.in_c);
  for (int r = 0; r < s.in_h; ++r) {
    for (int q = 0; q < s.in_w; ++q) {
      double* row = cols + (static_cast<std::size_t>(r * s.in_w + q)) * patch;
      for (int i = 0; i < s.kh; ++i) {
        const int rr = r - pt + i;
        for (int j = 0; j < s.kw; ++j) {
          const int qq = q - pl + j;
          double* dst = row + static_cast<std::size_t>(i * s.kw + j) * c;
          if (rr < 0 || rr >= s.in_h || qq < 0 || qq >= s.in_w) {
            std::fill(dst, dst + c, 0.0);
          } else {
            const double* src = in + static_cast<std::size_t>(rr * s.in_w + qq) * c;
            std::copy(src, src + c, dst);
          }
        }
      }
    }
  }
}

void col2im_add(const ConvLayerShape& s, const double* cols, double* in) {
  const int pt = (s.kh - 1) / 2, pl = (s.kw - 1) / 2;
  const std::size_t patch = s.patch();
  const auto c = static_cast<std::size_t>(s.in_c);
  for (int r = 0; r < s.in_h; ++r) {
    for (int q = 0; q < s.in_w; ++q) {
      const double* row = cols + (static_cast<std::size_t>(r * s.in_w + q)) * patch;
      for (int i = 0; i < s.kh; ++i) {
        const int rr = r - pt + i;
        if (rr < 0 || rr >= s.in_h) continue;
        for (int j = 0; j < s.kw; ++j) {
          const int qq = q - pl + j;
          if (qq < 0 || qq >= s.in_w) continue;
          const double* src = row + static_cast<std::size_t>(i * s.kw + j) * c;
          double* dst = in + static_cast<std::size_t>(rr * s.in_w + qq) * c;
          for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += src[ch];
        }
      }
    }
  }
}

double cnn_forward(const std::vector<ConvLayerShape>& shape, std::size_t flat, const CnnWeights& w,
                   const double* input, CnnCache& cache) {
  cache.layers.resize(shape.size());
  const double* x = input;
  for (std::size_t l = 0; l < shape.size(); ++l) {
    const auto& s = shape[l];
    auto& L = cache.layers[l];
    const std::size_t pos = s.positions();
    const auto oc = static_cast<std::size_t>(s.out_c);
    L.cols.resize(pos * s.patch());
    im2col(s, x, L.cols.data());
    L.y.resize(pos * oc);
    for (std::size_t p = 0; p < pos; ++p) std::copy(w.b[l], w.b[l] + oc, L.y.data() + p * oc);
    simd::kernels().gemm_nt(pos, oc, s.patch(), L.cols.data(), w.w[l], L.y.data(), true);
    for (double& v : L.y) v = v > 0.0 ? v : 0.0;
    if (s.pool) {
      L.pooled.resize(s.out_size());
      L.argmax.resize(s.out_size());
      for (int r = 0; r < s.pooled_h; ++r) {
        for (int q = 0; q < s.pooled_w; ++q) {
          for (std::size_t ch = 0; ch < oc; ++ch) {
            std::size_t best = (static_cast<std::size_t>(2 * r * s.in_w + 2 * q)) * oc + ch;
            for (int i = 0; i < 2; ++i)
              for (int j = 0; j < 2; ++j) {
                const std::size_t k = (static_cast<std::size_t>((2 * r + i) * s.in_w + 2 * q + j)) * oc + ch;
                if (L.y[k] > L.y[best]) best = k;
              }
            const std::size_t o = (static_cast<std::size_t>(r * s.pooled_w + q)) * oc + ch;
            L.pooled[o] = L.y[best];
            L.argmax[o] = best;
          }
        }
      }
      x = L.pooled.data();
    } else {
      L.pooled.clear();
      L.argmax.clear();
      x = L.y.data();
    }
  }
  cache.out = w.fc_b[0] + simd::dot(w.fc_w, x, flat);
  return cache.out;
}

void cnn_backward(const std::vector<ConvLayerShape>& shape, std::size_t flat, const CnnWeights& w,
                  const CnnCache& cache, double dout, const CnnGrads& g, double* dinput) {
  const auto& last = cache.layers.back();
  const double* xlast = shape.back().pool ? last.pooled.data() : last.y.data();
  simd::axpy(dout, xlast, g.fc_w, flat);
  g.fc_b[0] += dout;

  std::vector<double> dx(flat);
  std::fill(dx.begin(), dx.end(), 0.0);
  simd::axpy(dout, w.fc_w, dx.data(), flat);

  std::vector<double> dy, dcols;
  for (std::size_t l = shape.size(); l-- > 0;) {
    const auto& s = shape[l];
    const auto& L = cache.layers[l];
    const std::size_t pos = s.positions();
    const auto oc = static_cast<std::size_t>(s.out_c);
    if (s.pool) {
      dy.assign(pos * oc, 0.0);
      for (std::size_t o = 0; o < L.argmax.size(); ++o) dy[L.argmax[o]] += dx[o];
    } else {
      dy = dx;
    }
    for (std::size_t k = 0; k < dy.size(); ++k)
      if (!(L.y[k] > 0.0)) dy[k] = 0.0;
    for (std::size_t p = 0; p < pos; ++p)
      for (std::size_t ch = 0; ch < oc; ++ch) g.b[l][ch] += dy[p * oc + ch];
    simd::kernels().gemm_tn(oc, s.patch(), pos, dy.data(), L.cols.data(), g.w[l], true);
    double* target = nullptr;
    std::vector<double> dprev;
    if (l > 0) {
      dprev.assign(static_cast<std::size_t>(s.in_h * s.in_w * s.in_c), 0.0);
      target = dprev.data();
    } else {
      target = dinput;
    }
    if (target) {
      dcols.resize(pos * s.patch());
      simd::kernels().gemm_nn(pos, s.patch(), oc, dy.data(), w.w[l], dcols.data(), false);
      col2im_add(s, dcols.data(), target);
    }
    dx = std::move(dprev);
  }
}

}  // namespace atcor::model

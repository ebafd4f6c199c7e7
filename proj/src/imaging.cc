/* Copyright 2026 The XEdge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "xedge/imaging.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "xedge/error.h"

namespace xedge {
namespace {

void CheckRange(RangeTag range, const std::vector<float>& data) {
  for (float v : data) {
    if (!std::isfinite(v)) Fail(ErrorCode::kInvalidArgument, "image contains a non-finite value");
  }
  if (range == RangeTag::kNormalized) return;
  const float hi = range == RangeTag::kRaw255 ? 255.0f : 1.0f;
  for (float v : data) {
    if (v < 0.0f || v > hi) {
      Fail(ErrorCode::kInvalidArgument,
           std::string("value ") + std::to_string(v) + " outside " + RangeTagName(range) +
               " range");
    }
  }
}

// Symmetric reflection: ... c b a | a b c ... | c b a ...
int Reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

void ClampToRange(RangeTag range, std::span<float> values) {
  if (range == RangeTag::kNormalized) return;
  const float hi = range == RangeTag::kRaw255 ? 255.0f : 1.0f;
  for (float& v : values) v = std::clamp(v, 0.0f, hi);
}

}  // namespace

const char* RangeTagName(RangeTag tag) {
  switch (tag) {
    case RangeTag::kRaw255: return "raw255";
    case RangeTag::kUnit: return "unit";
    case RangeTag::kNormalized: return "normalized";
  }
  return "?";
}

ImageTensor::ImageTensor(int channels, int height, int width, RangeTag range, float fill)
    : ImageTensor(channels, height, width, range,
                  std::vector<float>(static_cast<size_t>(std::max(channels, 0)) *
                                         std::max(height, 0) * std::max(width, 0),
                                     fill)) {}

ImageTensor::ImageTensor(int channels, int height, int width, RangeTag range,
                         std::vector<float> data)
    : channels_(channels), height_(height), width_(width), range_(range), data_(std::move(data)) {
  Require(channels > 0 && height > 0 && width > 0, "image dimensions must be positive");
  Require(data_.size() == static_cast<size_t>(channels) * height * width,
          "image data length does not match C*H*W");
  CheckRange(range_, data_);
}

BinaryMask::BinaryMask(int h, int w, bool value)
    : height(h), width(w), bits(static_cast<size_t>(h) * w, value ? 1 : 0) {
  Require(h >= 0 && w >= 0, "mask dimensions must be nonnegative");
}

int64_t BinaryMask::Count() const {
  return std::count_if(bits.begin(), bits.end(), [](uint8_t b) { return b != 0; });
}

namespace {
template <typename Op>
BinaryMask Combine(const BinaryMask& a, const BinaryMask& b, Op op) {
  Require(a.SameShape(b), "mask shapes differ");
  BinaryMask out(a.height, a.width);
  for (size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = op(a.bits[i] != 0, b.bits[i] != 0) ? 1 : 0;
  return out;
}
}  // namespace

BinaryMask MaskUnion(const BinaryMask& a, const BinaryMask& b) {
  return Combine(a, b, [](bool x, bool y) { return x || y; });
}
BinaryMask MaskIntersection(const BinaryMask& a, const BinaryMask& b) {
  return Combine(a, b, [](bool x, bool y) { return x && y; });
}
BinaryMask MaskDifference(const BinaryMask& a, const BinaryMask& b) {
  return Combine(a, b, [](bool x, bool y) { return x && !y; });
}
bool MaskContains(const BinaryMask& outer, const BinaryMask& inner) {
  Require(outer.SameShape(inner), "mask shapes differ");
  for (size_t i = 0; i < inner.bits.size(); ++i) {
    if (inner.bits[i] && !outer.bits[i]) return false;
  }
  return true;
}

SaliencyMap::SaliencyMap(int cat, int h, int w, std::vector<float> v)
    : category(cat), height(h), width(w), values(std::move(v)) {
  Require(h > 0 && w > 0, "saliency dimensions must be positive");
  Require(values.size() == static_cast<size_t>(h) * w, "saliency length does not match H*W");
  for (float x : values) Require(std::isfinite(x), "saliency contains a non-finite value");
}

double RectIoU(const BBoxRect& a, const BBoxRect& b) {
  const int r0 = std::max(a.row_min, b.row_min);
  const int r1 = std::min(a.row_max, b.row_max);
  const int c0 = std::max(a.col_min, b.col_min);
  const int c1 = std::min(a.col_max, b.col_max);
  const int64_t inter =
      (r1 >= r0 && c1 >= c0) ? static_cast<int64_t>(r1 - r0 + 1) * (c1 - c0 + 1) : 0;
  const int64_t uni = a.Area() + b.Area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

ImageTensor NormalizeImage(const ImageTensor& img, const NormalizationSpec& spec) {
  Require(img.range() == RangeTag::kRaw255, "NormalizeImage expects a raw255 image");
  if (spec.mean.size() != static_cast<size_t>(img.channels()) ||
      spec.stddev.size() != static_cast<size_t>(img.channels())) {
    Fail(ErrorCode::kInvalidArgument, "normalization spec has " +
                                          std::to_string(spec.mean.size()) +
                                          " channels, image has " +
                                          std::to_string(img.channels()));
  }
  std::vector<float> out(img.data().size());
  for (int c = 0; c < img.channels(); ++c) {
    Require(spec.stddev[c] > 0.0f, "normalization std must be positive");
    const double mu = spec.mean[c];
    const double sigma = spec.stddev[c];
    auto in = img.plane(c);
    float* dst = out.data() + static_cast<size_t>(c) * img.plane_size();
    for (size_t i = 0; i < in.size(); ++i) {
      dst[i] = static_cast<float>((in[i] / 255.0 - mu) / sigma);
    }
  }
  return ImageTensor(img.channels(), img.height(), img.width(), RangeTag::kNormalized,
                     std::move(out));
}

ImageTensor DenormalizeImage(const ImageTensor& img, const NormalizationSpec& spec) {
  Require(img.range() == RangeTag::kNormalized, "DenormalizeImage expects a normalized image");
  Require(spec.mean.size() == static_cast<size_t>(img.channels()) &&
              spec.stddev.size() == static_cast<size_t>(img.channels()),
          "normalization spec channel count mismatch");
  std::vector<float> out(img.data().size());
  for (int c = 0; c < img.channels(); ++c) {
    auto in = img.plane(c);
    float* dst = out.data() + static_cast<size_t>(c) * img.plane_size();
    for (size_t i = 0; i < in.size(); ++i) {
      const double v = (in[i] * static_cast<double>(spec.stddev[c]) + spec.mean[c]) * 255.0;
      dst[i] = static_cast<float>(std::clamp(v, 0.0, 255.0));
    }
  }
  return ImageTensor(img.channels(), img.height(), img.width(), RangeTag::kRaw255,
                     std::move(out));
}

ImageTensor ToUnitRange(const ImageTensor& img) {
  if (img.range() == RangeTag::kUnit) return img;
  Require(img.range() == RangeTag::kRaw255, "ToUnitRange expects raw255 or unit input");
  std::vector<float> out(img.data());
  for (float& v : out) v /= 255.0f;
  return ImageTensor(img.channels(), img.height(), img.width(), RangeTag::kUnit, std::move(out));
}

ImageTensor ToRaw255(const ImageTensor& img) {
  if (img.range() == RangeTag::kRaw255) return img;
  Require(img.range() == RangeTag::kUnit, "ToRaw255 expects raw255 or unit input");
  std::vector<float> out(img.data());
  for (float& v : out) v = std::clamp(v * 255.0f, 0.0f, 255.0f);
  return ImageTensor(img.channels(), img.height(), img.width(), RangeTag::kRaw255,
                     std::move(out));
}

std::vector<float> ResizePlaneBilinear(std::span<const float> plane, int h, int w, int out_h,
                                       int out_w) {
  Require(out_h >= 1 && out_w >= 1, "resize target dimensions must be >= 1");
  Require(plane.size() == static_cast<size_t>(h) * w, "plane size mismatch");
  std::vector<float> out(static_cast<size_t>(out_h) * out_w);
  if (out_h == h && out_w == w) {
    std::copy(plane.begin(), plane.end(), out.begin());
    return out;
  }
  // Precompute the column taps once.
  std::vector<int> x0(out_w), x1(out_w);
  std::vector<double> fx(out_w);
  const double sx = static_cast<double>(w) / out_w;
  for (int c = 0; c < out_w; ++c) {
    double src = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
    x0[c] = static_cast<int>(std::floor(src));
    x1[c] = std::min(x0[c] + 1, w - 1);
    fx[c] = src - x0[c];
  }
  const double sy = static_cast<double>(h) / out_h;
  for (int r = 0; r < out_h; ++r) {
    double src = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
    const int y0 = static_cast<int>(std::floor(src));
    const int y1 = std::min(y0 + 1, h - 1);
    const double fy = src - y0;
    const float* row0 = plane.data() + static_cast<size_t>(y0) * w;
    const float* row1 = plane.data() + static_cast<size_t>(y1) * w;
    float* dst = out.data() + static_cast<size_t>(r) * out_w;
    for (int c = 0; c < out_w; ++c) {
      const double top = row0[x0[c]] + (row0[x1[c]] - row0[x0[c]]) * fx[c];
      const double bot = row1[x0[c]] + (row1[x1[c]] - row1[x0[c]]) * fx[c];
      dst[c] = static_cast<float>(top + (bot - top) * fy);
    }
  }
  return out;
}

ImageTensor ResizeBilinear(const ImageTensor& img, int out_h, int out_w) {
  Require(out_h >= 1 && out_w >= 1, "resize target dimensions must be >= 1");
  if (out_h == img.height() && out_w == img.width()) return img;
  std::vector<float> out;
  out.reserve(static_cast<size_t>(img.channels()) * out_h * out_w);
  for (int c = 0; c < img.channels(); ++c) {
    auto plane = ResizePlaneBilinear(img.plane(c), img.height(), img.width(), out_h, out_w);
    ClampToRange(img.range(), plane);
    out.insert(out.end(), plane.begin(), plane.end());
  }
  return ImageTensor(img.channels(), out_h, out_w, img.range(), std::move(out));
}

std::vector<double> GaussianKernel(double sigma) {
  Require(sigma >= 0.0 && std::isfinite(sigma), "blur sigma must be finite and >= 0");
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

ImageTensor GaussianBlur(const ImageTensor& img, double sigma) {
  const std::vector<double> kernel = GaussianKernel(sigma);
  if (kernel.size() == 1) return img;
  const int radius = static_cast<int>(kernel.size() / 2);
  const int h = img.height();
  const int w = img.width();
  ImageTensor out = img;
  std::vector<double> tmp(static_cast<size_t>(h) * w);
  for (int ch = 0; ch < img.channels(); ++ch) {
    auto src = img.plane(ch);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[k + radius] * src[static_cast<size_t>(r) * w + Reflect(c + k, w)];
        }
        tmp[static_cast<size_t>(r) * w + c] = acc;
      }
    }
    auto dst = out.plane(ch);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          acc += kernel[k + radius] * tmp[static_cast<size_t>(Reflect(r + k, h)) * w + c];
        }
        dst[static_cast<size_t>(r) * w + c] = static_cast<float>(acc);
      }
    }
    ClampToRange(img.range(), dst);
  }
  return out;
}

bool PointInPolygon(const Polygon& poly, double x, double y) {
  const size_t n = poly.size();
  // Boundary first: a center on any edge is inside.
  for (size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    const double cross = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
    const double scale = std::max({1.0, std::abs(b.x - a.x) + std::abs(b.y - a.y)});
    if (std::abs(cross) <= 1e-9 * scale && x >= std::min(a.x, b.x) - 1e-9 &&
        x <= std::max(a.x, b.x) + 1e-9 && y >= std::min(a.y, b.y) - 1e-9 &&
        y <= std::max(a.y, b.y) + 1e-9) {
      return true;
    }
  }
  bool inside = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a.y > y) != (b.y > y)) {
      const double xi = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (x < xi) inside = !inside;
    }
  }
  return inside;
}

BinaryMask RasterizePolygon(const Polygon& poly, int h, int w) {
  if (poly.size() < 3) {
    Fail(ErrorCode::kInvalidArgument,
         "polygon needs at least 3 vertices, got " + std::to_string(poly.size()));
  }
  Require(h >= 0 && w >= 0, "raster dimensions must be nonnegative");
  double xmin = poly[0].x, xmax = poly[0].x, ymin = poly[0].y, ymax = poly[0].y;
  for (const Point& p : poly) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      Fail(ErrorCode::kInvalidArgument, "polygon has a non-finite coordinate");
    }
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  BinaryMask mask(h, w);
  const int r0 = std::max(0, static_cast<int>(std::floor(ymin)));
  const int r1 = std::min(h - 1, static_cast<int>(std::ceil(ymax)));
  const int c0 = std::max(0, static_cast<int>(std::floor(xmin)));
  const int c1 = std::min(w - 1, static_cast<int>(std::ceil(xmax)));
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      if (PointInPolygon(poly, c, r)) mask.set(r, c);
    }
  }
  return mask;
}

BinaryMask RasterizePolygons(const std::vector<Polygon>& polys, int h, int w) {
  BinaryMask mask(h, w);
  for (const Polygon& p : polys) mask = MaskUnion(mask, RasterizePolygon(p, h, w));
  return mask;
}

BinaryMask DilateMask(const BinaryMask& mask, int radius) {
  Require(radius >= 0, "dilation radius must be >= 0");
  if (radius == 0) return mask;
  const int h = mask.height;
  const int w = mask.width;
  BinaryMask rows(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!mask.at(r, c)) continue;
      for (int k = std::max(0, c - radius); k <= std::min(w - 1, c + radius); ++k) rows.set(r, k);
    }
  }
  BinaryMask out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!rows.at(r, c)) continue;
      for (int k = std::max(0, r - radius); k <= std::min(h - 1, r + radius); ++k) out.set(k, c);
    }
  }
  return out;
}

std::vector<int64_t> SaliencyOrder(std::span<const float> values) {
  std::vector<int64_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int64_t a, int64_t b) { return values[a] > values[b]; });
  return order;
}

BinaryMask TopKBinarize(const SaliencyMap& sal, int64_t k) {
  const int64_t n = static_cast<int64_t>(sal.height) * sal.width;
  if (k < 0 || k > n) {
    Fail(ErrorCode::kInvalidArgument,
         "top-k count " + std::to_string(k) + " outside [0, " + std::to_string(n) + "]");
  }
  BinaryMask mask(sal.height, sal.width);
  const auto order = SaliencyOrder(sal.values);
  for (int64_t i = 0; i < k; ++i) mask.bits[order[i]] = 1;
  return mask;
}

BBoxRect BBoxOfMask(const BinaryMask& mask) {
  BBoxRect rect{mask.height, -1, mask.width, -1};
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      if (!mask.at(r, c)) continue;
      rect.row_min = std::min(rect.row_min, r);
      rect.row_max = std::max(rect.row_max, r);
      rect.col_min = std::min(rect.col_min, c);
      rect.col_max = std::max(rect.col_max, c);
    }
  }
  if (rect.row_max < 0) Fail(ErrorCode::kInvalidArgument, "bounding box of an empty mask");
  return rect;
}

SaliencyMap MinMaxNormalize(const SaliencyMap& sal) {
  const auto [lo_it, hi_it] = std::minmax_element(sal.values.begin(), sal.values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<float> out(sal.values.size());
  if (hi > lo) {
    for (size_t i = 0; i < out.size(); ++i) {
      out[i] = static_cast<float>((sal.values[i] - lo) / (hi - lo));
    }
  } else {
    std::fill(out.begin(), out.end(), hi > 0.0 ? 1.0f : 0.0f);
  }
  return SaliencyMap(sal.category, sal.height, sal.width, std::move(out));
}

}  // namespace xedge

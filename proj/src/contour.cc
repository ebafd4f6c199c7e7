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
#include "xedge/contour.h"

#include <array>
#include <deque>

namespace xedge {
namespace {

// Clockwise on screen (rows grow downward), starting west.
constexpr std::array<std::array<int, 2>, 8> kDirs = {{
    {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}}};

int DirIndex(int dr, int dc) {
  for (int i = 0; i < 8; ++i) {
    if (kDirs[i][0] == dr && kDirs[i][1] == dc) return i;
  }
  return 0;
}

// Labels 8-connected components in raster order; 0 is background.
std::vector<int> LabelComponents(const BinaryMask& mask, int* count) {
  std::vector<int> labels(mask.bits.size(), 0);
  int next = 0;
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      const size_t idx = static_cast<size_t>(r) * mask.width + c;
      if (!mask.bits[idx] || labels[idx]) continue;
      ++next;
      std::deque<std::pair<int, int>> queue{{r, c}};
      labels[idx] = next;
      while (!queue.empty()) {
        auto [pr, pc] = queue.front();
        queue.pop_front();
        for (const auto& d : kDirs) {
          const int qr = pr + d[0];
          const int qc = pc + d[1];
          if (qr < 0 || qc < 0 || qr >= mask.height || qc >= mask.width) continue;
          const size_t q = static_cast<size_t>(qr) * mask.width + qc;
          if (mask.bits[q] && !labels[q]) {
            labels[q] = next;
            queue.emplace_back(qr, qc);
          }
        }
      }
    }
  }
  *count = next;
  return labels;
}

Polygon TraceFrom(const std::vector<int>& labels, int label, int h, int w, int sr, int sc) {
  auto inside = [&](int r, int c) {
    return r >= 0 && c >= 0 && r < h && c < w && labels[static_cast<size_t>(r) * w + c] == label;
  };
  std::vector<std::pair<int, int>> path{{sr, sc}};
  int pr = sr, pc = sc;
  int back = 0;  // West of the raster-first pixel is never in the component.
  std::pair<int, int> first_move{-1, -1};
  const size_t guard = 4 * labels.size() + 16;
  for (size_t iter = 0; iter < guard; ++iter) {
    int found = -1;
    for (int k = 1; k <= 8; ++k) {
      const int d = (back + k) % 8;
      if (inside(pr + kDirs[d][0], pc + kDirs[d][1])) {
        found = d;
        break;
      }
    }
    if (found < 0) break;  // isolated pixel
    const int qr = pr + kDirs[found][0];
    const int qc = pc + kDirs[found][1];
    // The last background neighbor examined becomes the new backtrack.
    const int prev = (found + 7) % 8;
    const int br = pr + kDirs[prev][0];
    const int bc = pc + kDirs[prev][1];
    if (pr == sr && pc == sc) {
      if (first_move.first < 0) {
        first_move = {qr, qc};
      } else if (first_move == std::make_pair(qr, qc)) {
        break;
      }
    }
    back = DirIndex(br - qr, bc - qc);
    pr = qr;
    pc = qc;
    path.emplace_back(pr, pc);
  }
  // The walk ends by re-entering the start pixel.
  if (path.size() > 1 && path.back() == path.front()) path.pop_back();

  // Drop vertices in the middle of straight runs.
  Polygon poly;
  const size_t n = path.size();
  for (size_t i = 0; i < n; ++i) {
    if (n > 3) {
      const auto& a = path[(i + n - 1) % n];
      const auto& b = path[i];
      const auto& c = path[(i + 1) % n];
      if (b.first - a.first == c.first - b.first && b.second - a.second == c.second - b.second) {
        continue;
      }
    }
    poly.push_back({static_cast<double>(path[i].second), static_cast<double>(path[i].first)});
  }
  while (poly.size() < 3) poly.push_back(poly.back());
  return poly;
}

}  // namespace

std::vector<Polygon> TraceOuterContours(const BinaryMask& mask) {
  int count = 0;
  const auto labels = LabelComponents(mask, &count);
  std::vector<Polygon> out;
  std::vector<bool> seen(count + 1, false);
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      const int label = labels[static_cast<size_t>(r) * mask.width + c];
      if (!label || seen[label]) continue;
      seen[label] = true;
      out.push_back(TraceFrom(labels, label, mask.height, mask.width, r, c));
    }
  }
  return out;
}

std::vector<Polygon> MaskToPolygons(const BinaryMask& mask) {
  int count = 0;
  const auto labels = LabelComponents(mask, &count);
  std::vector<Polygon> out;
  std::vector<bool> seen(count + 1, false);
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      const int label = labels[static_cast<size_t>(r) * mask.width + c];
      if (!label || seen[label]) continue;
      seen[label] = true;
      Polygon contour = TraceFrom(labels, label, mask.height, mask.width, r, c);
      BinaryMask component(mask.height, mask.width);
      for (size_t i = 0; i < labels.size(); ++i) component.bits[i] = labels[i] == label;
      if (RasterizePolygon(contour, mask.height, mask.width) == component) {
        out.push_back(std::move(contour));
        continue;
      }
      // Hole inside the component: fall back to per-run rectangles.
      for (int rr = 0; rr < mask.height; ++rr) {
        int cc = 0;
        while (cc < mask.width) {
          if (!component.at(rr, cc)) {
            ++cc;
            continue;
          }
          const int start = cc;
          while (cc < mask.width && component.at(rr, cc)) ++cc;
          const double x0 = start - 0.25, x1 = cc - 1 + 0.25;
          const double y0 = rr - 0.25, y1 = rr + 0.25;
          out.push_back({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
        }
      }
    }
  }
  return out;
}

}  // namespace xedge

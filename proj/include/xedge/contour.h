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
#ifndef XEDGE_CONTOUR_H_
#define XEDGE_CONTOUR_H_

#include <vector>

#include "xedge/imaging.h"

namespace xedge {

// Outer boundary of each 8-connected component by Moore-neighbor tracing,
// as polygons through boundary pixel centers. Components are visited in
// raster order of their first pixel; each trace runs clockwise on screen.
std::vector<Polygon> TraceOuterContours(const BinaryMask& mask);

// Polygons whose rasterization reproduces `mask` exactly. Components with
// holes, whose outer contour would fill them in, are emitted as one thin
// rectangle per horizontal run instead.
std::vector<Polygon> MaskToPolygons(const BinaryMask& mask);

}  // namespace xedge

#endif  // XEDGE_CONTOUR_H_

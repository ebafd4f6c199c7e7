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
#include "xedge/augment.h"

#include <algorithm>
#include <cmath>

#include <opencv2/imgproc.hpp>

#include "xedge/artifact_io.h"
#include "xedge/contour.h"
#include "xedge/error.h"
#include "xedge/parallel.h"
#include "xedge/random.h"

namespace xedge {

using nlohmann::json;

Dataset EnlargeAnnotations(const Dataset& ds, const std::vector<int64_t>& category_ids,
                           int radius, int thin_threshold,
                           const std::optional<std::set<int64_t>>& image_ids) {
  Require(radius >= 0, "enlargement radius must be >= 0");
  Require(thin_threshold >= 0, "thin threshold must be >= 0");
  for (int64_t id : category_ids) {
    if (!ds.FindCategory(id)) Fail(ErrorCode::kNotFound, "unknown category id " + std::to_string(id));
  }
  const std::set<int64_t> targets(category_ids.begin(), category_ids.end());
  Dataset out = ds;
  for (Annotation& ann : out.annotations) {
    if (ann.is_void || !targets.count(ann.category_id)) continue;
    if (image_ids && !image_ids->count(ann.image_id)) continue;
    const ImageInfo* info = out.FindImage(ann.image_id);
    const BinaryMask mask = RasterizePolygons(ann.polygons, info->height, info->width);
    if (mask.Empty()) continue;
    const BBoxRect box = BBoxOfMask(mask);
    const int min_side = std::min(box.row_max - box.row_min + 1, box.col_max - box.col_min + 1);
    if (min_side > thin_threshold) continue;
    ann.polygons = MaskToPolygons(DilateMask(mask, radius));
  }
  return out;
}

Dataset AddVoidAnnotation(const Dataset& ds, int64_t image_id,
                          const std::vector<Polygon>& polygons) {
  const ImageInfo* info = ds.FindImage(image_id);
  if (!info) Fail(ErrorCode::kNotFound, "unknown image id " + std::to_string(image_id));
  Require(!polygons.empty(), "void annotation needs at least one polygon");
  const BinaryMask region = RasterizePolygons(polygons, info->height, info->width);
  const BinaryMask clipped = MaskDifference(region, BuildLabeledMask(ds, image_id));
  if (clipped.Empty()) {
    Fail(ErrorCode::kInvalidArgument, "void region lies entirely on labeled pixels");
  }
  Dataset out = ds;
  const int64_t void_id = EnsureVoidCategory(out);
  Annotation ann;
  ann.id = NextAnnotationId(out);
  ann.image_id = image_id;
  ann.category_id = void_id;
  ann.is_void = true;
  ann.polygons = MaskToPolygons(clipped);
  out.annotations.push_back(std::move(ann));
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& KnownTransforms() {
  static const std::vector<std::string> kNames = {
      "hflip", "hshift", "pad", "gaussian_noise", "perspective", "clahe", "sharpen",
      "brightness_contrast"};
  return kNames;
}

bool IsGeometricTransform(std::string_view name) {
  return name == "hflip" || name == "hshift" || name == "pad" || name == "perspective";
}

void AugmentationPlan::Validate() const {
  for (const auto& t : transforms) {
    const auto& known = KnownTransforms();
    if (std::find(known.begin(), known.end(), t.name) == known.end()) {
      Fail(ErrorCode::kInvalidArgument, "unknown transform '" + t.name + "'");
    }
    Require(t.probability >= 0.0 && t.probability <= 1.0,
            "transform probability must lie in [0, 1]");
    Require(t.params.is_object(), "transform params must be an object");
  }
  Require(image_interpolation == "bilinear" || image_interpolation == "nearest",
          "image_interpolation must be 'bilinear' or 'nearest'");
}

AugmentationPlan ParseAugmentationPlan(std::string_view document) {
  AugmentationPlan plan;
  try {
    const json j = json::parse(document);
    plan.seed = j.value("seed", uint64_t{42});
    plan.image_interpolation = j.value("image_interpolation", "bilinear");
    for (const auto& t : j.at("transforms")) {
      TransformSpec spec;
      spec.name = t.at("name").get<std::string>();
      spec.probability = t.value("p", 1.0);
      spec.params = t.value("params", json::object());
      plan.transforms.push_back(std::move(spec));
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("augmentation plan: ") + e.what());
  }
  plan.Validate();
  return plan;
}

std::string WriteAugmentationPlan(const AugmentationPlan& plan) {
  json transforms = json::array();
  for (const auto& t : plan.transforms) {
    transforms.push_back({{"name", t.name}, {"p", t.probability}, {"params", t.params}});
  }
  json j = {{"seed", plan.seed},
            {"image_interpolation", plan.image_interpolation},
            {"transforms", std::move(transforms)}};
  return j.dump(2) + "\n";
}

namespace {

// Source coordinate for every output pixel; invalid pixels are filled with 0.
struct CoordMap {
  int out_h = 0;
  int out_w = 0;
  std::vector<double> src_r;
  std::vector<double> src_c;
  std::vector<uint8_t> valid;

  CoordMap(int h, int w)
      : out_h(h), out_w(w), src_r(static_cast<size_t>(h) * w), src_c(src_r.size()),
        valid(src_r.size(), 0) {}
};

int Reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

int NearestIndex(double v) { return static_cast<int>(std::floor(v + 0.5)); }

void FinalizeValidity(CoordMap& map, int in_h, int in_w) {
  for (size_t i = 0; i < map.valid.size(); ++i) {
    const int r = NearestIndex(map.src_r[i]);
    const int c = NearestIndex(map.src_c[i]);
    map.valid[i] = (r >= 0 && r < in_h && c >= 0 && c < in_w) ? 1 : 0;
  }
}

ImageTensor WarpImage(const ImageTensor& img, const CoordMap& map, bool nearest) {
  ImageTensor out(img.channels(), map.out_h, map.out_w, img.range(), 0.0f);
  const int h = img.height();
  const int w = img.width();
  for (int ch = 0; ch < img.channels(); ++ch) {
    for (int r = 0; r < map.out_h; ++r) {
      for (int c = 0; c < map.out_w; ++c) {
        const size_t i = static_cast<size_t>(r) * map.out_w + c;
        if (!map.valid[i]) continue;
        if (nearest) {
          out.at(ch, r, c) = img.at(ch, NearestIndex(map.src_r[i]), NearestIndex(map.src_c[i]));
          continue;
        }
        const double sr = std::clamp(map.src_r[i], 0.0, static_cast<double>(h - 1));
        const double sc = std::clamp(map.src_c[i], 0.0, static_cast<double>(w - 1));
        const int r0 = static_cast<int>(std::floor(sr));
        const int c0 = static_cast<int>(std::floor(sc));
        const int r1 = std::min(r0 + 1, h - 1);
        const int c1 = std::min(c0 + 1, w - 1);
        const double fr = sr - r0;
        const double fc = sc - c0;
        const double top = img.at(ch, r0, c0) + (img.at(ch, r0, c1) - img.at(ch, r0, c0)) * fc;
        const double bot = img.at(ch, r1, c0) + (img.at(ch, r1, c1) - img.at(ch, r1, c0)) * fc;
        out.at(ch, r, c) = static_cast<float>(top + (bot - top) * fr);
      }
    }
  }
  return out;
}

BinaryMask WarpMask(const BinaryMask& mask, const CoordMap& map) {
  BinaryMask out(map.out_h, map.out_w);
  for (size_t i = 0; i < out.bits.size(); ++i) {
    if (!map.valid[i]) continue;
    out.bits[i] = mask.at(NearestIndex(map.src_r[i]), NearestIndex(map.src_c[i])) ? 1 : 0;
  }
  return out;
}

double Param(const json& params, const char* key, double fallback) {
  if (!params.contains(key)) return fallback;
  if (!params[key].is_number()) {
    Fail(ErrorCode::kInvalidArgument, std::string("transform parameter '") + key + "' must be a number");
  }
  return params[key].get<double>();
}

CoordMap BuildGeometricMap(const TransformSpec& t, int h, int w, Rng& rng) {
  if (t.name == "hflip") {
    CoordMap map(h, w);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        map.src_r[static_cast<size_t>(r) * w + c] = r;
        map.src_c[static_cast<size_t>(r) * w + c] = w - 1 - c;
      }
    }
    FinalizeValidity(map, h, w);
    return map;
  }
  if (t.name == "hshift") {
    const double frac = Param(t.params, "max_fraction", 0.1);
    Require(frac >= 0.0 && frac <= 1.0, "hshift max_fraction must lie in [0, 1]");
    const int limit = static_cast<int>(std::floor(frac * w));
    const int dx = static_cast<int>(rng.UniformRange(-limit, limit));
    CoordMap map(h, w);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        map.src_r[static_cast<size_t>(r) * w + c] = r;
        map.src_c[static_cast<size_t>(r) * w + c] = c - dx;
      }
    }
    FinalizeValidity(map, h, w);
    return map;
  }
  if (t.name == "pad") {
    const int side = std::max(h, w);
    const int top = (side - h) / 2;
    const int left = (side - w) / 2;
    CoordMap map(side, side);
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        map.src_r[static_cast<size_t>(r) * side + c] = Reflect(r - top, h);
        map.src_c[static_cast<size_t>(r) * side + c] = Reflect(c - left, w);
      }
    }
    FinalizeValidity(map, h, w);
    return map;
  }
  // perspective: jitter the four corners, map output corners onto them.
  const double jitter = Param(t.params, "jitter", 0.05);
  Require(jitter >= 0.0 && jitter < 0.5, "perspective jitter must lie in [0, 0.5)");
  const float xs[4] = {0.0f, static_cast<float>(w - 1), static_cast<float>(w - 1), 0.0f};
  const float ys[4] = {0.0f, 0.0f, static_cast<float>(h - 1), static_cast<float>(h - 1)};
  std::vector<cv::Point2f> dst, src;
  for (int k = 0; k < 4; ++k) {
    dst.emplace_back(xs[k], ys[k]);
    const double jx = rng.Uniform(-jitter, jitter) * w;
    const double jy = rng.Uniform(-jitter, jitter) * h;
    src.emplace_back(static_cast<float>(xs[k] + jx), static_cast<float>(ys[k] + jy));
  }
  CoordMap map(h, w);
  if (w < 2 || h < 2) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        map.src_r[static_cast<size_t>(r) * w + c] = r;
        map.src_c[static_cast<size_t>(r) * w + c] = c;
      }
    }
    FinalizeValidity(map, h, w);
    return map;
  }
  const cv::Mat hom = cv::getPerspectiveTransform(dst, src);
  const double* m = hom.ptr<double>(0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double z = m[6] * c + m[7] * r + m[8];
      map.src_c[static_cast<size_t>(r) * w + c] = (m[0] * c + m[1] * r + m[2]) / z;
      map.src_r[static_cast<size_t>(r) * w + c] = (m[3] * c + m[4] * r + m[5]) / z;
    }
  }
  FinalizeValidity(map, h, w);
  return map;
}

float RangeMax(const ImageTensor& img) {
  Require(img.range() != RangeTag::kNormalized,
          "augmentation works on raw255 or unit images, not normalized ones");
  return img.range() == RangeTag::kRaw255 ? 255.0f : 1.0f;
}

void ClampImage(ImageTensor& img) {
  const float hi = RangeMax(img);
  for (float& v : img.data()) v = std::clamp(v, 0.0f, hi);
}

void ApplyPhotometric(const TransformSpec& t, ImageTensor& img, Rng& rng) {
  const float scale = RangeMax(img);
  if (t.name == "gaussian_noise") {
    const double sigma = Param(t.params, "sigma", 0.02) * scale;
    Require(sigma >= 0.0, "noise sigma must be >= 0");
    for (float& v : img.data()) v = static_cast<float>(v + sigma * rng.Normal());
  } else if (t.name == "brightness_contrast") {
    const double b = Param(t.params, "brightness", 0.2);
    const double c = Param(t.params, "contrast", 0.2);
    const double alpha = 1.0 + rng.Uniform(-c, c);
    const double beta = rng.Uniform(-b, b) * scale;
    for (float& v : img.data()) v = static_cast<float>(alpha * v + beta);
  } else if (t.name == "sharpen") {
    const double amount = Param(t.params, "amount", 0.5);
    const double sigma = Param(t.params, "sigma", 1.0);
    const ImageTensor blurred = GaussianBlur(img, sigma);
    for (size_t i = 0; i < img.data().size(); ++i) {
      img.data()[i] =
          static_cast<float>(img.data()[i] + amount * (img.data()[i] - blurred.data()[i]));
    }
  } else if (t.name == "clahe") {
    const double clip = Param(t.params, "clip_limit", 2.0);
    const int tiles = static_cast<int>(Param(t.params, "tiles", 8));
    Require(tiles >= 1 && clip > 0.0, "CLAHE needs tiles >= 1 and clip_limit > 0");
    auto clahe = cv::createCLAHE(clip, cv::Size(tiles, tiles));
    const float to8 = 255.0f / scale;
    for (int ch = 0; ch < img.channels(); ++ch) {
      cv::Mat plane(img.height(), img.width(), CV_8UC1);
      for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
          plane.at<uint8_t>(r, c) =
              static_cast<uint8_t>(std::clamp(std::round(img.at(ch, r, c) * to8), 0.0f, 255.0f));
        }
      }
      cv::Mat eq;
      clahe->apply(plane, eq);
      for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) img.at(ch, r, c) = eq.at<uint8_t>(r, c) / to8;
      }
    }
  }
  ClampImage(img);
}

}  // namespace

AugmentedSample ApplyAugmentationPipeline(const ImageTensor& img, const MaskSet& masks,
                                          const AugmentationPlan& plan, int64_t sample_id) {
  plan.Validate();
  for (const auto& [id, mask] : masks) {
    if (mask.height != img.height() || mask.width != img.width()) {
      Fail(ErrorCode::kInvalidArgument,
           "mask for category " + std::to_string(id) + " does not match the image size");
    }
  }
  Rng rng(plan.seed ^ static_cast<uint64_t>(sample_id));
  AugmentedSample out{img, masks, {}};
  const bool nearest = plan.image_interpolation == "nearest";
  for (const TransformSpec& t : plan.transforms) {
    // The gate draw happens for every transform so later draws do not
    // depend on earlier outcomes.
    const double gate = rng.Uniform01();
    if (!(gate < t.probability)) continue;
    if (IsGeometricTransform(t.name)) {
      const CoordMap map = BuildGeometricMap(t, out.image.height(), out.image.width(), rng);
      out.image = WarpImage(out.image, map, nearest);
      for (auto& [id, mask] : out.masks) mask = WarpMask(mask, map);
    } else {
      ApplyPhotometric(t, out.image, rng);
    }
    out.applied.push_back(t.name);
  }
  return out;
}

Dataset AugmentDatasetImages(
    const Dataset& ds, const AugmentationPlan& plan, const std::filesystem::path& out_dir,
    const std::function<ImageTensor(const Dataset&, const ImageInfo&)>& loader, int jobs) {
  plan.Validate();
  std::vector<ImageInfo> images = ds.images;
  std::sort(images.begin(), images.end(),
            [](const ImageInfo& a, const ImageInfo& b) { return a.id < b.id; });
  const auto void_id = ds.VoidCategoryId();

  std::vector<ImageInfo> new_infos(images.size());
  std::vector<MaskSet> new_masks(images.size());
  ParallelFor(static_cast<int64_t>(images.size()), jobs, [&](int64_t i) {
    const ImageInfo& info = images[i];
    MaskSet masks;
    for (const Category& cat : ds.categories) {
      masks[cat.id] = (void_id && cat.id == *void_id) ? BuildVoidMask(ds, info.id)
                                                      : BuildCategoryMask(ds, info.id, cat.id);
    }
    const AugmentedSample aug = ApplyAugmentationPipeline(loader(ds, info), masks, plan, info.id);
    const std::string name =
        "images/" + std::filesystem::path(info.file_name).stem().string() + "_aug.png";
    SaveImage(out_dir / name, aug.image);
    new_infos[i] = {info.id, name, aug.image.width(), aug.image.height()};
    new_masks[i] = aug.masks;
  });

  Dataset out;
  out.image_root = out_dir;
  out.categories = ds.categories;
  out.images = new_infos;
  int64_t next_id = 1;
  for (size_t i = 0; i < images.size(); ++i) {
    for (const auto& [cat_id, mask] : new_masks[i]) {
      if (mask.Empty()) continue;
      Annotation ann;
      ann.id = next_id++;
      ann.image_id = new_infos[i].id;
      ann.category_id = cat_id;
      ann.is_void = void_id && cat_id == *void_id;
      ann.polygons = MaskToPolygons(mask);
      out.annotations.push_back(std::move(ann));
    }
  }
  out.Validate();
  return out;
}

}  // namespace xedge

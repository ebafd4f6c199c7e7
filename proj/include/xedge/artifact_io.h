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
#ifndef XEDGE_ARTIFACT_IO_H_
#define XEDGE_ARTIFACT_IO_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "xedge/imaging.h"

namespace xedge {

std::string ReadFile(const std::filesystem::path& path);
// Writes through a temporary file and renames into place.
void WriteFile(const std::filesystem::path& path, std::string_view bytes);

std::string Base64Encode(std::string_view bytes);
std::string Base64Decode(std::string_view text);
std::string Sha256Hex(std::string_view bytes);

// 8-bit PNG codecs. Images are encoded from raw255 or unit range; channel
// count 1 or 3 (RGB order).
std::string EncodePng(const ImageTensor& img);
ImageTensor DecodePng(std::string_view bytes);
std::string EncodeMaskPng(const BinaryMask& mask);
// Min-max normalized grayscale preview of a saliency map.
std::string EncodeSaliencyPreviewPng(const SaliencyMap& sal);
// Reads width/height of a PNG without decoding pixels; throws on garbage.
void PngDimensions(std::string_view bytes, int* height, int* width);

// Loads any image format OpenCV reads as a raw255 RGB tensor.
ImageTensor LoadImage(const std::filesystem::path& path);
void SaveImage(const std::filesystem::path& path, const ImageTensor& img);

// Integer label image (8- or 16-bit single channel PNG) as row-major labels.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<int32_t> labels;
};
LabelMap LoadLabelMap(const std::filesystem::path& path);
void SaveLabelMap(const std::filesystem::path& path, const LabelMap& map);

// On-disk saliency artifact: `<stem>.f32` holds little-endian float32
// values in row-major order, `<stem>.json` the sidecar, `<stem>.png` the
// grayscale preview.
struct SaliencySidecar {
  int category = 0;
  int height = 0;
  int width = 0;
  std::string method;
  uint64_t seed = 0;
  std::string model_id;
  std::string config_digest;
};

std::string EncodeSaliencyRaw(const SaliencyMap& sal);
SaliencyMap DecodeSaliencyRaw(std::string_view bytes, int category, int height, int width);
std::string SidecarJson(const SaliencySidecar& sidecar);
SaliencySidecar ParseSidecarJson(std::string_view text);

void WriteSaliencyArtifact(const std::filesystem::path& stem, const SaliencyMap& sal,
                           const SaliencySidecar& sidecar);
SaliencyMap ReadSaliencyArtifact(const std::filesystem::path& stem,
                                 SaliencySidecar* sidecar = nullptr);

}  // namespace xedge

#endif  // XEDGE_ARTIFACT_IO_H_

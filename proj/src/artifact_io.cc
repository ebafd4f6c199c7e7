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
#include "xedge/artifact_io.h"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "xedge/error.h"

namespace xedge {

namespace fs = std::filesystem;
using nlohmann::json;

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorCode::kIo, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) Fail(ErrorCode::kIo, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string Base64Encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(n);
  return out;
}

std::string Base64Decode(std::string_view text) {
  if (text.size() % 4 != 0) Fail(ErrorCode::kParse, "base64 length is not a multiple of 4");
  std::string out(3 * (text.size() / 4), '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) Fail(ErrorCode::kParse, "invalid base64");
  // EVP_DecodeBlock keeps the bytes produced by '=' padding.
  size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(n - pad);
  return out;
}

std::string Sha256Hex(std::string_view bytes) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), digest);
  static const char* kHex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 15]);
  }
  return out;
}

namespace {

cv::Mat ToMat8U(const ImageTensor& img) {
  Require(img.channels() == 1 || img.channels() == 3, "PNG encoding needs 1 or 3 channels");
  Require(img.range() != RangeTag::kNormalized, "cannot encode a normalized image as PNG");
  const float scale = img.range() == RangeTag::kUnit ? 255.0f : 1.0f;
  cv::Mat mat(img.height(), img.width(), img.channels() == 1 ? CV_8UC1 : CV_8UC3);
  for (int r = 0; r < img.height(); ++r) {
    auto* row = mat.ptr<uint8_t>(r);
    for (int c = 0; c < img.width(); ++c) {
      for (int ch = 0; ch < img.channels(); ++ch) {
        // OpenCV stores BGR.
        const int dst_ch = img.channels() == 3 ? 2 - ch : 0;
        const float v = std::round(img.at(ch, r, c) * scale);
        row[c * img.channels() + dst_ch] = static_cast<uint8_t>(std::clamp(v, 0.0f, 255.0f));
      }
    }
  }
  return mat;
}

ImageTensor FromMat8U(const cv::Mat& mat) {
  cv::Mat rgb;
  if (mat.channels() == 1) {
    cv::cvtColor(mat, rgb, cv::COLOR_GRAY2RGB);
  } else if (mat.channels() == 4) {
    cv::cvtColor(mat, rgb, cv::COLOR_BGRA2RGB);
  } else {
    cv::cvtColor(mat, rgb, cv::COLOR_BGR2RGB);
  }
  if (rgb.depth() != CV_8U) rgb.convertTo(rgb, CV_8U, 1.0 / 257.0);
  ImageTensor img(3, rgb.rows, rgb.cols, RangeTag::kRaw255);
  for (int r = 0; r < rgb.rows; ++r) {
    const auto* row = rgb.ptr<uint8_t>(r);
    for (int c = 0; c < rgb.cols; ++c) {
      for (int ch = 0; ch < 3; ++ch) img.at(ch, r, c) = row[c * 3 + ch];
    }
  }
  return img;
}

std::string EncodeMat(const cv::Mat& mat) {
  std::vector<uint8_t> buf;
  // Fixed compression level keeps output bytes stable.
  if (!cv::imencode(".png", mat, buf, {cv::IMWRITE_PNG_COMPRESSION, 6})) {
    Fail(ErrorCode::kIo, "PNG encoding failed");
  }
  return std::string(buf.begin(), buf.end());
}

}  // namespace

std::string EncodePng(const ImageTensor& img) { return EncodeMat(ToMat8U(img)); }

ImageTensor DecodePng(std::string_view bytes) {
  std::vector<uint8_t> buf(bytes.begin(), bytes.end());
  cv::Mat mat = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
  if (mat.empty()) Fail(ErrorCode::kParse, "image bytes are not a decodable image");
  return FromMat8U(mat);
}

std::string EncodeMaskPng(const BinaryMask& mask) {
  cv::Mat mat(mask.height, mask.width, CV_8UC1);
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) mat.at<uint8_t>(r, c) = mask.at(r, c) ? 255 : 0;
  }
  return EncodeMat(mat);
}

std::string EncodeSaliencyPreviewPng(const SaliencyMap& sal) {
  const SaliencyMap norm = MinMaxNormalize(sal);
  cv::Mat mat(sal.height, sal.width, CV_8UC1);
  for (int r = 0; r < sal.height; ++r) {
    for (int c = 0; c < sal.width; ++c) {
      mat.at<uint8_t>(r, c) = static_cast<uint8_t>(std::lround(norm.at(r, c) * 255.0f));
    }
  }
  return EncodeMat(mat);
}

void PngDimensions(std::string_view bytes, int* height, int* width) {
  static constexpr unsigned char kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 24 || std::memcmp(bytes.data(), kSignature, 8) != 0 ||
      bytes.substr(12, 4) != "IHDR") {
    Fail(ErrorCode::kParse, "not a PNG image");
  }
  auto be32 = [&](size_t off) {
    return (static_cast<uint32_t>(static_cast<unsigned char>(bytes[off])) << 24) |
           (static_cast<uint32_t>(static_cast<unsigned char>(bytes[off + 1])) << 16) |
           (static_cast<uint32_t>(static_cast<unsigned char>(bytes[off + 2])) << 8) |
           static_cast<uint32_t>(static_cast<unsigned char>(bytes[off + 3]));
  };
  *width = static_cast<int>(be32(16));
  *height = static_cast<int>(be32(20));
}

ImageTensor LoadImage(const fs::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) Fail(ErrorCode::kIo, "cannot read image " + path.string());
  return FromMat8U(mat);
}

void SaveImage(const fs::path& path, const ImageTensor& img) { WriteFile(path, EncodePng(img)); }

LabelMap LoadLabelMap(const fs::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) Fail(ErrorCode::kIo, "cannot read label map " + path.string());
  if (mat.channels() != 1) Fail(ErrorCode::kParse, "label map must be single-channel");
  cv::Mat as_int;
  mat.convertTo(as_int, CV_32S);
  LabelMap out{mat.rows, mat.cols, {}};
  out.labels.reserve(static_cast<size_t>(mat.rows) * mat.cols);
  for (int r = 0; r < mat.rows; ++r) {
    for (int c = 0; c < mat.cols; ++c) out.labels.push_back(as_int.at<int32_t>(r, c));
  }
  return out;
}

void SaveLabelMap(const fs::path& path, const LabelMap& map) {
  cv::Mat mat(map.height, map.width, CV_16UC1);
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const int32_t v = map.labels[static_cast<size_t>(r) * map.width + c];
      Require(v >= 0 && v <= 65535, "label out of 16-bit range");
      mat.at<uint16_t>(r, c) = static_cast<uint16_t>(v);
    }
  }
  WriteFile(path, EncodeMat(mat));
}

std::string EncodeSaliencyRaw(const SaliencyMap& sal) {
  std::string out(sal.values.size() * 4, '\0');
  for (size_t i = 0; i < sal.values.size(); ++i) {
    uint32_t bits = std::bit_cast<uint32_t>(sal.values[i]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    std::memcpy(out.data() + 4 * i, &bits, 4);
  }
  return out;
}

SaliencyMap DecodeSaliencyRaw(std::string_view bytes, int category, int height, int width) {
  if (bytes.size() != static_cast<size_t>(height) * width * 4) {
    Fail(ErrorCode::kParse, "saliency artifact has " + std::to_string(bytes.size()) +
                                " bytes, expected " + std::to_string(height * width * 4));
  }
  std::vector<float> values(static_cast<size_t>(height) * width);
  for (size_t i = 0; i < values.size(); ++i) {
    uint32_t bits;
    std::memcpy(&bits, bytes.data() + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    values[i] = std::bit_cast<float>(bits);
  }
  return SaliencyMap(category, height, width, std::move(values));
}

std::string SidecarJson(const SaliencySidecar& s) {
  json j = {{"category", s.category}, {"height", s.height}, {"width", s.width},
            {"method", s.method},     {"seed", s.seed},     {"model_id", s.model_id}};
  if (!s.config_digest.empty()) j["config_digest"] = s.config_digest;
  return j.dump(2) + "\n";
}

SaliencySidecar ParseSidecarJson(std::string_view text) {
  try {
    const json j = json::parse(text);
    SaliencySidecar s;
    s.category = j.at("category").get<int>();
    s.height = j.at("height").get<int>();
    s.width = j.at("width").get<int>();
    s.method = j.at("method").get<std::string>();
    s.seed = j.at("seed").get<uint64_t>();
    s.model_id = j.at("model_id").get<std::string>();
    s.config_digest = j.value("config_digest", "");
    return s;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("saliency sidecar: ") + e.what());
  }
}

void WriteSaliencyArtifact(const fs::path& stem, const SaliencyMap& sal,
                           const SaliencySidecar& sidecar) {
  WriteFile(stem.string() + ".f32", EncodeSaliencyRaw(sal));
  WriteFile(stem.string() + ".json", SidecarJson(sidecar));
  WriteFile(stem.string() + ".png", EncodeSaliencyPreviewPng(sal));
}

SaliencyMap ReadSaliencyArtifact(const fs::path& stem, SaliencySidecar* sidecar) {
  const SaliencySidecar meta = ParseSidecarJson(ReadFile(stem.string() + ".json"));
  if (sidecar) *sidecar = meta;
  return DecodeSaliencyRaw(ReadFile(stem.string() + ".f32"), meta.category, meta.height,
                           meta.width);
}

}  // namespace xedge

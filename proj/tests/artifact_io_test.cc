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

#include <gtest/gtest.h>

#include "test_util.h"
#include "xedge/error.h"

namespace xedge {
namespace {

TEST(Base64Test, KnownVectors) {
  EXPECT_EQ(Base64Encode("hello"), "aGVsbG8=");
  EXPECT_EQ(Base64Encode(""), "");
  EXPECT_EQ(Base64Decode("aGVsbG8="), "hello");
  const std::string binary("\x00\xff\x10\x80", 4);
  EXPECT_EQ(Base64Decode(Base64Encode(binary)), binary);
}

TEST(Sha256Test, KnownVector) {
  EXPECT_EQ(Sha256Hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(PngTest, RoundTripsRaw255Image) {
  Rng rng(5);
  ImageTensor img = testing::RandomImage(rng, 3, 6, 7, RangeTag::kRaw255);
  for (float& v : img.data()) v = std::round(v);
  const std::string png = EncodePng(img);
  int h = 0, w = 0;
  PngDimensions(png, &h, &w);
  EXPECT_EQ(h, 6);
  EXPECT_EQ(w, 7);
  EXPECT_EQ(DecodePng(png), img);
}

TEST(PngTest, DimensionsRejectGarbage) {
  int h = 0, w = 0;
  EXPECT_THROW(PngDimensions("not a png", &h, &w), Error);
}

TEST(PngTest, EncodingIsDeterministic) {
  BinaryMask m(4, 4);
  m.set(1, 2);
  EXPECT_EQ(EncodeMaskPng(m), EncodeMaskPng(m));
}

TEST(LabelMapTest, RoundTripsSixteenBitLabels) {
  testing::TempDir dir;
  LabelMap map{2, 3, {0, 1, 300, 65535, 7, 2}};
  SaveLabelMap(dir.path() / "labels.png", map);
  const LabelMap back = LoadLabelMap(dir.path() / "labels.png");
  EXPECT_EQ(back.height, 2);
  EXPECT_EQ(back.width, 3);
  EXPECT_EQ(back.labels, map.labels);
}

TEST(SaliencyArtifactTest, RawAndSidecarRoundTrip) {
  testing::TempDir dir;
  SaliencyMap sal(4, 2, 2, {0.0f, 1.5f, -0.25f, 3.0f});
  SaliencySidecar side{4, 2, 2, "rise", 42, "toy:region", "abc"};
  WriteSaliencyArtifact(dir.path() / "s", sal, side);
  SaliencySidecar got;
  EXPECT_EQ(ReadSaliencyArtifact(dir.path() / "s", &got), sal);
  EXPECT_EQ(got.method, "rise");
  EXPECT_EQ(got.seed, 42u);
  EXPECT_EQ(got.config_digest, "abc");
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "s.png"));
  // Little-endian float32, row-major.
  const std::string raw = EncodeSaliencyRaw(sal);
  ASSERT_EQ(raw.size(), 16u);
  EXPECT_EQ(static_cast<unsigned char>(raw[7]), 0x3f);  // 1.5f = 0x3fc00000
  EXPECT_EQ(static_cast<unsigned char>(raw[6]), 0xc0);
}

TEST(SaliencyArtifactTest, RejectsWrongLength) {
  EXPECT_THROW(DecodeSaliencyRaw(std::string(12, '\0'), 1, 2, 2), Error);
}

TEST(FileTest, WriteThenRead) {
  testing::TempDir dir;
  WriteFile(dir.path() / "a" / "b.txt", "payload");
  EXPECT_EQ(ReadFile(dir.path() / "a" / "b.txt"), "payload");
  EXPECT_THROW(ReadFile(dir.path() / "missing"), Error);
}

}  // namespace
}  // namespace xedge

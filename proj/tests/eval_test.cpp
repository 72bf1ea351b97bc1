/*
 * Copyright 2026 The NNTC Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "nntc/eval.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nntc/error.hpp"
#include "oracles.hpp"

namespace nntc {
namespace {

std::vector<double> random_window(std::mt19937_64 &rng) {
  std::vector<double> w(64);
  for (auto &v : w) v = static_cast<double>(rng() % 256);
  return w;
}

Image random_image(std::size_t w, std::size_t h, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Image img(w, h, c);
  for (auto &v : img.pixels) v = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

TEST(Ssim, IdenticalWindowsScoreExactlyOne) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_window(rng);
    EXPECT_EQ(ssim_patch(a, a), 1.0);
  }
  const std::vector<double> c(64, 77.0);
  EXPECT_EQ(ssim_patch(c, c), 1.0);
}

TEST(Ssim, MatchesBruteForceOracle) {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_window(rng);
    auto b = random_window(rng);
    // Mix correlated pairs in so high scores are exercised too.
    if (i % 2) {
      for (std::size_t k = 0; k < 64; ++k) b[k] = std::min(255.0, a[k] + static_cast<double>(rng() % 16));
    }
    worst = std::max(worst, std::abs(ssim_patch(a, b) - testing::brute_ssim(a, b, 255.0)));
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(Ssim, SymmetricBoundedAndBelowOneForDifferentPatches) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_window(rng), b = random_window(rng);
    EXPECT_EQ(ssim_patch(a, b), ssim_patch(b, a));
    EXPECT_LT(ssim_patch(a, b), 1.0);
  }
  const std::vector<double> a(64, 1.0), b(63, 1.0);
  EXPECT_THROW(ssim_patch(a, b), Error);
}

TEST(SsimImage, CountsAndComposition) {
  const Image rgb = random_image(32, 32, 3, 4);
  const SsimReport same = ssim_image(rgb, rgb);
  EXPECT_EQ(same.raw.size(), 48u);
  EXPECT_EQ(same.mean, 1.0);
  EXPECT_EQ(ssim_image(random_image(32, 32, 1, 5), random_image(32, 32, 1, 5)).raw.size(), 16u);

  // Corrupt the green channel of tile (1, 2).
  Image bad = rgb;
  std::vector<double> wa, wb;
  for (std::size_t y = 16; y < 24; ++y) {
    for (std::size_t x = 8; x < 16; ++x) {
      wa.push_back(rgb.at(x, y, 1));
      bad.at(x, y, 1) = static_cast<std::uint8_t>(255 - rgb.at(x, y, 1) / 2);
      wb.push_back(bad.at(x, y, 1));
    }
  }
  const double s = std::clamp(testing::brute_ssim(wa, wb, 255.0), 0.0, 1.0);
  const SsimReport r = ssim_image(rgb, bad);
  EXPECT_NEAR(r.mean, (47.0 + s) / 48.0, 1e-12);
  EXPECT_NEAR(r.raw[(2 * 4 + 1) * 3 + 1], testing::brute_ssim(wa, wb, 255.0), 1e-9);
}

TEST(SsimImage, NegativeScoresKeptRawAndClampedInSummary) {
  Image a(8, 8, 1), b(8, 8, 1);
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t x = 0; x < 8; ++x) {
      a.at(x, y, 0) = static_cast<std::uint8_t>((x + y) % 2 ? 255 : 0);
      b.at(x, y, 0) = static_cast<std::uint8_t>(255 - a.at(x, y, 0));
    }
  }
  const SsimReport r = ssim_image(a, b);
  EXPECT_LT(r.raw[0], 0.0);
  EXPECT_EQ(r.clamped[0], 0.0);
  EXPECT_EQ(r.mean, 0.0);
  EXPECT_LT(r.raw_mean, 0.0);
}

TEST(SsimImage, RejectsMismatchedOrUntileableImages) {
  EXPECT_THROW(ssim_image(Image(16, 16, 3), Image(16, 16, 1)), Error);
  EXPECT_THROW(ssim_image(Image(16, 16, 3), Image(16, 8, 3)), Error);
  EXPECT_THROW(ssim_image(Image(12, 16, 3), Image(12, 16, 3)), Error);
}

TEST(Psnr, KnownValuesAndOracle) {
  EXPECT_EQ(psnr(Image(8, 8, 1, 0), Image(8, 8, 1, 255)), 0.0);
  const Image a = random_image(16, 8, 3, 6);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  const Image b = random_image(16, 8, 3, 7);
  long double se = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const long double d = static_cast<long double>(a.pixels[i]) - b.pixels[i];
    se += d * d;
  }
  const long double mse = se / a.pixels.size();
  const double oracle = static_cast<double>(10.0L * std::log10(255.0L * 255.0L / mse));
  EXPECT_NEAR(psnr(a, b), oracle, 1e-9);
  EXPECT_THROW(psnr(a, Image(8, 8, 3)), Error);
}

TEST(RdCurve, StubCodecAndRateArithmetic) {
  const std::vector<Image> images = {random_image(32, 32, 3, 8), random_image(32, 32, 3, 9)};
  const RdCodec identity = [](const Image &img, std::size_t it) {
    return RdSample{16 * it, img};
  };
  const auto pts = rd_curve(images, {9, 5, 11, 7}, identity);
  ASSERT_EQ(pts.size(), 4u);
  const double expected[] = {0.625, 0.875, 1.125, 1.375};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(pts[i].mean_ssim, 1.0);
    EXPECT_EQ(pts[i].bpp, expected[i]);
    if (i) EXPECT_GT(pts[i].bpp, pts[i - 1].bpp);
  }
  EXPECT_EQ(rd_csv(pts),
            "iterations,bpp,mean_ssim\n5,0.625,1\n7,0.875,1\n9,1.125,1\n11,1.375,1\n");
  EXPECT_THROW(rd_curve({}, {1}, identity), Error);
}

TEST(RdCurve, DefaultConvModelLadder) {
  const Model m = Model::build(ModelConfig::defaults(Variant::kConvLstm), 1);
  const auto pts = rd_curve(m, {random_image(32, 32, 3, 10)}, {5, 7, 9, 11});
  const double expected[] = {0.625, 0.875, 1.125, 1.375};
  ASSERT_EQ(pts.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(pts[i].bpp, expected[i]);
    EXPECT_GE(pts[i].mean_ssim, 0.0);
    EXPECT_LE(pts[i].mean_ssim, 1.0);
  }
}

}  // namespace
}  // namespace nntc

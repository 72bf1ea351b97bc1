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

// Exercises the shared library strictly through nntc.h.

#include "nntc/nntc.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace {

namespace fs = std::filesystem;

constexpr const char *kTinyFc =
    R"({"model": {"variant": "fc-residual", "weight_policy": "distinct", "patch_size": 8,
        "bits_per_iteration": 8, "max_iterations": 4, "channels": 1, "hidden_units": 16}})";

nntc_image *noise_image(size_t w, size_t h, size_t c, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<uint8_t> px(w * h * c);
  for (auto &v : px) v = static_cast<uint8_t>(rng() & 0xff);
  nntc_image *img = nullptr;
  EXPECT_EQ(nntc_image_create(w, h, c, px.data(), &img), NNTC_OK);
  return img;
}

fs::path scratch(const std::string &name) {
  fs::path p = fs::temp_directory_path() / ("nntc_capi_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(CApi, StatusNamesAndVersion) {
  EXPECT_STREQ(nntc_status_name(NNTC_OK), "ok");
  EXPECT_STREQ(nntc_status_name(NNTC_ERR_BAD_MAGIC), "bad_magic");
  EXPECT_STREQ(nntc_status_name(NNTC_ERR_SHORT_PAYLOAD), "short_payload");
  EXPECT_STREQ(nntc_status_name(NNTC_ERR_MODEL_MISMATCH), "model_mismatch");
  EXPECT_NE(std::strlen(nntc_version()), 0u);
  // Every status has a distinct name.
  std::vector<std::string> names;
  for (int s = NNTC_OK; s <= NNTC_ERR_INTERNAL; ++s) {
    names.emplace_back(nntc_status_name(static_cast<nntc_status>(s)));
    for (size_t i = 0; i + 1 < names.size(); ++i) EXPECT_NE(names[i], names.back());
  }
}

TEST(CApi, NullArgumentsAreRejectedNotCrashed) {
  nntc_image *img = nullptr;
  EXPECT_EQ(nntc_image_create(4, 4, 2, nullptr, &img), NNTC_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(img, nullptr);
  EXPECT_NE(std::string(nntc_last_error()).find("channels"), std::string::npos);
  EXPECT_EQ(nntc_image_create(4, 4, 1, nullptr, nullptr), NNTC_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::strlen(nntc_last_error()), 0u);
  EXPECT_EQ(nntc_encode(nullptr, nullptr, 1, nullptr), NNTC_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(nntc_stream_inspect(nullptr, 0, nullptr), NNTC_ERR_INVALID_ARGUMENT);
  nntc_image_free(nullptr);
  nntc_model_free(nullptr);
  nntc_buffer_free(nullptr);
  nntc_frames_free(nullptr);
}

TEST(CApi, BadConfigIsParseError) {
  nntc_model *m = nullptr;
  EXPECT_EQ(nntc_model_create(R"({"model": {"bitz": 3}})", 1, &m), NNTC_ERR_PARSE);
  EXPECT_NE(std::string(nntc_last_error()).find("bitz"), std::string::npos);
  EXPECT_EQ(m, nullptr);
}

TEST(CApi, EncodeDecodeProgressiveRoundTrip) {
  nntc_model *m = nullptr;
  ASSERT_EQ(nntc_model_create(kTinyFc, 7, &m), NNTC_OK);
  EXPECT_EQ(nntc_model_channels(m), 1u);
  EXPECT_EQ(nntc_model_max_iterations(m), 4u);
  nntc_image *img = noise_image(16, 8, 1, 3);

  nntc_buffer *stream = nullptr;
  ASSERT_EQ(nntc_encode(m, img, 3, &stream), NNTC_OK);
  nntc_stream_info info{};
  ASSERT_EQ(nntc_stream_inspect(nntc_buffer_data(stream), nntc_buffer_size(stream), &info), NNTC_OK);
  EXPECT_EQ(info.width, 16u);
  EXPECT_EQ(info.height, 8u);
  EXPECT_EQ(info.max_iterations, 3u);
  EXPECT_EQ(info.fingerprint, nntc_model_fingerprint(m));
  // 2 patches x 3 iterations x 8 bits.
  EXPECT_EQ(info.payload_bytes, 6u);
  EXPECT_EQ(info.header_bytes + info.payload_bytes, nntc_buffer_size(stream));
  EXPECT_DOUBLE_EQ(info.bpp, 48.0 / 128.0);

  nntc_image *out = nullptr;
  ASSERT_EQ(nntc_decode(m, nntc_buffer_data(stream), nntc_buffer_size(stream), &out), NNTC_OK);
  EXPECT_EQ(nntc_image_width(out), 16u);

  nntc_frames *frames = nullptr;
  ASSERT_EQ(nntc_decode_progressive(m, nntc_buffer_data(stream), nntc_buffer_size(stream), &frames),
            NNTC_OK);
  ASSERT_EQ(nntc_frames_count(frames), 3u);
  const nntc_image *last = nntc_frames_get(frames, 2);
  EXPECT_EQ(std::memcmp(nntc_image_pixels(last), nntc_image_pixels(out), 16 * 8), 0);
  EXPECT_EQ(nntc_frames_get(frames, 3), nullptr);

  double ssim = 0, db = 0;
  ASSERT_EQ(nntc_ssim(out, out, &ssim), NNTC_OK);
  EXPECT_EQ(ssim, 1.0);
  ASSERT_EQ(nntc_psnr(out, out, &db), NNTC_OK);
  EXPECT_TRUE(std::isinf(db));

  nntc_frames_free(frames);
  nntc_image_free(out);
  nntc_buffer_free(stream);
  nntc_image_free(img);
  nntc_model_free(m);
}

TEST(CApi, DecodeErrorsMapToStatuses) {
  nntc_model *m = nullptr, *other = nullptr;
  ASSERT_EQ(nntc_model_create(kTinyFc, 7, &m), NNTC_OK);
  ASSERT_EQ(nntc_model_create(kTinyFc, 8, &other), NNTC_OK);
  nntc_image *img = noise_image(8, 8, 1, 4);
  nntc_buffer *stream = nullptr;
  ASSERT_EQ(nntc_encode(m, img, 2, &stream), NNTC_OK);
  const uint8_t *d = nntc_buffer_data(stream);
  const size_t n = nntc_buffer_size(stream);
  nntc_image *out = nullptr;

  const char junk[] = "PNG? not a stream at all";
  EXPECT_EQ(nntc_decode(m, reinterpret_cast<const uint8_t *>(junk), sizeof junk, &out),
            NNTC_ERR_BAD_MAGIC);
  EXPECT_NE(std::string(nntc_last_error()).find("magic"), std::string::npos);
  EXPECT_EQ(nntc_decode(m, d, n - 1, &out), NNTC_ERR_SHORT_PAYLOAD);
  EXPECT_EQ(nntc_decode(other, d, n, &out), NNTC_ERR_MODEL_MISMATCH);
  std::vector<uint8_t> bumped(d, d + n);
  bumped[4] = 9;
  EXPECT_EQ(nntc_decode(m, bumped.data(), n, &out), NNTC_ERR_VERSION_MISMATCH);
  EXPECT_EQ(out, nullptr);

  nntc_buffer_free(stream);
  nntc_image_free(img);
  nntc_model_free(other);
  nntc_model_free(m);
}

TEST(CApi, NullPixelsGiveZeroImage) {
  nntc_image *img = nullptr;
  ASSERT_EQ(nntc_image_create(3, 2, 3, nullptr, &img), NNTC_OK);
  for (size_t i = 0; i < 18; ++i) EXPECT_EQ(nntc_image_pixels(img)[i], 0);
  nntc_image *gray = nullptr;
  ASSERT_EQ(nntc_image_convert(img, 1, &gray), NNTC_OK);
  EXPECT_EQ(nntc_image_channels(gray), 1u);
  nntc_image_free(gray);
  nntc_image_free(img);
}

TEST(CApi, BudgetAndDynamicEncoding) {
  nntc_model *m = nullptr;
  ASSERT_EQ(nntc_model_create(kTinyFc, 1, &m), NNTC_OK);
  nntc_image *img = noise_image(16, 16, 1, 5);
  nntc_buffer *s = nullptr;
  // 4 patches x 1 byte per iteration: 10 bytes allows 2 iterations.
  ASSERT_EQ(nntc_encode_budget(m, img, 10, &s), NNTC_OK);
  nntc_stream_info info{};
  ASSERT_EQ(nntc_stream_inspect(nntc_buffer_data(s), nntc_buffer_size(s), &info), NNTC_OK);
  EXPECT_EQ(info.payload_bytes, 8u);
  nntc_buffer_free(s);
  s = nullptr;
  EXPECT_EQ(nntc_encode_budget(m, img, 3, &s), NNTC_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(nntc_last_error()).find("minimum of 4 bytes"), std::string::npos)
      << nntc_last_error();

  ASSERT_EQ(nntc_encode_dynamic(m, img, NNTC_METRIC_PSNR, INFINITY, 1, 3, &s), NNTC_OK);
  ASSERT_EQ(nntc_stream_inspect(nntc_buffer_data(s), nntc_buffer_size(s), &info), NNTC_OK);
  EXPECT_EQ(info.dynamic, 1u);
  EXPECT_EQ(info.max_iterations, 3u);
  nntc_image *out = nullptr;
  EXPECT_EQ(nntc_decode(m, nntc_buffer_data(s), nntc_buffer_size(s), &out), NNTC_OK);
  nntc_image_free(out);
  nntc_buffer_free(s);
  nntc_image_free(img);
  nntc_model_free(m);
}

TEST(CApi, ModelSaveLoadKeepsFingerprintAndConfig) {
  const fs::path dir = scratch("model");
  nntc_model *m = nullptr, *back = nullptr;
  ASSERT_EQ(nntc_model_create(kTinyFc, 11, &m), NNTC_OK);
  const std::string path = (dir / "m.ckpt").string();
  ASSERT_EQ(nntc_model_save(m, path.c_str()), NNTC_OK);
  ASSERT_EQ(nntc_model_load(path.c_str(), &back), NNTC_OK);
  EXPECT_EQ(nntc_model_fingerprint(m), nntc_model_fingerprint(back));
  nntc_buffer *a = nullptr, *b = nullptr;
  ASSERT_EQ(nntc_model_config(m, &a), NNTC_OK);
  ASSERT_EQ(nntc_model_config(back, &b), NNTC_OK);
  EXPECT_EQ(std::string(reinterpret_cast<const char *>(nntc_buffer_data(a)), nntc_buffer_size(a)),
            std::string(reinterpret_cast<const char *>(nntc_buffer_data(b)), nntc_buffer_size(b)));
  nntc_model *none = nullptr;
  EXPECT_EQ(nntc_model_load((dir / "missing").string().c_str(), &none), NNTC_ERR_IO);
  nntc_buffer_free(a);
  nntc_buffer_free(b);
  nntc_model_free(back);
  nntc_model_free(m);
  fs::remove_all(dir);
}

TEST(CApi, PrepareTrainEvaluate) {
  const fs::path dir = scratch("train");
  fs::create_directories(dir / "src");
  for (int i = 0; i < 6; ++i) {
    nntc_image *img = noise_image(20, 20, 3, 100 + i);
    ASSERT_EQ(nntc_image_write_png(img, (dir / "src" / ("i" + std::to_string(i) + ".png")).string().c_str()),
              NNTC_OK);
    nntc_image_free(img);
  }
  nntc_image *tiny = noise_image(4, 4, 3, 99);
  ASSERT_EQ(nntc_image_write_png(tiny, (dir / "src" / "tiny.png").string().c_str()), NNTC_OK);
  nntc_image_free(tiny);
  std::ofstream((dir / "src" / "broken.png").string()) << "nope";

  nntc_prepare_report prep{};
  ASSERT_EQ(nntc_prepare_data((dir / "src").string().c_str(), (dir / "data").string().c_str(), 8, 0.5,
                              3, 1, nullptr, nullptr, &prep),
            NNTC_OK);
  EXPECT_EQ(prep.train + prep.eval, 6u);
  EXPECT_EQ(prep.rejected_small, 1u);
  EXPECT_EQ(prep.unreadable, 1u);

  const std::string cfg = (dir / "cfg.json").string();
  std::ofstream(cfg) << kTinyFc;
  const std::string ckpt = (dir / "m.ckpt").string();
  nntc_train_options o{};
  o.config_path = cfg.c_str();
  const std::string data = (dir / "data").string();
  o.data_dir = data.c_str();
  o.checkpoint_out = ckpt.c_str();
  o.steps = 3;
  o.batch_size = 2;
  nntc_train_report rep{};
  ASSERT_EQ(nntc_train(&o, nullptr, nullptr, &rep), NNTC_OK) << nntc_last_error();
  EXPECT_EQ(rep.steps_run, 3u);
  EXPECT_EQ(rep.total_steps, 3u);
  EXPECT_TRUE(std::isfinite(rep.final_loss));

  nntc_model *m = nullptr;
  ASSERT_EQ(nntc_model_load(ckpt.c_str(), &m), NNTC_OK);
  nntc_eval_report ev{};
  ASSERT_EQ(nntc_evaluate(m, (dir / "data" / "eval").string().c_str(), 2, &ev), NNTC_OK);
  EXPECT_EQ(ev.images, prep.eval);
  EXPECT_DOUBLE_EQ(ev.bpp, 0.25);
  const size_t its[] = {1, 2};
  nntc_buffer *csv = nullptr;
  ASSERT_EQ(nntc_rd_curve_csv(m, (dir / "data" / "eval").string().c_str(), its, 2, &csv), NNTC_OK);
  const std::string text(reinterpret_cast<const char *>(nntc_buffer_data(csv)), nntc_buffer_size(csv));
  EXPECT_EQ(text.rfind("iterations,bpp,mean_ssim\n1,0.125,", 0), 0u) << text;
  nntc_buffer_free(csv);
  nntc_model_free(m);

  // Missing data directory surfaces as an I/O error.
  o.data_dir = "/nonexistent/nntc";
  EXPECT_EQ(nntc_train(&o, nullptr, nullptr, &rep), NNTC_ERR_IO);
  fs::remove_all(dir);
}

}  // namespace

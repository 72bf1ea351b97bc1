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

#include "nntc/nntc.h"

#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "nntc/checkpoint.hpp"
#include "nntc/codec.hpp"
#include "nntc/config.hpp"
#include "nntc/dataset.hpp"
#include "nntc/error.hpp"
#include "nntc/eval.hpp"
#include "nntc/trainer.hpp"

struct nntc_buffer {
  std::vector<std::uint8_t> bytes;
};
struct nntc_image {
  nntc::Image image;
};
struct nntc_model {
  nntc::Model model;
};
struct nntc_frames {
  std::vector<nntc_image> frames;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
nntc_status guard(F &&body) {
  try {
    body();
    g_last_error.clear();
    return NNTC_OK;
  } catch (const nntc::Error &e) {
    g_last_error = e.what();
    return static_cast<nntc_status>(e.code());
  } catch (const std::bad_alloc &) {
    g_last_error = "out of memory";
    return NNTC_ERR_OUT_OF_MEMORY;
  } catch (const std::exception &e) {
    g_last_error = e.what();
    return NNTC_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return NNTC_ERR_INTERNAL;
  }
}

void require(const void *p, const char *what) {
  if (!p) nntc::fail(nntc::ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

nntc_buffer *to_buffer(std::vector<std::uint8_t> bytes) {
  return new nntc_buffer{std::move(bytes)};
}

nntc_buffer *to_buffer(const std::string &s) {
  return to_buffer(std::vector<std::uint8_t>(s.begin(), s.end()));
}

std::vector<std::uint8_t> view(const std::uint8_t *data, std::size_t size) {
  if (!data && size) nntc::fail(nntc::ErrorCode::kInvalidArgument, "stream data is NULL");
  return data ? std::vector<std::uint8_t>(data, data + size) : std::vector<std::uint8_t>{};
}

// Images of a directory in the model's channel layout.
std::vector<nntc::Image> load_for(const nntc::Model &model, const std::string &dir) {
  auto images = nntc::load_image_dir(dir);
  for (auto &img : images) {
    if (img.channels != model.config().channels) {
      img = nntc::convert_channels(img, model.config().channels);
    }
  }
  return images;
}

std::string read_text(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) nntc::fail(nntc::ErrorCode::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

extern "C" {

const char *nntc_status_name(nntc_status status) {
  switch (status) {
    case NNTC_OK: return "ok";
    case NNTC_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case NNTC_ERR_SHAPE_MISMATCH: return "shape_mismatch";
    case NNTC_ERR_OUT_OF_RANGE: return "out_of_range";
    case NNTC_ERR_IO: return "io";
    case NNTC_ERR_TRUNCATED: return "truncated";
    case NNTC_ERR_VERSION_MISMATCH: return "version_mismatch";
    case NNTC_ERR_CONFIG_MISMATCH: return "config_mismatch";
    case NNTC_ERR_BAD_MAGIC: return "bad_magic";
    case NNTC_ERR_MODEL_MISMATCH: return "model_mismatch";
    case NNTC_ERR_SHORT_PAYLOAD: return "short_payload";
    case NNTC_ERR_MALFORMED: return "malformed";
    case NNTC_ERR_NON_FINITE: return "non_finite";
    case NNTC_ERR_PARSE: return "parse";
    case NNTC_ERR_STATE: return "state";
    case NNTC_ERR_OUT_OF_MEMORY: return "out_of_memory";
    case NNTC_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char *nntc_last_error(void) { return g_last_error.c_str(); }

const char *nntc_version(void) { return "1.0.0"; }

const uint8_t *nntc_buffer_data(const nntc_buffer *b) { return b ? b->bytes.data() : nullptr; }
size_t nntc_buffer_size(const nntc_buffer *b) { return b ? b->bytes.size() : 0; }
void nntc_buffer_free(nntc_buffer *b) { delete b; }

nntc_status nntc_image_create(size_t width, size_t height, size_t channels, const uint8_t *pixels,
                              nntc_image **out) {
  return guard([&] {
    require(out, "out");
    if (channels != 1 && channels != 3) {
      nntc::fail(nntc::ErrorCode::kInvalidArgument, "channels must be 1 or 3");
    }
    if (width == 0 || height == 0) nntc::fail(nntc::ErrorCode::kInvalidArgument, "empty image");
    auto img = std::make_unique<nntc_image>();
    img->image = nntc::Image(width, height, channels);
    if (pixels) std::copy_n(pixels, img->image.pixels.size(), img->image.pixels.begin());
    *out = img.release();
  });
}

nntc_status nntc_image_read_png(const char *path, nntc_image **out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new nntc_image{nntc::read_png(path)};
  });
}

nntc_status nntc_image_write_png(const nntc_image *image, const char *path) {
  return guard([&] {
    require(image, "image");
    require(path, "path");
    nntc::write_png(path, image->image);
  });
}

nntc_status nntc_image_convert(const nntc_image *image, size_t channels, nntc_image **out) {
  return guard([&] {
    require(image, "image");
    require(out, "out");
    *out = new nntc_image{image->image.channels == channels
                              ? image->image
                              : nntc::convert_channels(image->image, channels)};
  });
}

size_t nntc_image_width(const nntc_image *i) { return i ? i->image.width : 0; }
size_t nntc_image_height(const nntc_image *i) { return i ? i->image.height : 0; }
size_t nntc_image_channels(const nntc_image *i) { return i ? i->image.channels : 0; }
const uint8_t *nntc_image_pixels(const nntc_image *i) {
  return i ? i->image.pixels.data() : nullptr;
}
void nntc_image_free(nntc_image *i) { delete i; }

nntc_status nntc_model_create(const char *config_json, uint64_t seed, nntc_model **out) {
  return guard([&] {
    require(out, "out");
    const nntc::RunConfig rc =
        config_json ? nntc::parse_run_config(config_json) : nntc::RunConfig{};
    *out = new nntc_model{nntc::Model::build(rc.model, seed)};
  });
}

nntc_status nntc_model_load(const char *path, nntc_model **out) {
  return guard([&] {
    require(path, "checkpoint path");
    require(out, "out");
    *out = new nntc_model{nntc::load_checkpoint(path).model};
  });
}

nntc_status nntc_model_save(const nntc_model *model, const char *path) {
  return guard([&] {
    require(model, "model");
    require(path, "checkpoint path");
    nntc::save_checkpoint(path, model->model);
  });
}

nntc_status nntc_model_config(const nntc_model *model, nntc_buffer **json) {
  return guard([&] {
    require(model, "model");
    require(json, "out");
    *json = to_buffer(nntc::model_config_to_json(model->model.config()));
  });
}

uint64_t nntc_model_fingerprint(const nntc_model *m) {
  return m ? nntc::model_fingerprint(m->model) : 0;
}
size_t nntc_model_max_iterations(const nntc_model *m) {
  return m ? m->model.config().max_iterations : 0;
}
size_t nntc_model_channels(const nntc_model *m) { return m ? m->model.config().channels : 0; }
void nntc_model_free(nntc_model *m) { delete m; }

nntc_status nntc_encode(const nntc_model *model, const nntc_image *image, size_t iterations,
                        nntc_buffer **stream) {
  return guard([&] {
    require(model, "model");
    require(image, "image");
    require(stream, "out");
    *stream = to_buffer(nntc::serialize(nntc::encode_image(model->model, image->image, iterations).stream));
  });
}

nntc_status nntc_encode_budget(const nntc_model *model, const nntc_image *image,
                               size_t payload_bytes, nntc_buffer **stream) {
  return guard([&] {
    require(model, "model");
    require(image, "image");
    require(stream, "out");
    *stream = to_buffer(
        nntc::serialize(nntc::encode_with_budget(model->model, image->image, payload_bytes).stream));
  });
}

nntc_status nntc_encode_dynamic(const nntc_model *model, const nntc_image *image,
                                nntc_metric metric, double threshold, size_t min_iterations,
                                size_t max_iterations, nntc_buffer **stream) {
  return guard([&] {
    require(model, "model");
    require(image, "image");
    require(stream, "out");
    if (metric != NNTC_METRIC_PSNR && metric != NNTC_METRIC_SSIM) {
      nntc::fail(nntc::ErrorCode::kInvalidArgument, "unknown quality metric");
    }
    const nntc::QualityTarget target{
        metric == NNTC_METRIC_PSNR ? nntc::QualityMetric::kPsnr : nntc::QualityMetric::kSsim,
        threshold, min_iterations, max_iterations};
    *stream = to_buffer(nntc::serialize(nntc::encode_dynamic(model->model, image->image, target).stream));
  });
}

nntc_status nntc_stream_inspect(const uint8_t *data, size_t size, nntc_stream_info *out) {
  return guard([&] {
    require(out, "out");
    const nntc::Bitstream s = nntc::deserialize(view(data, size));
    nntc_stream_info info{};
    info.fingerprint = s.fingerprint;
    info.width = s.width;
    info.height = s.height;
    info.patch_size = s.patch_size;
    info.bits_per_iteration = s.bits_per_iteration;
    info.dynamic = s.mode == nntc::StreamMode::kDynamic;
    info.max_iterations = static_cast<uint32_t>(s.max_iterations());
    info.payload_bytes = s.payload.size();
    info.header_bytes = size - s.payload.size();
    info.bpp = s.bpp();
    *out = info;
  });
}

nntc_status nntc_decode(const nntc_model *model, const uint8_t *data, size_t size,
                        nntc_image **out) {
  return guard([&] {
    require(model, "model");
    require(out, "out");
    *out = new nntc_image{nntc::decode_image(model->model, nntc::deserialize(view(data, size)))};
  });
}

nntc_status nntc_decode_progressive(const nntc_model *model, const uint8_t *data, size_t size,
                                    nntc_frames **out) {
  return guard([&] {
    require(model, "model");
    require(out, "out");
    auto frames = std::make_unique<nntc_frames>();
    for (auto &img : nntc::decode_progressive(model->model, nntc::deserialize(view(data, size)))) {
      frames->frames.push_back(nntc_image{std::move(img)});
    }
    *out = frames.release();
  });
}

size_t nntc_frames_count(const nntc_frames *f) { return f ? f->frames.size() : 0; }
const nntc_image *nntc_frames_get(const nntc_frames *f, size_t index) {
  return f && index < f->frames.size() ? &f->frames[index] : nullptr;
}
void nntc_frames_free(nntc_frames *f) { delete f; }

nntc_status nntc_ssim(const nntc_image *a, const nntc_image *b, double *mean) {
  return guard([&] {
    require(a, "image a");
    require(b, "image b");
    require(mean, "out");
    *mean = nntc::ssim_image(a->image, b->image).mean;
  });
}

nntc_status nntc_psnr(const nntc_image *a, const nntc_image *b, double *db) {
  return guard([&] {
    require(a, "image a");
    require(b, "image b");
    require(db, "out");
    *db = nntc::psnr(a->image, b->image);
  });
}

nntc_status nntc_evaluate(const nntc_model *model, const char *image_dir, size_t iterations,
                          nntc_eval_report *out) {
  return guard([&] {
    require(model, "model");
    require(image_dir, "image directory");
    require(out, "out");
    const auto images = load_for(model->model, image_dir);
    nntc_eval_report r{};
    double bits = 0.0, pixels = 0.0;
    for (const auto &img : images) {
      const nntc::Encoded e = nntc::encode_image(model->model, img, iterations);
      const nntc::Image decoded = nntc::decode_image(model->model, e.stream);
      r.mean_ssim += nntc::ssim_image(img, decoded).mean;
      r.mean_psnr += nntc::psnr(img, decoded);
      bits += 8.0 * static_cast<double>(e.stream.payload.size());
      pixels += static_cast<double>(img.width * img.height);
    }
    r.images = images.size();
    r.mean_ssim /= static_cast<double>(images.size());
    r.mean_psnr /= static_cast<double>(images.size());
    r.bpp = bits / pixels;
    *out = r;
  });
}

nntc_status nntc_rd_curve_csv(const nntc_model *model, const char *image_dir,
                              const size_t *iterations, size_t count, nntc_buffer **csv) {
  return guard([&] {
    require(model, "model");
    require(image_dir, "image directory");
    require(iterations, "iterations");
    require(csv, "out");
    const std::vector<std::size_t> its(iterations, iterations + count);
    *csv = to_buffer(nntc::rd_csv(nntc::rd_curve(model->model, load_for(model->model, image_dir), its)));
  });
}

nntc_status nntc_prepare_data(const char *source_dir, const char *out_dir, size_t target_size,
                              double train_fraction, uint64_t seed, size_t channels,
                              nntc_log_fn log, void *user, nntc_prepare_report *out) {
  return guard([&] {
    require(source_dir, "source directory");
    require(out_dir, "output directory");
    nntc::DatasetSpec spec;
    spec.source_dir = source_dir;
    spec.target_size = target_size;
    spec.train_fraction = train_fraction;
    spec.shuffle_seed = seed;
    spec.channels = channels;
    const nntc::Dataset data = nntc::ingest_images(spec, [&](const std::string &line) {
      if (log) log(line.c_str(), user);
    });
    nntc::save_dataset(data, out_dir);
    if (out) *out = {data.train.size(), data.eval.size(), data.rejected_small, data.unreadable};
  });
}

nntc_status nntc_train(const nntc_train_options *o, nntc_log_fn log, void *user,
                       nntc_train_report *out) {
  return guard([&] {
    require(o, "options");
    require(o->data_dir, "data directory");
    require(o->checkpoint_out, "checkpoint path");
    nntc::RunConfig rc;
    if (o->config_path) rc = nntc::parse_run_config(read_text(o->config_path), o->config_path);
    if (o->learning_rate > 0.0) rc.train.learning_rate = o->learning_rate;
    if (o->steps) rc.train.steps = o->steps;
    if (o->batch_size) rc.train.batch_size = o->batch_size;
    if (o->n_iterations) rc.train.n_iterations = o->n_iterations;
    if (o->time_budget_seconds > 0.0) rc.train.time_budget_seconds = o->time_budget_seconds;
    if (o->has_seed) rc.train.seed = o->seed;
    rc.train.validate(rc.model);
    if (o->config_dump_out) {
      std::ofstream dump(o->config_dump_out, std::ios::binary | std::ios::trunc);
      dump << nntc::dump_run_config(rc);
      if (!dump) nntc::fail(nntc::ErrorCode::kIo, std::string("cannot write ") + o->config_dump_out);
    }

    nntc::Model model = nntc::Model::build(rc.model, rc.train.seed);
    nntc::AdamState adam;
    if (o->resume_from) {
      nntc::Checkpoint ck = nntc::load_checkpoint(o->resume_from, rc.model);
      model = std::move(ck.model);
      if (ck.adam) adam = std::move(*ck.adam);
    }
    // A prepared dataset directory holds train/ and eval/; use train/.
    std::string dir = o->data_dir;
    if (std::filesystem::is_directory(std::filesystem::path(dir) / "train")) dir += "/train";
    const nntc::PatchSet data(load_for(model, dir), rc.model);

    const auto summary = nntc::train(model, adam, data, rc.train, [&](const nntc::TrainLogRecord &r) {
      if (log) log(nntc::format_log(r).c_str(), user);
    });
    nntc::save_checkpoint(o->checkpoint_out, model, &adam);
    if (out) {
      nntc_train_report r{};
      r.steps_run = summary.steps_run;
      r.total_steps = adam.step;
      r.final_loss = summary.losses.empty() ? std::numeric_limits<double>::quiet_NaN()
                                            : summary.losses.back();
      r.seconds = summary.seconds;
      r.stopped_by_time = summary.stopped_by_time;
      *out = r;
    }
  });
}

}  // extern "C"

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

/*
 * Stable C interface to the NNTC codec library.
 *
 * Conventions:
 *  - Every fallible call returns nntc_status. On failure, nntc_last_error()
 *    holds a one-line message for the calling thread until its next call.
 *  - Objects are opaque and released with their *_free function; passing
 *    NULL to a *_free function is a no-op.
 *  - Output pointers are written only on success.
 */

#ifndef NNTC_H
#define NNTC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define NNTC_API __declspec(dllexport)
#else
#define NNTC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nntc_status {
  NNTC_OK = 0,
  NNTC_ERR_INVALID_ARGUMENT = 1,
  NNTC_ERR_SHAPE_MISMATCH = 2,
  NNTC_ERR_OUT_OF_RANGE = 3,
  NNTC_ERR_IO = 4,
  NNTC_ERR_TRUNCATED = 5,
  NNTC_ERR_VERSION_MISMATCH = 6,
  NNTC_ERR_CONFIG_MISMATCH = 7,
  NNTC_ERR_BAD_MAGIC = 8,
  NNTC_ERR_MODEL_MISMATCH = 9,
  NNTC_ERR_SHORT_PAYLOAD = 10,
  NNTC_ERR_MALFORMED = 11,
  NNTC_ERR_NON_FINITE = 12,
  NNTC_ERR_PARSE = 13,
  NNTC_ERR_STATE = 14,
  NNTC_ERR_OUT_OF_MEMORY = 15,
  NNTC_ERR_INTERNAL = 16
} nntc_status;

/* snake_case name of a status, e.g. "bad_magic". */
NNTC_API const char *nntc_status_name(nntc_status status);
NNTC_API const char *nntc_last_error(void);
NNTC_API const char *nntc_version(void);

typedef void (*nntc_log_fn)(const char *line, void *user);

/* ---- byte buffers ---- */

typedef struct nntc_buffer nntc_buffer;
NNTC_API const uint8_t *nntc_buffer_data(const nntc_buffer *buffer);
NNTC_API size_t nntc_buffer_size(const nntc_buffer *buffer);
NNTC_API void nntc_buffer_free(nntc_buffer *buffer);

/* ---- images: 8-bit, interleaved channels (1 = gray, 3 = RGB) ---- */
/* pixels may be NULL for a zero-filled image. */

typedef struct nntc_image nntc_image;
NNTC_API nntc_status nntc_image_create(size_t width, size_t height, size_t channels,
                                       const uint8_t *pixels, nntc_image **out);
NNTC_API nntc_status nntc_image_read_png(const char *path, nntc_image **out);
NNTC_API nntc_status nntc_image_write_png(const nntc_image *image, const char *path);
/* Gray <-> RGB (luma 0.299, 0.587, 0.114); a copy when channels already match. */
NNTC_API nntc_status nntc_image_convert(const nntc_image *image, size_t channels,
                                        nntc_image **out);
NNTC_API size_t nntc_image_width(const nntc_image *image);
NNTC_API size_t nntc_image_height(const nntc_image *image);
NNTC_API size_t nntc_image_channels(const nntc_image *image);
NNTC_API const uint8_t *nntc_image_pixels(const nntc_image *image);
NNTC_API void nntc_image_free(nntc_image *image);

/* ---- models ---- */

typedef struct nntc_model nntc_model;
/* config_json: {"model": {...}} document or NULL for the default model. */
NNTC_API nntc_status nntc_model_create(const char *config_json, uint64_t seed, nntc_model **out);
NNTC_API nntc_status nntc_model_load(const char *checkpoint_path, nntc_model **out);
NNTC_API nntc_status nntc_model_save(const nntc_model *model, const char *checkpoint_path);
/* Compact JSON of the model configuration. */
NNTC_API nntc_status nntc_model_config(const nntc_model *model, nntc_buffer **json);
NNTC_API uint64_t nntc_model_fingerprint(const nntc_model *model);
NNTC_API size_t nntc_model_max_iterations(const nntc_model *model);
NNTC_API size_t nntc_model_channels(const nntc_model *model);
NNTC_API void nntc_model_free(nntc_model *model);

/* ---- codec ---- */

typedef enum nntc_metric { NNTC_METRIC_PSNR = 0, NNTC_METRIC_SSIM = 1 } nntc_metric;

NNTC_API nntc_status nntc_encode(const nntc_model *model, const nntc_image *image,
                                 size_t iterations, nntc_buffer **stream);
/* Largest uniform iteration count whose payload fits payload_bytes. */
NNTC_API nntc_status nntc_encode_budget(const nntc_model *model, const nntc_image *image,
                                        size_t payload_bytes, nntc_buffer **stream);
NNTC_API nntc_status nntc_encode_dynamic(const nntc_model *model, const nntc_image *image,
                                         nntc_metric metric, double threshold,
                                         size_t min_iterations, size_t max_iterations,
                                         nntc_buffer **stream);

typedef struct nntc_stream_info {
  uint64_t fingerprint;
  uint32_t width;
  uint32_t height;
  uint32_t patch_size;
  uint32_t bits_per_iteration;
  uint32_t dynamic; /* 0 uniform, 1 dynamic */
  uint32_t max_iterations;
  size_t header_bytes;
  size_t payload_bytes;
  double bpp; /* payload bits per pixel */
} nntc_stream_info;
NNTC_API nntc_status nntc_stream_inspect(const uint8_t *data, size_t size, nntc_stream_info *out);

NNTC_API nntc_status nntc_decode(const nntc_model *model, const uint8_t *data, size_t size,
                                 nntc_image **out);

typedef struct nntc_frames nntc_frames;
/* One image per iteration prefix. */
NNTC_API nntc_status nntc_decode_progressive(const nntc_model *model, const uint8_t *data,
                                             size_t size, nntc_frames **out);
NNTC_API size_t nntc_frames_count(const nntc_frames *frames);
/* Borrowed; valid until nntc_frames_free. */
NNTC_API const nntc_image *nntc_frames_get(const nntc_frames *frames, size_t index);
NNTC_API void nntc_frames_free(nntc_frames *frames);

/* ---- evaluation ---- */

/* Mean clamped SSIM over 8x8 tiles and channels. */
NNTC_API nntc_status nntc_ssim(const nntc_image *a, const nntc_image *b, double *mean);
/* dB with peak 255; +infinity for identical images. */
NNTC_API nntc_status nntc_psnr(const nntc_image *a, const nntc_image *b, double *db);

typedef struct nntc_eval_report {
  size_t images;
  double mean_ssim;
  double mean_psnr; /* +infinity if any image is reproduced exactly */
  double bpp;
} nntc_eval_report;
/* Encodes every PNG in image_dir at a uniform iteration count. */
NNTC_API nntc_status nntc_evaluate(const nntc_model *model, const char *image_dir,
                                   size_t iterations, nntc_eval_report *out);
/* CSV "iterations,bpp,mean_ssim" over every PNG in image_dir. */
NNTC_API nntc_status nntc_rd_curve_csv(const nntc_model *model, const char *image_dir,
                                       const size_t *iterations, size_t count,
                                       nntc_buffer **csv);

/* ---- data preparation and training ---- */

typedef struct nntc_prepare_report {
  size_t train;
  size_t eval;
  size_t rejected_small;
  size_t unreadable;
} nntc_prepare_report;
/* Writes out_dir/train and out_dir/eval. */
NNTC_API nntc_status nntc_prepare_data(const char *source_dir, const char *out_dir,
                                       size_t target_size, double train_fraction, uint64_t seed,
                                       size_t channels, nntc_log_fn log, void *user,
                                       nntc_prepare_report *out);

typedef struct nntc_train_options {
  const char *config_path;      /* NULL: built-in defaults */
  const char *data_dir;         /* directory of equally sized PNGs */
  const char *checkpoint_out;   /* written with optimizer state */
  const char *resume_from;      /* NULL or a checkpoint to continue */
  const char *config_dump_out;  /* NULL or path for the effective config */
  /* Overrides; zero leaves the configured value. */
  double learning_rate;
  size_t steps;
  size_t batch_size;
  size_t n_iterations;
  double time_budget_seconds;
  int has_seed;
  uint64_t seed;
} nntc_train_options;

typedef struct nntc_train_report {
  size_t steps_run;
  uint64_t total_steps; /* including steps of a resumed checkpoint */
  double final_loss;
  double seconds;
  int stopped_by_time;
} nntc_train_report;
NNTC_API nntc_status nntc_train(const nntc_train_options *options, nntc_log_fn log, void *user,
                                nntc_train_report *out);

#ifdef __cplusplus
}
#endif

#endif /* NNTC_H */

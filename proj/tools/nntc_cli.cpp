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

// Command-line front end. Talks to the library only through nntc.h.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nntc/nntc.h"

namespace {

// Domain failure: one line on stderr, exit status 1.
struct Failure {
  nntc_status status;
  std::string message;
};

void check(nntc_status s) {
  if (s != NNTC_OK) throw Failure{s, nntc_last_error()};
}

[[noreturn]] void io_failure(const std::string &message) { throw Failure{NNTC_ERR_IO, message}; }

template <typename T, void (*Free)(T *)>
struct Deleter {
  void operator()(T *p) const { Free(p); }
};
using ModelPtr = std::unique_ptr<nntc_model, Deleter<nntc_model, nntc_model_free>>;
using ImagePtr = std::unique_ptr<nntc_image, Deleter<nntc_image, nntc_image_free>>;
using BufferPtr = std::unique_ptr<nntc_buffer, Deleter<nntc_buffer, nntc_buffer_free>>;
using FramesPtr = std::unique_ptr<nntc_frames, Deleter<nntc_frames, nntc_frames_free>>;

ModelPtr load_model(const std::string &path) {
  nntc_model *m = nullptr;
  check(nntc_model_load(path.c_str(), &m));
  return ModelPtr(m);
}

ImagePtr load_image(const std::string &path) {
  nntc_image *img = nullptr;
  check(nntc_image_read_png(path.c_str(), &img));
  return ImagePtr(img);
}

std::vector<std::uint8_t> read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_failure("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string &path, const std::uint8_t *data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char *>(data), static_cast<std::streamsize>(size));
  if (!out) io_failure("cannot write " + path);
}

void print_line(const char *line, void *) { std::printf("%s\n", line); }

// Converts the image to the model's channel layout.
ImagePtr match_channels(const nntc_model *model, ImagePtr img) {
  const std::size_t want = nntc_model_channels(model);
  if (nntc_image_channels(img.get()) == want) return img;
  nntc_image *out = nullptr;
  check(nntc_image_convert(img.get(), want, &out));
  return ImagePtr(out);
}

struct Args {
  std::string source, out_dir, data, checkpoint, config, resume, dump_config;
  std::string input, output, reference, candidate;
  std::size_t size = 32, channels = 3, steps = 0, batch_size = 0, train_iterations = 0;
  double train_fraction = 0.9, lr = 0.0, time_budget = 0.0;
  std::uint64_t seed = 1;
  std::size_t iterations = 0, bytes = 0, min_iterations = 1, max_iterations = 0;
  double psnr = 0.0, ssim = 0.0;
  std::vector<std::size_t> iteration_list;
};

int run_prepare(const Args &a) {
  nntc_prepare_report r{};
  check(nntc_prepare_data(a.source.c_str(), a.out_dir.c_str(), a.size, a.train_fraction, a.seed,
                          a.channels, print_line, nullptr, &r));
  std::printf("train=%zu eval=%zu rejected_small=%zu unreadable=%zu\n", r.train, r.eval,
              r.rejected_small, r.unreadable);
  return 0;
}

int run_train(const Args &a, const CLI::App &cmd) {
  nntc_train_options o{};
  o.config_path = a.config.empty() ? nullptr : a.config.c_str();
  o.data_dir = a.data.c_str();
  o.checkpoint_out = a.checkpoint.c_str();
  o.resume_from = a.resume.empty() ? nullptr : a.resume.c_str();
  o.config_dump_out = a.dump_config.empty() ? nullptr : a.dump_config.c_str();
  o.learning_rate = a.lr;
  o.steps = a.steps;
  o.batch_size = a.batch_size;
  o.n_iterations = a.train_iterations;
  o.time_budget_seconds = a.time_budget;
  o.has_seed = cmd.count("--seed") > 0;
  o.seed = a.seed;
  nntc_train_report r{};
  check(nntc_train(&o, print_line, nullptr, &r));
  std::printf("steps_run=%zu total_steps=%llu final_loss=%.9g stopped_by_time=%d\n", r.steps_run,
              static_cast<unsigned long long>(r.total_steps), r.final_loss, r.stopped_by_time);
  return 0;
}

int run_encode(const Args &a, const CLI::App &cmd) {
  const ModelPtr model = load_model(a.checkpoint);
  const ImagePtr img = match_channels(model.get(), load_image(a.input));
  nntc_buffer *raw = nullptr;
  if (cmd.count("--iterations")) {
    check(nntc_encode(model.get(), img.get(), a.iterations, &raw));
  } else if (cmd.count("--bytes")) {
    check(nntc_encode_budget(model.get(), img.get(), a.bytes, &raw));
  } else {
    const bool by_psnr = cmd.count("--psnr") > 0;
    const std::size_t max_it = a.max_iterations ? a.max_iterations : nntc_model_max_iterations(model.get());
    check(nntc_encode_dynamic(model.get(), img.get(), by_psnr ? NNTC_METRIC_PSNR : NNTC_METRIC_SSIM,
                              by_psnr ? a.psnr : a.ssim, a.min_iterations, max_it, &raw));
  }
  const BufferPtr stream(raw);
  write_file(a.output, nntc_buffer_data(raw), nntc_buffer_size(raw));
  nntc_stream_info info{};
  check(nntc_stream_inspect(nntc_buffer_data(raw), nntc_buffer_size(raw), &info));
  std::printf("payload_bytes=%zu header_bytes=%zu bpp=%.6g max_iterations=%u\n", info.payload_bytes,
              info.header_bytes, info.bpp, info.max_iterations);
  return 0;
}

int run_decode(const Args &a) {
  const ModelPtr model = load_model(a.checkpoint);
  const auto bytes = read_file(a.input);
  nntc_image *raw = nullptr;
  check(nntc_decode(model.get(), bytes.data(), bytes.size(), &raw));
  const ImagePtr img(raw);
  check(nntc_image_write_png(img.get(), a.output.c_str()));
  return 0;
}

int run_progressive(const Args &a) {
  const ModelPtr model = load_model(a.checkpoint);
  const auto bytes = read_file(a.input);
  nntc_frames *raw = nullptr;
  check(nntc_decode_progressive(model.get(), bytes.data(), bytes.size(), &raw));
  const FramesPtr frames(raw);
  std::error_code ec;
  std::filesystem::create_directories(a.out_dir, ec);
  if (ec) io_failure("cannot create " + a.out_dir);
  const std::size_t n = nntc_frames_count(raw);
  for (std::size_t t = 0; t < n; ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%02zu.png", t + 1);
    const std::string path = (std::filesystem::path(a.out_dir) / name).string();
    check(nntc_image_write_png(nntc_frames_get(raw, t), path.c_str()));
  }
  std::printf("frames=%zu\n", n);
  return 0;
}

int run_evaluate(const Args &a) {
  if (!a.reference.empty()) {
    const ImagePtr ref = load_image(a.reference), cand = load_image(a.candidate);
    double ssim = 0.0, psnr = 0.0;
    check(nntc_ssim(ref.get(), cand.get(), &ssim));
    check(nntc_psnr(ref.get(), cand.get(), &psnr));
    std::printf("mean_ssim=%.9f psnr=%.6f\n", ssim, psnr);
    return 0;
  }
  const ModelPtr model = load_model(a.checkpoint);
  nntc_eval_report r{};
  check(nntc_evaluate(model.get(), a.data.c_str(), a.iterations, &r));
  std::printf("images=%zu iterations=%zu bpp=%.6g mean_ssim=%.9f mean_psnr=%.6f\n", r.images,
              a.iterations, r.bpp, r.mean_ssim, r.mean_psnr);
  return 0;
}

int run_rd_curve(const Args &a) {
  const ModelPtr model = load_model(a.checkpoint);
  nntc_buffer *raw = nullptr;
  check(nntc_rd_curve_csv(model.get(), a.data.c_str(), a.iteration_list.data(),
                          a.iteration_list.size(), &raw));
  const BufferPtr csv(raw);
  if (a.output.empty()) {
    std::fwrite(nntc_buffer_data(raw), 1, nntc_buffer_size(raw), stdout);
  } else {
    write_file(a.output, nntc_buffer_data(raw), nntc_buffer_size(raw));
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Neural thumbnail codec: train, encode, decode and evaluate."};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  Args a;

  auto *prep = app.add_subcommand("prepare-data", "Downsample a PNG folder into train/eval splits");
  prep->add_option("--source", a.source, "Folder of PNG images")->required();
  prep->add_option("--out-dir", a.out_dir, "Output folder (train/ and eval/)")->required();
  prep->add_option("--size", a.size, "Side of the square output images")->capture_default_str();
  prep->add_option("--train-fraction", a.train_fraction, "Share of images for training")
      ->capture_default_str();
  prep->add_option("--seed", a.seed, "Shuffle seed")->capture_default_str();
  prep->add_option("--channels", a.channels, "1 (gray) or 3 (RGB)")->capture_default_str();

  auto *train = app.add_subcommand("train", "Train a model and write a checkpoint");
  train->add_option("--data", a.data, "Prepared dataset or folder of PNGs")->required();
  train->add_option("--checkpoint", a.checkpoint, "Output checkpoint")->required();
  train->add_option("--config", a.config, "JSON config with model and train sections");
  train->add_option("--resume", a.resume, "Continue from this checkpoint");
  train->add_option("--dump-config", a.dump_config, "Write the effective config here");
  train->add_option("--lr", a.lr, "Learning rate override");
  train->add_option("--steps", a.steps, "Step count override");
  train->add_option("--batch-size", a.batch_size, "Images per step override");
  train->add_option("--iterations", a.train_iterations, "Unrolled iterations override");
  train->add_option("--time-budget", a.time_budget, "Stop after this many seconds");
  train->add_option("--seed", a.seed, "Seed override");

  auto *enc = app.add_subcommand("encode", "Compress a PNG into an NNTC stream");
  enc->add_option("--checkpoint", a.checkpoint, "Model checkpoint")->required();
  enc->add_option("--input", a.input, "PNG image")->required();
  enc->add_option("--output", a.output, "Output stream")->required();
  auto *rate = enc->add_option_group("rate", "How many bits to spend");
  rate->add_option("--iterations", a.iterations, "Uniform iteration count");
  rate->add_option("--bytes", a.bytes, "Payload byte budget");
  rate->add_option("--psnr", a.psnr, "Dynamic mode: per-patch PSNR target (dB)");
  rate->add_option("--ssim", a.ssim, "Dynamic mode: per-patch SSIM target");
  rate->require_option(1);
  enc->add_option("--min-iterations", a.min_iterations, "Dynamic mode lower bound")
      ->capture_default_str();
  enc->add_option("--max-iterations", a.max_iterations, "Dynamic mode upper bound (default: model)");

  auto *dec = app.add_subcommand("decode", "Reconstruct a PNG from an NNTC stream");
  dec->add_option("--checkpoint", a.checkpoint, "Model checkpoint")->required();
  dec->add_option("--input", a.input, "NNTC stream")->required();
  dec->add_option("--output", a.output, "Output PNG")->required();

  auto *prog = app.add_subcommand("progressive", "Write one PNG per iteration prefix");
  prog->add_option("--checkpoint", a.checkpoint, "Model checkpoint")->required();
  prog->add_option("--input", a.input, "NNTC stream")->required();
  prog->add_option("--out-dir", a.out_dir, "Folder for step_NN.png frames")->required();

  auto *eval = app.add_subcommand("evaluate", "SSIM, PSNR and rate over a folder or an image pair");
  auto *on_set = eval->add_option_group("model", "Evaluate a checkpoint over a folder");
  auto *ck = on_set->add_option("--checkpoint", a.checkpoint, "Model checkpoint");
  auto *data = on_set->add_option("--data", a.data, "Folder of PNGs");
  auto *its = on_set->add_option("--iterations", a.iterations, "Uniform iteration count");
  auto *on_pair = eval->add_option_group("pair", "Compare two images");
  auto *ref = on_pair->add_option("--reference", a.reference, "Reference PNG");
  auto *cand = on_pair->add_option("--candidate", a.candidate, "Candidate PNG");
  ck->needs(data)->needs(its);
  data->needs(ck);
  ref->needs(cand);
  cand->needs(ref);
  ref->excludes(ck);
  eval->require_option(1, 0);

  auto *rd = app.add_subcommand("rd-curve", "Rate-distortion CSV over a folder");
  rd->add_option("--checkpoint", a.checkpoint, "Model checkpoint")->required();
  rd->add_option("--data", a.data, "Folder of PNGs")->required();
  rd->add_option("--iterations", a.iteration_list, "Iteration counts, e.g. 1,2,4,8")
      ->required()
      ->delimiter(',');
  rd->add_option("--output", a.output, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*prep) return run_prepare(a);
    if (*train) return run_train(a, *train);
    if (*enc) return run_encode(a, *enc);
    if (*dec) return run_decode(a);
    if (*prog) return run_progressive(a);
    if (*eval) return run_evaluate(a);
    if (*rd) return run_rd_curve(a);
  } catch (const Failure &f) {
    std::fprintf(stderr, "error: %s: %s\n", nntc_status_name(f.status), f.message.c_str());
    return 1;
  }
  return 2;
}

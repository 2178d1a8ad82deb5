#include "votenet/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "votenet/cli/checkpoint.hpp"
#include "votenet/cli/dataset.hpp"
#include "votenet/cli/gradcheck_suite.hpp"
#include "votenet/cli/training.hpp"
#include "votenet/data/manifest.hpp"
#include "votenet/data/png_io.hpp"
#include "votenet/inference/components.hpp"
#include "votenet/inference/harness.hpp"
#include "votenet/inference/overlay.hpp"

namespace votenet::cli {

namespace fs = std::filesystem;

namespace {

fs::path prepare_out(const RunConfig& config) {
  const fs::path out = config.out;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw std::runtime_error("cannot create output directory " + out.string());
  save_config(out / "config.txt", config);
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

infer::EdgePolicy edge_policy(const RunConfig& config) {
  return config.eval.edge == "pad" ? infer::EdgePolicy::pad : infer::EdgePolicy::clamp;
}

net::ParameterSet load_params(const fs::path& path, const net::NetworkConfig& network) {
  Checkpoint ck = load_checkpoint(path);
  check_compatible(ck.params, network);
  return std::move(ck.params);
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

struct Best {
  std::string label;
  double value;
};

template <typename Row, typename Label>
std::string best_summary(const std::vector<Row>& rows, Label label,
                         const std::function<const infer::MetricsSummary*(const Row&)>& summary) {
  std::vector<Best> acc, ber, f1;
  for (const Row& r : rows) {
    const infer::MetricsSummary* s = summary(r);
    if (s == nullptr) continue;
    acc.push_back({label(r), s->accuracy.mean});
    ber.push_back({label(r), s->ber.mean});
    f1.push_back({label(r), s->f1.mean});
  }
  if (acc.empty()) return "no completed rows\n";
  auto higher = [](const Best& a, const Best& b) { return a.value < b.value; };
  const Best a = *std::max_element(acc.begin(), acc.end(), higher);
  const Best b = *std::min_element(ber.begin(), ber.end(), higher);
  const Best f = *std::max_element(f1.begin(), f1.end(), higher);
  return "best accuracy: " + a.label + " (" + fixed(a.value, 2) + "); best ber: " + b.label + " (" +
         fixed(b.value, 3) + "); best f1: " + f.label + " (" + fixed(f.value, 2) + ")\n";
}

}  // namespace

std::vector<fs::path> checkpoint_paths(const RunConfig& config) {
  std::vector<fs::path> out;
  std::stringstream ss(config.checkpoint);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.emplace_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) throw ConfigError("no checkpoint given (run.checkpoint / --checkpoint)");
  return out;
}

int cmd_synth(const RunConfig& config, std::ostream& log) {
  config.validate();
  const fs::path out = prepare_out(config);
  const auto& d = config.dataset;
  for (const SplitSummary& s :
       {build_split(config, out, "train", 0, d.train_scenes, d.train_patches),
        build_split(config, out, "eval", d.train_scenes, d.eval_scenes, d.eval_patches)}) {
    log << s.split << ": " << s.scenes << " scenes, " << s.rows << " patches (" << s.contour_patches
        << " contour, " << s.background_patches << " background)\n";
  }
  return kExitOk;
}

int cmd_sample(const RunConfig& config, const fs::path& scene_stem, bool augment, std::ostream& log) {
  config.validate();
  const data::LabeledRaster scene = data::read_raster(scene_stem);
  if (!scene.has_fields()) {
    throw data::DataError("scene " + scene_stem.string() + " has no field map (" +
                          data::fields_path(scene_stem).string() + ")");
  }
  const fs::path out = prepare_out(config);
  fs::create_directories(out / "patches");

  std::ofstream cand = open_out(out / "candidates.csv");
  cand << "field,radius,angle_deg,circle_x,circle_y,origin_x,origin_y,contour_fraction,kept\n";
  for (const data::ContourCandidate& c : data::contour_candidates(scene, config.sampler)) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%u,%.6f,%g,%.6f,%.6f,%zu,%zu,%.6f,%d\n",
                  static_cast<unsigned>(c.field), c.radius, c.angle_deg, c.circle_x, c.circle_y,
                  c.origin_x, c.origin_y, c.contour_fraction, c.kept ? 1 : 0);
    cand << buf;
  }

  std::vector<data::Patch> patches = data::sample_contour_patches(scene, config.sampler);
  for (auto& p : data::sample_background_patches(scene, config.sampler)) patches.push_back(std::move(p));
  std::vector<data::ManifestRow> rows;
  const std::string source = scene_stem.filename().string();
  for (const data::Patch& base : patches) {
    std::vector<data::Patch> variants{base};
    if (augment) variants = data::augment_rotations(base, config.sampler.rotation_set);
    for (const data::Patch& p : variants) {
      const std::string file = "patches/" + p.id;
      data::write_raster(p.raster, out / file);
      rows.push_back({p.id, source, p.center_x, p.center_y, p.rotation_deg, p.patch_class,
                      data::image_path(file).string()});
    }
  }
  data::write_manifest(out / "manifest.tsv", rows);
  log << "sampled " << patches.size() << " patches, wrote " << rows.size() << " manifest rows\n";
  return kExitOk;
}

int cmd_train(const RunConfig& config, std::ostream& log) {
  config.validate();
  const LoadedSplit train = load_split(fs::path(config.data) / "train");
  const fs::path out = prepare_out(config);
  log << "training on " << train.patches.size() << " patches for " << config.train.epochs
      << " epochs\n";
  const std::size_t total_steps = train.patches.size() * config.train.epochs;
  const TrainingResult result = train_model(
      config, train.patches, config.seed, [&](const StepLog& s) {
        if (s.step % 50 == 0 || s.step == total_steps) {
          log << "  step " << s.step << "/" << total_steps << " epoch " << s.epoch << " lr "
              << s.learning_rate << " total " << fixed(s.total, 4) << '\n';
        }
      });
  save_checkpoint(out / "model.ckpt", serialize_config(config), result.params);
  {
    std::ofstream f = open_out(out / "loss_log.csv");
    write_loss_log(f, result.log);
  }
  std::ofstream f = open_out(out / "epochs.csv");
  f << "epoch,lr,mean_total\n";
  for (std::size_t e = 0; e < result.epoch_means.size(); ++e) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%zu,%g,%.10g\n", e + 1,
                  scheduled_learning_rate(config.train, e + 1), result.epoch_means[e]);
    f << buf;
    log << "epoch " << e + 1 << " mean total loss " << fixed(result.epoch_means[e], 5) << '\n';
  }
  log << "eta " << result.eta << "; checkpoint " << (out / "model.ckpt").string() << '\n';
  return kExitOk;
}

int cmd_eval(const RunConfig& config, std::ostream& log) {
  config.validate();
  const std::vector<fs::path> ckpts = checkpoint_paths(config);
  const net::ParameterSet params = load_params(ckpts.front(), config.network);
  const LoadedSplit split = load_split(fs::path(config.data) / "eval");
  const fs::path out = prepare_out(config);

  const infer::WindowPredictor predictor = infer::make_votenet_predictor(config.network, params);
  infer::EvaluationOptions options;
  options.window = config.network.height;
  options.stride = config.eval.stride;
  options.edge = edge_policy(config);
  options.min_area = config.eval.min_area;

  std::ofstream csv = open_out(out / "metrics.csv");
  csv << "mode,accuracy,ber,f1,windows\n";
  for (bool post : {false, true}) {
    if (post && !config.eval.postprocess) break;
    options.postprocess = post;
    const infer::EvaluationResult r = infer::evaluate_images(predictor, split.patches, options);
    const char* mode = post ? "postprocess" : "raw";
    csv << mode << ',' << fixed(r.metrics.accuracy, 2) << ',' << fixed(r.metrics.ber, 3) << ','
        << fixed(r.metrics.f1, 2) << ',' << r.windows << '\n';
    log << mode << ": accuracy " << fixed(r.metrics.accuracy, 2) << "% ber "
        << fixed(r.metrics.ber, 3) << " f1 " << fixed(r.metrics.f1, 2) << "%\n";
  }

  const std::size_t overlays = std::min(config.eval.overlays, split.patches.size());
  if (overlays > 0) fs::create_directories(out / "overlays");
  for (std::size_t i = 0; i < overlays; ++i) {
    const data::LabeledRaster& p = split.patches[i];
    const infer::TilePlan plan =
        infer::plan_tiles(p.height, p.width, options.window, options.stride, options.edge);
    const infer::PredictionMap map = infer::predict_image(p.image_tensor(), predictor, plan);
    infer::write_overlay_png(out / "overlays" / (split.rows[i].patch_id + ".png"), p.height, p.width,
                             p.image, map.hard_labels());
  }
  return kExitOk;
}

int cmd_gradcheck(const RunConfig& config, bool inject_bug, std::ostream& log) {
  const fs::path out = prepare_out(config);
  const std::vector<GradCheckRow> rows = run_gradcheck_suite(gradcheck_cases(inject_bug));
  std::ofstream csv = open_out(out / "gradcheck.csv");
  write_gradcheck_csv(csv, rows);
  std::size_t failed = 0;
  for (const GradCheckRow& r : rows) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-44s %.3e %s\n", r.name.c_str(), r.report.max_relative_error,
                  r.report.passed ? "pass" : "FAIL");
    log << buf;
    if (!r.report.failure.empty()) log << "    " << r.report.failure << '\n';
    if (!r.report.passed) ++failed;
  }
  log << rows.size() << " checks, " << failed << " failed\n";
  return failed == 0 ? kExitOk : kExitCheckFailed;
}

SweepKind parse_sweep_kind(const std::string& text) {
  if (text == "stride") return SweepKind::stride;
  if (text == "lambda") return SweepKind::lambda;
  throw ConfigError("unknown sweep kind '" + text + "' (expected stride or lambda)");
}

int cmd_sweep(const RunConfig& config, SweepKind kind, std::ostream& log) {
  config.validate();
  infer::EvaluationOptions options;
  options.window = config.network.height;
  options.stride = config.eval.stride;
  options.edge = edge_policy(config);
  options.min_area = config.eval.min_area;

  if (kind == SweepKind::stride) {
    std::vector<infer::WindowPredictor> models;
    for (const fs::path& p : checkpoint_paths(config)) {
      models.push_back(infer::make_votenet_predictor(config.network, load_params(p, config.network)));
    }
    const auto scenes = load_scenes(fs::path(config.data) / "eval", config.sweep.scenes);
    if (scenes.empty()) throw data::DataError("no eval scenes under " + config.data);
    const fs::path out = prepare_out(config);
    const auto rows = infer::stride_sweep(models, scenes, config.sweep.strides, options);
    {
      std::ofstream csv = open_out(out / "stride_sweep.csv");
      infer::write_stride_csv(csv, rows);
    }
    const std::string summary = best_summary<infer::StrideRow>(
        rows, [](const infer::StrideRow& r) { return "stride " + std::to_string(r.stride); },
        [](const infer::StrideRow& r) { return &r.summary; });
    open_out(out / "stride_sweep_summary.txt") << summary;
    infer::write_stride_csv(log, rows);
    log << summary;
    return kExitOk;
  }

  LoadedSplit train = load_split(fs::path(config.data) / "train");
  if (config.sweep.train_patches > 0 && train.patches.size() > config.sweep.train_patches) {
    train.patches.resize(config.sweep.train_patches);
  }
  const LoadedSplit eval = load_split(fs::path(config.data) / "eval");
  const fs::path out = prepare_out(config);
  const auto train_fn = [&](const infer::AblationCell& cell, std::uint64_t seed) {
    RunConfig c = config;
    c.loss.lambda_c = cell.lambda_c;
    c.loss.lambda_r = cell.lambda_r;
    if (config.sweep.epochs > 0) c.train.epochs = config.sweep.epochs;
    const TrainingResult trained = train_model(c, train.patches, seed);
    infer::AblationRun run;
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < trained.log.size(); ++i) {
      const double t = trained.log[i].total;
      lo = i == 0 ? t : std::min(lo, t);
      hi = i == 0 ? t : std::max(hi, t);
    }
    run.loss_range = hi - lo;
    run.metrics = infer::evaluate_images(infer::make_votenet_predictor(c.network, trained.params),
                                         eval.patches, options)
                      .metrics;
    log << "  " << cell.parameter << " " << cell.value << " seed " << seed << ": accuracy "
        << fixed(run.metrics.accuracy, 2) << '\n';
    return run;
  };
  const auto rows = infer::lambda_ablation(train_fn, infer::default_lambda_grid(config.sweep.lambda_values),
                                           config.sweep.repeats, config.seed);
  {
    std::ofstream csv = open_out(out / "lambda_sweep.csv");
    infer::write_lambda_csv(csv, rows);
  }
  const std::string summary = best_summary<infer::AblationRow>(
      rows,
      [](const infer::AblationRow& r) {
        if (r.cell.parameter == "Baseline") return std::string("Baseline");
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%s=%g", r.cell.parameter.c_str(), r.cell.value);
        return std::string(buf);
      },
      [](const infer::AblationRow& r) { return r.diverged ? nullptr : &r.summary; });
  open_out(out / "lambda_sweep_summary.txt") << summary;
  infer::write_lambda_csv(log, rows);
  log << summary;
  return kExitOk;
}

int cmd_render(const RunConfig& config, const fs::path& image_png, std::ostream& log) {
  config.validate();
  const net::ParameterSet params = load_params(checkpoint_paths(config).front(), config.network);
  const data::PngPixels png = data::read_png8(image_png, 3);
  data::LabeledRaster raster(png.height, png.width);
  for (std::size_t i = 0; i < png.samples.size(); ++i) raster.image[i] = png.samples[i] / 255.0;
  const fs::path out = prepare_out(config);

  const infer::WindowPredictor predictor = infer::make_votenet_predictor(config.network, params);
  const infer::TilePlan plan = infer::plan_tiles(png.height, png.width, config.network.height,
                                                 config.eval.stride, edge_policy(config));
  const infer::PredictionMap map = infer::predict_image(raster.image_tensor(), predictor, plan);
  std::vector<std::uint8_t> labels = map.hard_labels();
  if (config.eval.postprocess) {
    const std::size_t min_area =
        config.eval.min_area > 0 ? config.eval.min_area : infer::default_min_area(png.height, png.width);
    labels = infer::majority_vote_postprocess(map, infer::voting_segments(map, min_area));
  }
  infer::write_overlay_png(out / "overlay.png", png.height, png.width, raster.image, labels);
  std::size_t contour = 0;
  for (auto l : labels) contour += l;
  log << "rendered " << plan.size() << " windows; " << contour << " contour pixels -> "
      << (out / "overlay.png").string() << '\n';
  return kExitOk;
}

}  // namespace votenet::cli

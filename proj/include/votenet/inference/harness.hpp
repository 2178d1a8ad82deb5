#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "votenet/data/raster.hpp"
#include "votenet/inference/metrics.hpp"
#include "votenet/inference/tiling.hpp"
#include "votenet/network/network.hpp"

namespace votenet::infer {

/// Window predictor backed by the voting network; runs without recording
/// adjoints. Segment ids are the per-pixel argmax of S.
WindowPredictor make_votenet_predictor(net::NetworkConfig config, net::ParameterSet params);

struct EvaluationOptions {
  std::size_t window = 64;
  std::size_t stride = 64;
  EdgePolicy edge = EdgePolicy::clamp;
  bool postprocess = false;
  /// 0 selects default_min_area() per image.
  std::size_t min_area = 0;
};

/// Pools the confusion counts of every image and returns the metrics, plus
/// the total number of windows evaluated.
struct EvaluationResult {
  MetricsReport metrics;
  Confusion confusion;
  std::size_t windows = 0;
};

EvaluationResult evaluate_images(const WindowPredictor& predictor,
                                 const std::vector<data::LabeledRaster>& images,
                                 const EvaluationOptions& options);

struct StrideRow {
  std::size_t stride = 0;
  std::size_t windows = 0;
  MetricsSummary summary;
};

/// For each stride, evaluates every model (one per training run) on the
/// images; mean and standard deviation are taken across models.
std::vector<StrideRow> stride_sweep(const std::vector<WindowPredictor>& models,
                                    const std::vector<data::LabeledRaster>& images,
                                    const std::vector<std::size_t>& strides,
                                    EvaluationOptions options);

struct AblationCell {
  std::string parameter;  // "Baseline", "lambda_c" or "lambda_r"
  double value = 1.0;     // value of the varied weight (1 for the baseline)
  double lambda_c = 1.0;
  double lambda_r = 1.0;
};

/// Baseline followed by lambda_c and lambda_r at each of `values`.
std::vector<AblationCell> default_lambda_grid(const std::vector<double>& values = {0.4, 1.6});

struct AblationRun {
  MetricsReport metrics;
  /// Dynamic range (max - min) of the logged total training loss.
  double loss_range = 0.0;
  bool diverged = false;
  std::string note;
};

using AblationTrainFn = std::function<AblationRun(const AblationCell& cell, std::uint64_t seed)>;

struct AblationRow {
  AblationCell cell;
  MeanStd loss_range;
  MetricsSummary summary;
  bool diverged = false;
  std::string note;
};

/// Trains `repeats` models per cell with seeds base_seed, base_seed + 1, ...
/// A cell that diverges (or throws) is reported, not propagated.
std::vector<AblationRow> lambda_ablation(const AblationTrainFn& train,
                                         const std::vector<AblationCell>& grid,
                                         std::size_t repeats, std::uint64_t base_seed);

/// "mean (std)" with the given number of decimals.
std::string format_mean_std(const MeanStd& v, int decimals);

/// Header: stride,windows,accuracy,ber,f1
void write_stride_csv(std::ostream& out, const std::vector<StrideRow>& rows);
/// Header: param,value,loss_range,accuracy,ber,f1
void write_lambda_csv(std::ostream& out, const std::vector<AblationRow>& rows);

}  // namespace votenet::infer

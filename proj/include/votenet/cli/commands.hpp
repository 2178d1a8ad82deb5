#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "votenet/cli/config.hpp"

namespace votenet::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitRuntime = 2,
  kExitCheckFailed = 3,
};

/// Every command reads datasets from config.data and writes its artifacts
/// below config.out (created if needed), including a copy of the effective
/// configuration as config.txt. Errors propagate as exceptions; main() maps
/// them to exit codes.

/// <out>/{train,eval}/... (see dataset.hpp).
int cmd_synth(const RunConfig& config, std::ostream& log);

/// Samples one scene (a raster stem with a field map) into
/// <out>/patches plus <out>/manifest.tsv and <out>/candidates.csv. With
/// `augment` every kept patch is followed by its rotated copies.
int cmd_sample(const RunConfig& config, const std::filesystem::path& scene_stem, bool augment,
               std::ostream& log);

/// Trains on <data>/train; writes model.ckpt, loss_log.csv and epochs.csv.
int cmd_train(const RunConfig& config, std::ostream& log);

/// Evaluates config.checkpoint on <data>/eval; writes metrics.csv (one row
/// without postprocessing, plus one with it when eval.postprocess is set)
/// and overlays/<patch-id>.png.
int cmd_eval(const RunConfig& config, std::ostream& log);

/// Writes gradcheck.csv; returns kExitCheckFailed when any check fails.
int cmd_gradcheck(const RunConfig& config, bool inject_bug, std::ostream& log);

enum class SweepKind { stride, lambda };
SweepKind parse_sweep_kind(const std::string& text);

/// stride: evaluates every checkpoint listed in config.checkpoint
/// (comma-separated) on the eval scenes at each of sweep.strides and writes
/// stride_sweep.csv. lambda: trains one model per grid cell and repeat on
/// <data>/train, evaluates on <data>/eval and writes lambda_sweep.csv. Both
/// also write a best-row summary next to the table.
int cmd_sweep(const RunConfig& config, SweepKind kind, std::ostream& log);

/// Predicts a whole RGB PNG with sliding windows and writes the green
/// overlay to <out>/overlay.png.
int cmd_render(const RunConfig& config, const std::filesystem::path& image_png, std::ostream& log);

/// Comma-separated checkpoint list of config.checkpoint.
std::vector<std::filesystem::path> checkpoint_paths(const RunConfig& config);

}  // namespace votenet::cli

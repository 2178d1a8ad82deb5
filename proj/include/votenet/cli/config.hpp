#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "votenet/data/sampler.hpp"
#include "votenet/data/scene.hpp"
#include "votenet/losses/losses.hpp"
#include "votenet/network/network.hpp"

namespace votenet::cli {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DatasetSettings {
  std::size_t train_scenes = 24;
  std::size_t eval_scenes = 8;
  std::size_t train_patches = 200;
  std::size_t eval_patches = 50;
  /// Share of contour patches among the selected patches.
  double contour_share = 0.6;
  /// Give each selected patch a rotation drawn from {0} and the sampler's
  /// rotation set.
  bool rotate = true;
  bool operator==(const DatasetSettings&) const = default;
};

struct TrainSettings {
  double learning_rate = 1e-4;
  double decayed_learning_rate = 1e-5;
  std::size_t decay_after_epochs = 1;
  std::size_t epochs = 3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool operator==(const TrainSettings&) const = default;
};

struct EvalSettings {
  std::size_t stride = 64;
  std::string edge = "clamp";
  /// Emit a second metrics row with majority-vote postprocessing.
  bool postprocess = true;
  /// 0 selects the area-scaled default.
  std::size_t min_area = 0;
  std::size_t overlays = 8;
  bool operator==(const EvalSettings&) const = default;
};

struct SweepSettings {
  std::vector<std::size_t> strides{8, 16, 32, 64};
  /// Number of eval scenes used by the stride sweep (0 = all).
  std::size_t scenes = 2;
  std::vector<double> lambda_values{0.4, 1.6};
  std::size_t repeats = 1;
  /// Caps for the per-cell training of the lambda sweep (0 = no cap).
  std::size_t train_patches = 0;
  std::size_t epochs = 0;
  bool operator==(const SweepSettings&) const = default;
};

/// Every tunable of the pipeline. Serialized as a flat "key = value" text
/// file with [sections]; see serialize_config().
struct RunConfig {
  net::NetworkConfig network;
  loss::LossWeights loss;
  /// When set, eta is derived from the training set's class balance and
  /// `loss.eta` is ignored.
  bool eta_auto = true;
  data::SamplerConfig sampler;
  data::SceneSpec scene;
  DatasetSettings dataset;
  TrainSettings train;
  EvalSettings eval;
  SweepSettings sweep;
  std::uint64_t seed = 7;
  std::string out = "out";
  std::string data = "data";
  std::string checkpoint;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

std::string serialize_config(const RunConfig& config);

/// Parses text on top of `base`. Unknown sections or keys and malformed
/// values raise ConfigError naming the line.
RunConfig parse_config(const std::string& text, const RunConfig& base = RunConfig{});
RunConfig load_config(const std::filesystem::path& path, const RunConfig& base = RunConfig{});
void save_config(const std::filesystem::path& path, const RunConfig& config);

/// Applies one "section.key=value" override.
void apply_override(RunConfig& config, const std::string& assignment);

/// Every "section.key" name the parser accepts, in serialization order.
std::vector<std::string> config_keys();

}  // namespace votenet::cli

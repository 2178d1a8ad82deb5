#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "votenet/cli/config.hpp"
#include "votenet/data/raster.hpp"
#include "votenet/network/network.hpp"

namespace votenet::cli {

/// Raised when a loss term stops being finite; the message names the term.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepLog {
  std::size_t step = 0;   // 1-based
  std::size_t epoch = 0;  // 1-based
  double learning_rate = 0.0;
  double label_centric = 0.0;
  double region_centric = 0.0;
  double total = 0.0;
};

struct TrainingResult {
  net::ParameterSet params;
  std::vector<StepLog> log;
  std::vector<double> epoch_means;  // mean total loss per epoch
  double eta = 1.0;
};

/// Learning rate used during `epoch` (1-based).
double scheduled_learning_rate(const TrainSettings& train, std::size_t epoch);

/// Contour weight for a training set: configured value, or derived from the
/// pixel class balance when config.eta_auto is set.
double training_eta(const RunConfig& config, const std::vector<data::LabeledRaster>& patches);

using StepCallback = std::function<void(const StepLog&)>;

/// Batch-1 Adam training from init_parameters(config.network, seed). The
/// visiting order is reshuffled every epoch from `seed`.
TrainingResult train_model(const RunConfig& config, const std::vector<data::LabeledRaster>& patches,
                           std::uint64_t seed, const StepCallback& on_step = {});

/// Header: step,epoch,lr,L_c,L_r,total
void write_loss_log(std::ostream& out, const std::vector<StepLog>& log);

}  // namespace votenet::cli

#include "votenet/cli/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

#include "votenet/autodiff/adam.hpp"
#include "votenet/losses/losses.hpp"

namespace votenet::cli {

double scheduled_learning_rate(const TrainSettings& train, std::size_t epoch) {
  return epoch <= train.decay_after_epochs ? train.learning_rate : train.decayed_learning_rate;
}

double training_eta(const RunConfig& config, const std::vector<data::LabeledRaster>& patches) {
  if (!config.eta_auto) return config.loss.eta;
  std::uint64_t contour = 0, total = 0;
  for (const data::LabeledRaster& p : patches) {
    contour += p.contour_pixels();
    total += p.pixels();
  }
  return loss::default_eta(total - contour, contour);
}

namespace {

struct Example {
  ad::Tensor image;
  ad::Tensor labels;
  loss::PixelFeatures features;
};

void require_finite(const ad::Tensor& t, const char* term, std::size_t step) {
  if (!std::isfinite(t.item())) {
    throw TrainingError("non-finite loss term '" + std::string(term) + "' at step " +
                        std::to_string(step));
  }
}

}  // namespace

TrainingResult train_model(const RunConfig& config, const std::vector<data::LabeledRaster>& patches,
                           std::uint64_t seed, const StepCallback& on_step) {
  config.network.validate();
  TrainingResult result;
  result.params = net::init_parameters(config.network, seed);
  result.eta = training_eta(config, patches);
  if (config.train.epochs > 0 && patches.empty()) {
    throw std::invalid_argument("training: no patches to train on");
  }

  std::vector<Example> examples;
  examples.reserve(patches.size());
  for (const data::LabeledRaster& p : patches) {
    if (p.height != config.network.height || p.width != config.network.width) {
      throw std::invalid_argument("training: patch is " + std::to_string(p.height) + "x" +
                                  std::to_string(p.width) + " but the network expects " +
                                  std::to_string(config.network.height) + "x" +
                                  std::to_string(config.network.width));
    }
    ad::Tensor image = p.image_tensor();
    loss::PixelFeatures features = loss::PixelFeatures::from_image(image);
    examples.push_back({image, loss::GroundTruth::from_mask(p.mask, p.height, p.width).onehot,
                        std::move(features)});
  }

  loss::LossWeights weights = config.loss;
  weights.eta = result.eta;
  std::vector<ad::Tensor> params = result.params.tensors();
  ad::AdamState adam = ad::AdamState::for_params(params, config.train.learning_rate, config.train.beta1,
                                                 config.train.beta2, config.train.epsilon);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.train.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    adam.learning_rate = scheduled_learning_rate(config.train, epoch);
    double epoch_sum = 0.0;
    for (std::size_t index : order) {
      ++step;
      const Example& ex = examples[index];
      ad::Graph graph;
      const net::ForwardResult out = net::forward(graph, ex.image, config.network, result.params);
      const loss::TotalLoss l = loss::total_loss(graph, out.fused.fused, out.class_logits,
                                                 out.segments.memberships, ex.labels, ex.features,
                                                 weights);
      require_finite(l.label_centric.fused_bce, "fused_bce", step);
      require_finite(l.label_centric.class_ce, "class_ce", step);
      require_finite(l.label_centric.reconstruction_ce, "reconstruction_ce", step);
      require_finite(l.region_centric.granularity.position, "position_error", step);
      require_finite(l.region_centric.granularity.color, "color_error", step);
      require_finite(l.region_centric.partition_coefficient, "partition_coefficient", step);
      require_finite(l.total, "total", step);

      graph.backward(l.total, params);
      ad::adam_step(params, adam);

      const StepLog row{step,
                        epoch,
                        adam.learning_rate,
                        l.label_centric.total.item(),
                        l.region_centric.total.item(),
                        l.total.item()};
      epoch_sum += row.total;
      result.log.push_back(row);
      if (on_step) on_step(row);
    }
    result.epoch_means.push_back(epoch_sum / static_cast<double>(examples.size()));
  }
  return result;
}

void write_loss_log(std::ostream& out, const std::vector<StepLog>& log) {
  out << "step,epoch,lr,L_c,L_r,total\n";
  char buf[192];
  for (const StepLog& r : log) {
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%g,%.10g,%.10g,%.10g\n", r.step, r.epoch,
                  r.learning_rate, r.label_centric, r.region_centric, r.total);
    out << buf;
  }
}

}  // namespace votenet::cli

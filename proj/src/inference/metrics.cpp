#include "votenet/inference/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace votenet::infer {

void Confusion::add(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("metrics: prediction and ground truth differ in size");
  }
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] != 0, t = truth[i] != 0;
    if (p && t) ++true_positive;
    else if (p) ++false_positive;
    else if (t) ++false_negative;
    else ++true_negative;
  }
}

MetricsReport metrics_from(const Confusion& c) {
  MetricsReport r;
  const auto total = static_cast<double>(c.total());
  const auto tp = static_cast<double>(c.true_positive), fp = static_cast<double>(c.false_positive);
  const auto tn = static_cast<double>(c.true_negative), fn = static_cast<double>(c.false_negative);
  r.accuracy = total > 0 ? 100.0 * (tp + tn) / total : 100.0;

  const double positive_error = tp + fn > 0 ? fn / (tp + fn) : 0.0;
  const double negative_error = tn + fp > 0 ? fp / (tn + fp) : 0.0;
  r.ber = 0.5 * (positive_error + negative_error);

  if (tp + fp + fn == 0) {
    r.f1 = 100.0;
  } else {
    r.f1 = 100.0 * 2.0 * tp / (2.0 * tp + fp + fn);
  }
  return r;
}

MetricsReport compute_metrics(std::span<const std::uint8_t> predicted,
                              std::span<const std::uint8_t> truth) {
  Confusion c;
  c.add(predicted, truth);
  return metrics_from(c);
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(var / static_cast<double>(values.size()));
  return out;
}

MetricsSummary summarize(const std::vector<MetricsReport>& runs) {
  std::vector<double> acc, ber, f1;
  for (const MetricsReport& r : runs) {
    acc.push_back(r.accuracy);
    ber.push_back(r.ber);
    f1.push_back(r.f1);
  }
  return {mean_std(acc), mean_std(ber), mean_std(f1)};
}

}  // namespace votenet::infer

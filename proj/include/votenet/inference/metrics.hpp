#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace votenet::infer {

/// Binary confusion counts with contour (1) as the positive class.
struct Confusion {
  std::uint64_t true_positive = 0;
  std::uint64_t false_positive = 0;
  std::uint64_t true_negative = 0;
  std::uint64_t false_negative = 0;

  void add(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth);
  std::uint64_t total() const {
    return true_positive + false_positive + true_negative + false_negative;
  }
};

/// Accuracy and F1 in percent, BER in [0, 1].
///
/// A class absent from the ground truth contributes an error rate of 0 to
/// BER. F1 is 100 when neither prediction nor ground truth contains a
/// contour pixel, and 0 when only one of them does.
struct MetricsReport {
  double accuracy = 0.0;
  double ber = 0.0;
  double f1 = 0.0;
};

MetricsReport metrics_from(const Confusion& confusion);
/// Throws std::invalid_argument on size mismatch.
MetricsReport compute_metrics(std::span<const std::uint8_t> predicted,
                              std::span<const std::uint8_t> truth);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

MeanStd mean_std(std::span<const double> values);

struct MetricsSummary {
  MeanStd accuracy;
  MeanStd ber;
  MeanStd f1;
};

MetricsSummary summarize(const std::vector<MetricsReport>& runs);

}  // namespace votenet::infer

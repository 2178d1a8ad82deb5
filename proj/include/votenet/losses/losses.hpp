#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "votenet/autodiff/graph.hpp"

namespace votenet::loss {

using ad::Graph;
using ad::Tensor;

/// Sign with which the partition coefficient enters the region-centric term.
enum class PcSign {
  paper_literal,           // + PC (minimizing discourages confident memberships)
  confidence_encouraging,  // - PC
};

/// How the fused map F is scored against the labels.
enum class FLossMode {
  paper_literal_sigmoid,  // sigmoid applied to F's contour channel
  probability_nll,        // F's contour channel used as a probability
};

std::string to_string(PcSign sign);
std::string to_string(FLossMode mode);
PcSign parse_pc_sign(const std::string& text);
FLossMode parse_f_loss_mode(const std::string& text);

/// Clamp applied to probabilities before taking logs.
inline constexpr double kProbabilityClamp = 1e-7;
/// Guard for empty segments in centroid normalization.
inline constexpr double kCentroidEpsilon = 1e-8;

struct LossWeights {
  double eta = 1.0;
  double lambda_c = 1.0;
  double lambda_r = 1.0;
  PcSign pc_sign = PcSign::confidence_encouraging;
  FLossMode f_loss_mode = FLossMode::probability_nll;

  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

/// Contour weight from the class balance of a training set: background over
/// contour pixel count, clamped to [1, 10]. Returns 1 when there are no
/// contour pixels.
double default_eta(std::uint64_t background_pixels, std::uint64_t contour_pixels);

struct PixelFeatures {
  Tensor position;  // H x W x 2, (i / (H - 1), j / (W - 1))
  Tensor color;     // H x W x 3

  static PixelFeatures from_image(const Tensor& image);
};

/// One-hot (background, contour) labels, H x W x 2.
struct GroundTruth {
  Tensor onehot;

  static GroundTruth from_mask(std::span<const std::uint8_t> mask, std::size_t height,
                               std::size_t width);
};

/// Mean over pixels of -eta * L_c * log(p) - (1 - L_c) * log(1 - p), where p
/// is derived from F's contour channel according to `mode`.
Tensor weighted_bce_f(Graph& g, const Tensor& fused, const Tensor& labels, double eta,
                      FLossMode mode);

/// Mean per-pixel cross-entropy of softmax(class_logits) against labels.
Tensor softmax_ce_c(Graph& g, const Tensor& class_logits, const Tensor& labels);

/// K x D segment centroids: sum_ij S_ijk A_ij / (sum_ij S_ijk + eps).
Tensor centroid_features(Graph& g, const Tensor& segments, const Tensor& features);

/// H x W x D reconstruction sum_k S_ijk A_k.
Tensor reconstruct(Graph& g, const Tensor& segments, const Tensor& centroids);

/// Cross-entropy between the one-hot labels and their reconstruction through
/// the segment centroids. In probability_nll mode the reconstruction is read
/// as probabilities (clamped); in paper_literal_sigmoid mode it is passed
/// through a softmax first.
Tensor label_reconstruction_ce(Graph& g, const Tensor& segments, const Tensor& labels,
                               FLossMode mode);

struct LabelCentricTerms {
  Tensor fused_bce;
  Tensor class_ce;
  Tensor reconstruction_ce;
  Tensor total;
};

LabelCentricTerms label_centric_terms(Graph& g, const Tensor& fused, const Tensor& class_logits,
                                      const Tensor& segments, const Tensor& labels,
                                      const LossWeights& weights);
Tensor label_centric_loss(Graph& g, const Tensor& fused, const Tensor& class_logits,
                          const Tensor& segments, const Tensor& labels,
                          const LossWeights& weights);

/// (1 / (H W K)) sum S_ijk^2, always returned with a positive sign.
Tensor partition_coefficient_loss(Graph& g, const Tensor& segments);

struct GranularityError {
  Tensor position;
  Tensor color;
};

GranularityError granularity_loss(Graph& g, const Tensor& segments, const PixelFeatures& features);

struct RegionCentricTerms {
  GranularityError granularity;
  Tensor partition_coefficient;
  Tensor total;
};

RegionCentricTerms region_centric_terms(Graph& g, const Tensor& segments,
                                        const PixelFeatures& features, PcSign sign);
Tensor region_centric_loss(Graph& g, const Tensor& segments, const PixelFeatures& features,
                           PcSign sign);

struct TotalLoss {
  LabelCentricTerms label_centric;
  RegionCentricTerms region_centric;
  Tensor total;  // lambda_c * L_c + lambda_r * L_r
};

TotalLoss total_loss(Graph& g, const Tensor& fused, const Tensor& class_logits,
                     const Tensor& segments, const Tensor& labels, const PixelFeatures& features,
                     const LossWeights& weights);

}  // namespace votenet::loss

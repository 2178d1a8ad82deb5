#include "votenet/losses/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace votenet::loss {

std::string to_string(PcSign sign) {
  return sign == PcSign::paper_literal ? "paper_literal" : "confidence_encouraging";
}

std::string to_string(FLossMode mode) {
  return mode == FLossMode::paper_literal_sigmoid ? "paper_literal_sigmoid" : "probability_nll";
}

PcSign parse_pc_sign(const std::string& text) {
  if (text == "paper_literal") return PcSign::paper_literal;
  if (text == "confidence_encouraging") return PcSign::confidence_encouraging;
  throw std::invalid_argument("unknown pc_sign '" + text + "'");
}

FLossMode parse_f_loss_mode(const std::string& text) {
  if (text == "paper_literal_sigmoid") return FLossMode::paper_literal_sigmoid;
  if (text == "probability_nll") return FLossMode::probability_nll;
  throw std::invalid_argument("unknown f_loss_mode '" + text + "'");
}

void LossWeights::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("loss: eta must be positive");
  if (!(lambda_c >= 0.0) || !(lambda_r >= 0.0)) {
    throw std::invalid_argument("loss: lambda_c and lambda_r must be non-negative");
  }
}

double default_eta(std::uint64_t background_pixels, std::uint64_t contour_pixels) {
  if (contour_pixels == 0) return 1.0;
  const double ratio = static_cast<double>(background_pixels) / static_cast<double>(contour_pixels);
  return std::clamp(ratio, 1.0, 10.0);
}

PixelFeatures PixelFeatures::from_image(const Tensor& image) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw ad::ShapeError("pixel features need an H x W x 3 image, got " + ad::shape_string(image.shape()));
  }
  const std::size_t h = image.dim(0), w = image.dim(1);
  std::vector<double> pos(h * w * 2);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      pos[(i * w + j) * 2] = h > 1 ? static_cast<double>(i) / static_cast<double>(h - 1) : 0.0;
      pos[(i * w + j) * 2 + 1] = w > 1 ? static_cast<double>(j) / static_cast<double>(w - 1) : 0.0;
    }
  }
  return {Tensor({h, w, 2}, std::move(pos)), image.clone()};
}

GroundTruth GroundTruth::from_mask(std::span<const std::uint8_t> mask, std::size_t height,
                                   std::size_t width) {
  if (mask.size() != height * width) throw ad::ShapeError("ground truth: mask size mismatch");
  std::vector<double> onehot(height * width * 2, 0.0);
  for (std::size_t i = 0; i < mask.size(); ++i) onehot[i * 2 + (mask[i] != 0 ? 1 : 0)] = 1.0;
  return {Tensor({height, width, 2}, std::move(onehot))};
}

namespace {

void require_map(const Tensor& t, std::size_t channels, const char* what) {
  if (t.rank() != 3 || t.dim(2) != channels) {
    throw ad::ShapeError(std::string(what) + ": expected H x W x " + std::to_string(channels) +
                         ", got " + ad::shape_string(t.shape()));
  }
}

void require_same_grid(const Tensor& a, const Tensor& b, const char* what) {
  if (a.dim(0) != b.dim(0) || a.dim(1) != b.dim(1)) {
    throw ad::ShapeError(std::string(what) + ": spatial size mismatch " + ad::shape_string(a.shape()) +
                         " vs " + ad::shape_string(b.shape()));
  }
}

double pixel_count(const Tensor& t) { return static_cast<double>(t.dim(0) * t.dim(1)); }

}  // namespace

Tensor weighted_bce_f(Graph& g, const Tensor& fused, const Tensor& labels, double eta,
                      FLossMode mode) {
  require_map(fused, 2, "weighted_bce_f");
  require_map(labels, 2, "weighted_bce_f labels");
  require_same_grid(fused, labels, "weighted_bce_f");
  const auto f = fused.data();
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (std::isnan(f[i])) throw ad::DomainError("weighted_bce_f: NaN in F at flat index " + std::to_string(i));
  }

  const Tensor contour = g.slice_last(fused, 1);
  const Tensor p = mode == FLossMode::paper_literal_sigmoid
                       ? g.sigmoid(contour)
                       : g.clamp(contour, kProbabilityClamp, 1.0 - kProbabilityClamp);
  const Tensor is_contour = g.slice_last(labels, 1);
  const Tensor is_background = g.affine(is_contour, -1.0, 1.0);

  const Tensor positive = g.scale(g.mul(is_contour, g.log(p)), -eta);
  const Tensor negative = g.scale(g.mul(is_background, g.log(g.affine(p, -1.0, 1.0))), -1.0);
  return g.mean(g.add(positive, negative));
}

Tensor softmax_ce_c(Graph& g, const Tensor& class_logits, const Tensor& labels) {
  require_map(class_logits, 2, "softmax_ce_c");
  require_map(labels, 2, "softmax_ce_c labels");
  require_same_grid(class_logits, labels, "softmax_ce_c");
  const Tensor log_probs = g.log_softmax(class_logits, 2);
  return g.scale(g.sum(g.mul(labels, log_probs)), -1.0 / pixel_count(labels));
}

Tensor centroid_features(Graph& g, const Tensor& segments, const Tensor& features) {
  if (segments.rank() != 3 || features.rank() != 3) {
    throw ad::ShapeError("centroid_features: expected H x W x K segments and H x W x D features");
  }
  require_same_grid(segments, features, "centroid_features");
  const std::size_t m = segments.dim(0) * segments.dim(1);
  const std::size_t k = segments.dim(2), d = features.dim(2);
  const Tensor s = g.reshape(segments, {m, k});
  const Tensor a = g.reshape(features, {m, d});
  const Tensor weighted = g.matmul(g.transpose(s), a);  // K x D
  const Tensor mass = g.affine(g.reduce(s, ad::ReduceKind::sum, {0}), 1.0, kCentroidEpsilon);
  return g.div(weighted, g.reshape(mass, {k, 1}));
}

Tensor reconstruct(Graph& g, const Tensor& segments, const Tensor& centroids) {
  if (segments.rank() != 3 || centroids.rank() != 2 || centroids.dim(0) != segments.dim(2)) {
    throw ad::ShapeError("reconstruct: segments " + ad::shape_string(segments.shape()) +
                         " and centroids " + ad::shape_string(centroids.shape()) + " disagree");
  }
  const std::size_t h = segments.dim(0), w = segments.dim(1), k = segments.dim(2);
  const Tensor s = g.reshape(segments, {h * w, k});
  return g.reshape(g.matmul(s, centroids), {h, w, centroids.dim(1)});
}

Tensor label_reconstruction_ce(Graph& g, const Tensor& segments, const Tensor& labels,
                               FLossMode mode) {
  require_map(labels, 2, "label_reconstruction_ce labels");
  const Tensor rebuilt = reconstruct(g, segments, centroid_features(g, segments, labels));
  const Tensor log_probs = mode == FLossMode::paper_literal_sigmoid
                               ? g.log_softmax(rebuilt, 2)
                               : g.log(g.clamp(rebuilt, kProbabilityClamp, 1.0 - kProbabilityClamp));
  return g.scale(g.sum(g.mul(labels, log_probs)), -1.0 / pixel_count(labels));
}

LabelCentricTerms label_centric_terms(Graph& g, const Tensor& fused, const Tensor& class_logits,
                                      const Tensor& segments, const Tensor& labels,
                                      const LossWeights& weights) {
  LabelCentricTerms t;
  t.fused_bce = weighted_bce_f(g, fused, labels, weights.eta, weights.f_loss_mode);
  t.class_ce = softmax_ce_c(g, class_logits, labels);
  t.reconstruction_ce = label_reconstruction_ce(g, segments, labels, weights.f_loss_mode);
  t.total = g.add(g.add(t.fused_bce, t.class_ce), t.reconstruction_ce);
  return t;
}

Tensor label_centric_loss(Graph& g, const Tensor& fused, const Tensor& class_logits,
                          const Tensor& segments, const Tensor& labels,
                          const LossWeights& weights) {
  return label_centric_terms(g, fused, class_logits, segments, labels, weights).total;
}

Tensor partition_coefficient_loss(Graph& g, const Tensor& segments) {
  return g.mean(g.square(segments));
}

GranularityError granularity_loss(Graph& g, const Tensor& segments, const PixelFeatures& features) {
  require_map(features.position, 2, "granularity_loss position");
  require_map(features.color, 3, "granularity_loss color");
  auto error = [&](const Tensor& a) {
    const Tensor rebuilt = reconstruct(g, segments, centroid_features(g, segments, a));
    return g.scale(g.sum(g.square(g.sub(a, rebuilt))), 1.0 / pixel_count(a));
  };
  return {error(features.position), error(features.color)};
}

RegionCentricTerms region_centric_terms(Graph& g, const Tensor& segments,
                                        const PixelFeatures& features, PcSign sign) {
  RegionCentricTerms t;
  t.granularity = granularity_loss(g, segments, features);
  t.partition_coefficient = partition_coefficient_loss(g, segments);
  const Tensor granular = g.add(t.granularity.position, t.granularity.color);
  t.total = sign == PcSign::paper_literal ? g.add(granular, t.partition_coefficient)
                                          : g.sub(granular, t.partition_coefficient);
  return t;
}

Tensor region_centric_loss(Graph& g, const Tensor& segments, const PixelFeatures& features,
                           PcSign sign) {
  return region_centric_terms(g, segments, features, sign).total;
}

TotalLoss total_loss(Graph& g, const Tensor& fused, const Tensor& class_logits,
                     const Tensor& segments, const Tensor& labels, const PixelFeatures& features,
                     const LossWeights& weights) {
  weights.validate();
  TotalLoss out;
  out.label_centric = label_centric_terms(g, fused, class_logits, segments, labels, weights);
  out.region_centric = region_centric_terms(g, segments, features, weights.pc_sign);
  out.total = g.add(g.scale(out.label_centric.total, weights.lambda_c),
                    g.scale(out.region_centric.total, weights.lambda_r));
  return out;
}

}  // namespace votenet::loss

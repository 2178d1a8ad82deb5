#include "votenet/network/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace votenet::net {

std::string to_string(CountMode mode) {
  return mode == CountMode::raw ? "raw" : "area_normalized";
}

CountMode parse_count_mode(const std::string& text) {
  if (text == "raw") return CountMode::raw;
  if (text == "area_normalized") return CountMode::area_normalized;
  throw std::invalid_argument("unknown count mode '" + text + "'");
}

void NetworkConfig::validate() const {
  if (segments < 2) throw std::invalid_argument("network: K must be at least 2");
  if (height < 8 || width < 8) throw std::invalid_argument("network: H and W must be at least 8");
  if (!(count_temperature > 0.0)) throw std::invalid_argument("network: count temperature must be positive");
  for (std::size_t w : widths) {
    if (w == 0) throw std::invalid_argument("network: channel widths must be positive");
  }
  for (double s : input_std) {
    if (!(s > 0.0)) throw std::invalid_argument("network: input std must be positive");
  }
}

void ParameterSet::add(std::string name, Tensor tensor) {
  for (const auto& [existing, _] : entries_) {
    if (existing == name) throw std::invalid_argument("duplicate parameter '" + name + "'");
  }
  entries_.emplace_back(std::move(name), std::move(tensor));
}

const Tensor& ParameterSet::get(const std::string& name) const {
  for (const auto& [key, t] : entries_) {
    if (key == name) return t;
  }
  throw std::out_of_range("no parameter named '" + name + "'");
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.size();
  return n;
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& [_, t] : entries_) out.push_back(t);
  return out;
}

ParameterSet ParameterSet::clone() const {
  ParameterSet copy;
  for (const auto& [name, t] : entries_) {
    Tensor c = t.clone();
    c.set_requires_grad(t.requires_grad());
    copy.add(name, c);
  }
  return copy;
}

namespace {

struct ConvSpec {
  const char* name;
  std::size_t k, cin, cout;
};

std::vector<ConvSpec> conv_specs(const NetworkConfig& c) {
  const auto& w = c.widths;
  return {
      {"enc0", 3, 3, w[0]},
      {"enc1", 3, w[0], w[1]},
      {"enc2", 3, w[1], w[2]},
      {"enc3", 3, w[2], w[3]},
      {"dec2", 3, w[3] + w[2], w[2]},
      {"dec1", 3, w[2] + w[1], w[1]},
      {"dec0", 3, w[1] + w[0], w[0]},
      {"head_s", 1, w[0], c.segments},
      {"head_c", 1, w[0], kClassCount},
  };
}

}  // namespace

std::vector<std::pair<std::string, ad::Shape>> parameter_layout(const NetworkConfig& config) {
  std::vector<std::pair<std::string, ad::Shape>> layout;
  for (const ConvSpec& s : conv_specs(config)) {
    layout.emplace_back(std::string(s.name) + ".weight", ad::Shape{s.k, s.k, s.cin, s.cout});
    layout.emplace_back(std::string(s.name) + ".bias", ad::Shape{s.cout});
  }
  return layout;
}

ParameterSet init_parameters(const NetworkConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParameterSet params;
  for (const ConvSpec& s : conv_specs(config)) {
    const double bound = std::sqrt(6.0 / static_cast<double>(s.k * s.k * s.cin));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> weight(s.k * s.k * s.cin * s.cout);
    for (double& v : weight) v = dist(rng);
    params.add(std::string(s.name) + ".weight", Tensor({s.k, s.k, s.cin, s.cout}, std::move(weight), true));
    params.add(std::string(s.name) + ".bias", Tensor::zeros({s.cout}, true));
  }
  return params;
}

namespace {

Tensor conv(Graph& g, const ParameterSet& p, const std::string& name, const Tensor& x,
            std::size_t stride) {
  const Tensor y = g.conv2d(x, p.get(name + ".weight"), stride, ad::Padding::same);
  return g.add(y, p.get(name + ".bias"));
}

}  // namespace

BackboneOutput backbone_forward(Graph& graph, const Tensor& image, const NetworkConfig& config,
                                const ParameterSet& params) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw ad::ShapeError("backbone: expected an H x W x 3 image, got " + ad::shape_string(image.shape()));
  }
  if (image.dim(0) % kDownsampling != 0 || image.dim(1) % kDownsampling != 0) {
    throw ad::ShapeError("backbone: image dimensions " + ad::shape_string(image.shape()) +
                         " must be divisible by " + std::to_string(kDownsampling));
  }
  if (params.size() != parameter_layout(config).size()) {
    throw std::invalid_argument("backbone: parameter set does not match the configuration");
  }
  Graph& g = graph;
  const Tensor mean({3}, {config.input_mean[0], config.input_mean[1], config.input_mean[2]});
  const Tensor inv_std({3}, {1.0 / config.input_std[0], 1.0 / config.input_std[1], 1.0 / config.input_std[2]});
  const Tensor x = g.mul(g.sub(image, mean), inv_std);
  const Tensor e0 = g.relu(conv(g, params, "enc0", x, 1));
  const Tensor e1 = g.relu(conv(g, params, "enc1", e0, 2));
  const Tensor e2 = g.relu(conv(g, params, "enc2", e1, 2));
  const Tensor e3 = g.relu(conv(g, params, "enc3", e2, 2));

  auto up = [&](const Tensor& t) { return g.resize_nearest(t, 2, ad::ResizeDirection::up); };
  const Tensor d2 = g.relu(conv(g, params, "dec2", g.concat_last(up(e3), e2), 1));
  const Tensor d1 = g.relu(conv(g, params, "dec1", g.concat_last(up(d2), e1), 1));
  const Tensor d0 = g.relu(conv(g, params, "dec0", g.concat_last(up(d1), e0), 1));

  return {conv(g, params, "head_s", d0, 1), conv(g, params, "head_c", d0, 1)};
}

SegmentStack segment_softmax(Graph& graph, const Tensor& segment_logits) {
  if (segment_logits.rank() != 3) {
    throw ad::ShapeError("segment_softmax: expected H x W x K, got " +
                         ad::shape_string(segment_logits.shape()));
  }
  return {graph.softmax(segment_logits, 2)};
}

VoteOutcome voting_block(Graph& graph, const Tensor& segment, const Tensor& class_probs,
                         double temperature, CountMode mode) {
  if (!(temperature > 0.0)) throw std::invalid_argument("voting_block: temperature must be positive");
  if (class_probs.rank() != 3 || class_probs.dim(2) != kClassCount) {
    throw ad::ShapeError("voting_block: class map must be H x W x 2, got " +
                         ad::shape_string(class_probs.shape()));
  }
  Tensor slice = segment;
  if (segment.rank() == 2) slice = graph.reshape(segment, {segment.dim(0), segment.dim(1), 1});
  if (slice.rank() != 3 || slice.dim(2) != 1 || slice.dim(0) != class_probs.dim(0) ||
      slice.dim(1) != class_probs.dim(1)) {
    throw ad::ShapeError("voting_block: segment " + ad::shape_string(segment.shape()) +
                         " does not match class map " + ad::shape_string(class_probs.shape()));
  }

  const Tensor area_of_interest = graph.mul(slice, class_probs);
  Tensor counts = graph.reduce(area_of_interest, ad::ReduceKind::sum, {0, 1});
  if (mode == CountMode::area_normalized) {
    const Tensor area = graph.affine(graph.sum(slice), 1.0, kSegmentEpsilon);
    counts = graph.div(counts, area);
  }
  const Tensor probs = graph.softmax(graph.scale(counts, 1.0 / temperature), 0);
  const Tensor mask = graph.mul(slice, probs);
  return {counts, probs, mask};
}

FusedMap fusion_block(Graph& graph, const SegmentStack& segments, const Tensor& class_probs,
                      const NetworkConfig& config) {
  const Tensor& s = segments.memberships;
  if (s.rank() != 3) throw ad::ShapeError("fusion_block: segments must be H x W x K");
  if (s.dim(2) != config.segments) {
    throw ad::ShapeError("fusion_block: segment stack has K=" + std::to_string(s.dim(2)) +
                         " but configuration expects K=" + std::to_string(config.segments));
  }
  Tensor fused;
  for (std::size_t k = 0; k < s.dim(2); ++k) {
    const Tensor slice = graph.slice_last(s, k);
    const VoteOutcome vote =
        voting_block(graph, slice, class_probs, config.count_temperature, config.count_mode);
    fused = k == 0 ? vote.mask : graph.add(fused, vote.mask);
  }
  return {fused};
}

ForwardResult forward(Graph& graph, const Tensor& image, const NetworkConfig& config,
                      const ParameterSet& params) {
  const BackboneOutput heads = backbone_forward(graph, image, config, params);
  SegmentStack segments = segment_softmax(graph, heads.segment_logits);
  const Tensor class_probs = graph.softmax(heads.class_logits, 2);
  FusedMap fused = fusion_block(graph, segments, class_probs, config);
  return {std::move(segments), heads.class_logits, class_probs, std::move(fused)};
}

}  // namespace votenet::net

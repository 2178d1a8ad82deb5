#include "votenet/cli/gradcheck_suite.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "votenet/losses/losses.hpp"
#include "votenet/network/network.hpp"

namespace votenet::cli {

namespace {

using ad::Graph;
using ad::Tensor;

Tensor random_tensor(ad::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(ad::element_count(shape));
  for (double& x : v) x = dist(rng);
  return Tensor(std::move(shape), std::move(v));
}

/// Values bounded away from zero, for ops with a kink or pole there.
Tensor away_from_zero(ad::Shape shape, std::uint64_t seed) {
  Tensor t = random_tensor(std::move(shape), seed, 0.2, 1.0);
  std::mt19937_64 rng(seed + 1);
  for (double& x : t.mutable_data()) {
    if (rng() & 1) x = -x;
  }
  return t;
}

Tensor softmax_rows(const Tensor& logits, std::size_t axis) {
  Graph g(false);
  return g.softmax(logits, axis);
}

Tensor onehot_labels(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> mask(h * w);
  for (auto& m : mask) m = static_cast<std::uint8_t>(rng() % 3 == 0);
  mask[0] = 1;
  mask[1] = 0;
  return loss::GroundTruth::from_mask(mask, h, w).onehot;
}

/// Contracts an arbitrary tensor to a scalar with fixed pseudo-random
/// weights, so every output element contributes a distinct adjoint.
Tensor contract(Graph& g, const Tensor& t, std::uint64_t seed = 99) {
  return g.sum(g.mul(t, random_tensor(t.shape(), seed)));
}

GradCheckCase unary(std::string name, Tensor input,
                    std::function<Tensor(Graph&, const Tensor&)> op) {
  return {std::move(name), [input, op] {
            return ad::grad_check(
                [op](Graph& g, std::span<const Tensor> in) { return contract(g, op(g, in[0])); },
                {input.clone()});
          }};
}

GradCheckCase binary(std::string name, Tensor a, Tensor b,
                     std::function<Tensor(Graph&, const Tensor&, const Tensor&)> op) {
  return {std::move(name), [a, b, op] {
            return ad::grad_check(
                [op](Graph& g, std::span<const Tensor> in) {
                  return contract(g, op(g, in[0], in[1]));
                },
                {a.clone(), b.clone()});
          }};
}

GradCheckCase scalar_case(std::string name, std::vector<Tensor> inputs, ad::ScalarBuilder builder) {
  return {std::move(name), [inputs, builder] {
            std::vector<Tensor> copies;
            for (const Tensor& t : inputs) copies.push_back(t.clone());
            return ad::grad_check(builder, std::move(copies));
          }};
}

net::NetworkConfig tiny_network() {
  net::NetworkConfig c;
  c.segments = 3;
  c.height = 8;
  c.width = 8;
  c.widths = {3, 3, 4, 4};
  return c;
}

net::ParameterSet as_params(const net::NetworkConfig& config, std::span<const Tensor> tensors) {
  net::ParameterSet p;
  const auto layout = net::parameter_layout(config);
  for (std::size_t i = 0; i < layout.size(); ++i) p.add(layout[i].first, tensors[i]);
  return p;
}

std::vector<Tensor> param_tensors(const net::NetworkConfig& config, std::uint64_t seed) {
  std::vector<Tensor> out;
  std::size_t i = 0;
  const net::ParameterSet init = net::init_parameters(config, seed);
  for (const auto& [name, tensor] : init.entries()) {
    Tensor t = tensor.clone();
    // Non-zero biases so their gradients are exercised away from the init.
    if (t.rank() == 1) t = random_tensor(t.shape(), seed + 17 * ++i, -0.1, 0.1);
    out.push_back(t);
  }
  return out;
}

}  // namespace

std::vector<GradCheckCase> gradcheck_cases(bool inject_bug) {
  using ad::ElementwiseKind;
  std::vector<GradCheckCase> cases;
  const ad::Shape s23{2, 3};

  cases.push_back(binary("add", random_tensor(s23, 1), random_tensor(s23, 2),
                         [](Graph& g, const Tensor& a, const Tensor& b) { return g.add(a, b); }));
  cases.push_back(binary("add_broadcast", random_tensor({2, 3, 2}, 3), random_tensor({2}, 4),
                         [](Graph& g, const Tensor& a, const Tensor& b) { return g.add(a, b); }));
  cases.push_back(binary("sub", random_tensor(s23, 5), random_tensor({2, 1}, 6),
                         [](Graph& g, const Tensor& a, const Tensor& b) { return g.sub(a, b); }));
  cases.push_back(binary("mul", random_tensor(s23, 7), random_tensor(s23, 8),
                         [](Graph& g, const Tensor& a, const Tensor& b) { return g.mul(a, b); }));
  cases.push_back(binary("mul_scalar_broadcast", random_tensor(s23, 9), random_tensor({}, 10),
                         [](Graph& g, const Tensor& a, const Tensor& b) { return g.mul(a, b); }));
  cases.push_back(binary("div", random_tensor(s23, 11), random_tensor(s23, 12, 0.5, 2.0),
                         [](Graph& g, const Tensor& a, const Tensor& b) { return g.div(a, b); }));
  cases.push_back(unary("log", random_tensor(s23, 13, 0.2, 2.0),
                        [](Graph& g, const Tensor& a) { return g.log(a); }));
  cases.push_back(unary("exp", random_tensor(s23, 14),
                        [](Graph& g, const Tensor& a) { return g.exp(a); }));
  cases.push_back(unary("sigmoid", random_tensor(s23, 15, -3.0, 3.0),
                        [](Graph& g, const Tensor& a) { return g.sigmoid(a); }));
  cases.push_back(unary("relu", away_from_zero(s23, 16),
                        [](Graph& g, const Tensor& a) { return g.relu(a); }));
  cases.push_back(unary("square", random_tensor(s23, 17),
                        [](Graph& g, const Tensor& a) { return g.square(a); }));
  cases.push_back(unary("affine", random_tensor(s23, 18),
                        [](Graph& g, const Tensor& a) { return g.affine(a, -1.7, 0.3); }));
  cases.push_back(unary("clamp", away_from_zero({3, 4}, 19),
                        [](Graph& g, const Tensor& a) { return g.clamp(a, -0.5, 0.5); }));
  cases.push_back(unary("softmax_axis0", random_tensor({3, 4}, 20, -2.0, 2.0),
                        [](Graph& g, const Tensor& a) { return g.softmax(a, 0); }));
  cases.push_back(unary("softmax_axis2", random_tensor({2, 3, 4}, 21, -2.0, 2.0),
                        [](Graph& g, const Tensor& a) { return g.softmax(a, 2); }));
  cases.push_back(unary("log_softmax", random_tensor({2, 3, 4}, 22, -2.0, 2.0),
                        [](Graph& g, const Tensor& a) { return g.log_softmax(a, 1); }));
  cases.push_back(unary("reduce_sum_axes01", random_tensor({2, 3, 4}, 23),
                        [](Graph& g, const Tensor& a) {
                          return g.reduce(a, ad::ReduceKind::sum, {0, 1});
                        }));
  cases.push_back(unary("reduce_mean_axis2", random_tensor({2, 3, 4}, 24),
                        [](Graph& g, const Tensor& a) {
                          return g.reduce(a, ad::ReduceKind::mean, {2});
                        }));
  cases.push_back(unary("sum_all", random_tensor({2, 3}, 25),
                        [](Graph& g, const Tensor& a) { return g.sum(a); }));
  cases.push_back(unary("mean_all", random_tensor({2, 3}, 26),
                        [](Graph& g, const Tensor& a) { return g.mean(a); }));
  cases.push_back(binary("conv2d_same_s1", random_tensor({5, 6, 2}, 27), random_tensor({3, 3, 2, 3}, 28),
                         [](Graph& g, const Tensor& x, const Tensor& k) {
                           return g.conv2d(x, k, 1, ad::Padding::same);
                         }));
  cases.push_back(binary("conv2d_same_s2", random_tensor({7, 6, 2}, 29), random_tensor({3, 3, 2, 2}, 30),
                         [](Graph& g, const Tensor& x, const Tensor& k) {
                           return g.conv2d(x, k, 2, ad::Padding::same);
                         }));
  cases.push_back(binary("conv2d_valid_s2", random_tensor({7, 8, 2}, 31), random_tensor({3, 2, 2, 3}, 32),
                         [](Graph& g, const Tensor& x, const Tensor& k) {
                           return g.conv2d(x, k, 2, ad::Padding::valid);
                         }));
  cases.push_back(binary("conv2d_1x1", random_tensor({4, 4, 3}, 33), random_tensor({1, 1, 3, 2}, 34),
                         [](Graph& g, const Tensor& x, const Tensor& k) {
                           return g.conv2d(x, k, 1, ad::Padding::same);
                         }));
  cases.push_back(unary("resize_up", random_tensor({2, 3, 2}, 35), [](Graph& g, const Tensor& a) {
    return g.resize_nearest(a, 2, ad::ResizeDirection::up);
  }));
  cases.push_back(unary("resize_down", random_tensor({4, 6, 2}, 36), [](Graph& g, const Tensor& a) {
    return g.resize_nearest(a, 2, ad::ResizeDirection::down);
  }));
  cases.push_back(binary("concat_last", random_tensor({2, 3, 2}, 37), random_tensor({2, 3, 1}, 38),
                         [](Graph& g, const Tensor& a, const Tensor& b) { return g.concat_last(a, b); }));
  cases.push_back(unary("slice_last", random_tensor({2, 3, 4}, 39),
                        [](Graph& g, const Tensor& a) { return g.slice_last(a, 1, 2); }));
  cases.push_back(unary("reshape", random_tensor({2, 3, 2}, 40),
                        [](Graph& g, const Tensor& a) { return g.reshape(a, {3, 4}); }));
  cases.push_back(binary("matmul", random_tensor({3, 4}, 41), random_tensor({4, 2}, 42),
                         [](Graph& g, const Tensor& a, const Tensor& b) { return g.matmul(a, b); }));
  cases.push_back(unary("transpose", random_tensor({3, 4}, 43),
                        [](Graph& g, const Tensor& a) { return g.transpose(a); }));

  // Loss terms on 8 x 8 maps with K = 3.
  const std::size_t h = 8, w = 8, k = 3;
  const Tensor labels = onehot_labels(h, w, 50);
  const Tensor image = random_tensor({h, w, 3}, 51, 0.0, 1.0);
  const loss::PixelFeatures features = loss::PixelFeatures::from_image(image);
  const Tensor fused = softmax_rows(random_tensor({h, w, 2}, 52, -2.0, 2.0), 2);
  const Tensor class_logits = random_tensor({h, w, 2}, 53, -2.0, 2.0);
  const Tensor seg_logits = random_tensor({h, w, k}, 54, -2.0, 2.0);

  for (loss::FLossMode mode : {loss::FLossMode::probability_nll, loss::FLossMode::paper_literal_sigmoid}) {
    cases.push_back(scalar_case("weighted_bce_f/" + loss::to_string(mode), {fused},
                                [labels, mode](Graph& g, std::span<const Tensor> in) {
                                  return loss::weighted_bce_f(g, in[0], labels, 2.5, mode);
                                }));
  }
  cases.push_back(scalar_case("softmax_ce_c", {class_logits},
                              [labels](Graph& g, std::span<const Tensor> in) {
                                return loss::softmax_ce_c(g, in[0], labels);
                              }));
  cases.push_back(scalar_case("centroid_features", {seg_logits, image},
                              [](Graph& g, std::span<const Tensor> in) {
                                return contract(g, loss::centroid_features(g, g.softmax(in[0], 2), in[1]));
                              }));
  cases.push_back(scalar_case("reconstruct", {seg_logits, random_tensor({k, 3}, 55)},
                              [](Graph& g, std::span<const Tensor> in) {
                                return contract(g, loss::reconstruct(g, g.softmax(in[0], 2), in[1]));
                              }));
  for (loss::FLossMode mode : {loss::FLossMode::probability_nll, loss::FLossMode::paper_literal_sigmoid}) {
    cases.push_back(scalar_case("label_reconstruction_ce/" + loss::to_string(mode), {seg_logits},
                                [labels, mode](Graph& g, std::span<const Tensor> in) {
                                  return loss::label_reconstruction_ce(g, g.softmax(in[0], 2), labels,
                                                                       mode);
                                }));
  }
  cases.push_back(scalar_case("label_centric_loss", {fused, class_logits, seg_logits},
                              [labels](Graph& g, std::span<const Tensor> in) {
                                loss::LossWeights wts;
                                wts.eta = 3.0;
                                return loss::label_centric_loss(g, in[0], in[1], g.softmax(in[2], 2),
                                                                labels, wts);
                              }));
  cases.push_back(scalar_case("partition_coefficient", {seg_logits},
                              [](Graph& g, std::span<const Tensor> in) {
                                return loss::partition_coefficient_loss(g, g.softmax(in[0], 2));
                              }));
  cases.push_back(scalar_case("granularity_position", {seg_logits},
                              [features](Graph& g, std::span<const Tensor> in) {
                                return loss::granularity_loss(g, g.softmax(in[0], 2), features).position;
                              }));
  cases.push_back(scalar_case("granularity_color", {seg_logits},
                              [features](Graph& g, std::span<const Tensor> in) {
                                return loss::granularity_loss(g, g.softmax(in[0], 2), features).color;
                              }));
  for (loss::PcSign sign : {loss::PcSign::confidence_encouraging, loss::PcSign::paper_literal}) {
    cases.push_back(scalar_case("region_centric_loss/" + loss::to_string(sign), {seg_logits},
                                [features, sign](Graph& g, std::span<const Tensor> in) {
                                  return loss::region_centric_loss(g, g.softmax(in[0], 2), features, sign);
                                }));
  }
  cases.push_back(scalar_case("total_loss", {fused, class_logits, seg_logits},
                              [labels, features](Graph& g, std::span<const Tensor> in) {
                                loss::LossWeights wts;
                                wts.eta = 2.0;
                                wts.lambda_c = 0.7;
                                wts.lambda_r = 1.3;
                                return loss::total_loss(g, in[0], in[1], g.softmax(in[2], 2), labels,
                                                        features, wts)
                                    .total;
                              }));

  // Network blocks.
  for (net::CountMode mode : {net::CountMode::raw, net::CountMode::area_normalized}) {
    const double tau = mode == net::CountMode::raw ? 10.0 : 0.5;
    cases.push_back(scalar_case("voting_block/" + net::to_string(mode), {seg_logits, class_logits},
                                [mode, tau](Graph& g, std::span<const Tensor> in) {
                                  const Tensor s = g.slice_last(g.softmax(in[0], 2), 1);
                                  const Tensor c = g.softmax(in[1], 2);
                                  return contract(g, net::voting_block(g, s, c, tau, mode).mask);
                                }));
  }
  cases.push_back(scalar_case("fusion_block", {seg_logits, class_logits},
                              [](Graph& g, std::span<const Tensor> in) {
                                net::NetworkConfig c = tiny_network();
                                c.count_temperature = 0.5;
                                const net::SegmentStack s = net::segment_softmax(g, in[0]);
                                return contract(g, net::fusion_block(g, s, g.softmax(in[1], 2), c).fused);
                              }));

  const net::NetworkConfig tiny = tiny_network();
  {
    std::vector<Tensor> inputs = param_tensors(tiny, 60);
    inputs.push_back(image);
    cases.push_back(scalar_case("backbone", inputs, [tiny](Graph& g, std::span<const Tensor> in) {
      const net::ParameterSet p = as_params(tiny, in);
      const net::BackboneOutput out = net::backbone_forward(g, in.back(), tiny, p);
      return g.add(contract(g, out.segment_logits, 1), contract(g, out.class_logits, 2));
    }));
  }
  {
    net::NetworkConfig e2e = tiny;
    e2e.count_temperature = 0.5;
    std::vector<Tensor> inputs = param_tensors(e2e, 61);
    inputs.push_back(image);
    cases.push_back(scalar_case("end_to_end_total_loss", inputs,
                                [e2e, labels](Graph& g, std::span<const Tensor> in) {
                                  const net::ParameterSet p = as_params(e2e, in);
                                  const net::ForwardResult out = net::forward(g, in.back(), e2e, p);
                                  loss::LossWeights wts;
                                  wts.eta = 2.0;
                                  // Features from the image input itself, so the
                                  // colour path is differentiated too.
                                  loss::PixelFeatures f = loss::PixelFeatures::from_image(in.back());
                                  f.color = in.back();
                                  return loss::total_loss(g, out.fused.fused, out.class_logits,
                                                          out.segments.memberships, labels, f, wts)
                                      .total;
                                }));
  }

  if (inject_bug) {
    cases.push_back(unary("injected_bug_wrong_adjoint", random_tensor(s23, 70),
                          [](Graph& g, const Tensor& a) {
                            return g.map(
                                a, [](double x) { return std::sin(x); },
                                [](double x) { return 1.1 * std::cos(x); });
                          }));
  }
  return cases;
}

std::vector<GradCheckRow> run_gradcheck_suite(const std::vector<GradCheckCase>& cases) {
  std::vector<GradCheckRow> rows;
  rows.reserve(cases.size());
  for (const GradCheckCase& c : cases) rows.push_back({c.name, c.run()});
  return rows;
}

bool all_passed(const std::vector<GradCheckRow>& rows) {
  for (const GradCheckRow& r : rows) {
    if (!r.report.passed) return false;
  }
  return true;
}

void write_gradcheck_csv(std::ostream& out, const std::vector<GradCheckRow>& rows) {
  out << "check,max_relative_error,elements,status\n";
  char buf[64];
  for (const GradCheckRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.3e", r.report.max_relative_error);
    out << r.name << ',' << buf << ',' << r.report.elements_checked << ','
        << (r.report.passed ? "pass" : "FAIL") << '\n';
  }
}

}  // namespace votenet::cli

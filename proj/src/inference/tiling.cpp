#include "votenet/inference/tiling.hpp"

#include <stdexcept>
#include <string>

namespace votenet::infer {

std::vector<std::size_t> axis_positions(std::size_t extent, std::size_t window, std::size_t stride,
                                        EdgePolicy edge) {
  if (stride == 0) throw std::invalid_argument("tiling: stride must be positive");
  if (window == 0 || window > extent) {
    throw std::invalid_argument("tiling: window " + std::to_string(window) + " exceeds image extent " +
                                std::to_string(extent));
  }
  std::vector<std::size_t> out;
  if (edge == EdgePolicy::pad) {
    for (std::size_t p = 0; p < extent; p += stride) out.push_back(p);
    return out;
  }
  std::size_t p = 0;
  for (; p + window < extent; p += stride) out.push_back(p);
  const std::size_t last = extent - window;
  if (out.empty() || out.back() < last) out.push_back(last);
  return out;
}

TilePlan plan_tiles(std::size_t height, std::size_t width, std::size_t window, std::size_t stride,
                    EdgePolicy edge) {
  TilePlan plan{height, width, window, stride, edge, {}};
  const auto ys = axis_positions(height, window, stride, edge);
  const auto xs = axis_positions(width, window, stride, edge);
  for (std::size_t y : ys)
    for (std::size_t x : xs) plan.origins.push_back({y, x});
  return plan;
}

std::vector<std::uint8_t> PredictionMap::hard_labels() const {
  std::vector<std::uint8_t> out(height * width);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = probabilities[i * 2 + 1] > probabilities[i * 2] ? 1 : 0;
  }
  return out;
}

namespace {

std::size_t mirror(std::ptrdiff_t v, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  v %= period;
  if (v < 0) v += period;
  if (v > static_cast<std::ptrdiff_t>(n - 1)) v = period - v;
  return static_cast<std::size_t>(v);
}

}  // namespace

PredictionMap predict_image(const ad::Tensor& image, const WindowPredictor& predictor,
                            const TilePlan& plan) {
  if (image.rank() != 3 || image.dim(0) != plan.height || image.dim(1) != plan.width) {
    throw std::invalid_argument("predict_image: image " + ad::shape_string(image.shape()) +
                                " does not match the tile plan " + std::to_string(plan.height) + "x" +
                                std::to_string(plan.width));
  }
  const std::size_t h = plan.height, w = plan.width, win = plan.window, c = image.dim(2);
  PredictionMap map;
  map.height = h;
  map.width = w;
  map.probabilities.assign(h * w * 2, 0.0);
  map.counts.assign(h * w, 0);
  map.segment_labels.assign(h * w, -1);
  const auto src = image.data();

  std::int64_t window_index = 0;
  for (const TileOrigin& o : plan.origins) {
    std::vector<double> crop(win * win * c);
    for (std::size_t y = 0; y < win; ++y) {
      const std::size_t sy = mirror(static_cast<std::ptrdiff_t>(o.y + y), h);
      for (std::size_t x = 0; x < win; ++x) {
        const std::size_t sx = mirror(static_cast<std::ptrdiff_t>(o.x + x), w);
        for (std::size_t ch = 0; ch < c; ++ch) crop[(y * win + x) * c + ch] = src[(sy * w + sx) * c + ch];
      }
    }
    const WindowPrediction pred = predictor(ad::Tensor({win, win, c}, std::move(crop)));
    if (pred.fused.shape() != ad::Shape{win, win, 2}) {
      throw std::runtime_error("predict_image: predictor returned shape " +
                               ad::shape_string(pred.fused.shape()));
    }
    const auto f = pred.fused.data();
    for (std::size_t y = 0; y < win && o.y + y < h; ++y) {
      for (std::size_t x = 0; x < win && o.x + x < w; ++x) {
        const std::size_t p = (o.y + y) * w + (o.x + x);
        const std::size_t q = y * win + x;
        map.probabilities[p * 2] += f[q * 2];
        map.probabilities[p * 2 + 1] += f[q * 2 + 1];
        map.counts[p] += 1;
        if (!pred.segments.empty()) {
          map.segment_labels[p] = window_index * 65536 + pred.segments[q];
        }
      }
    }
    ++window_index;
  }
  map.windows = plan.origins.size();
  for (std::size_t p = 0; p < h * w; ++p) {
    if (map.counts[p] == 0) throw std::logic_error("predict_image: plan leaves a pixel uncovered");
    map.probabilities[p * 2] /= map.counts[p];
    map.probabilities[p * 2 + 1] /= map.counts[p];
  }
  return map;
}

}  // namespace votenet::infer

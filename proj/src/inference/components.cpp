#include "votenet/inference/components.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace votenet::infer {

std::vector<const Component*> ComponentSet::eligible() const {
  std::vector<const Component*> out;
  for (const Component& c : components)
    if (c.area() >= min_area) out.push_back(&c);
  return out;
}

std::vector<const Component*> ComponentSet::ineligible() const {
  std::vector<const Component*> out;
  for (const Component& c : components)
    if (c.area() < min_area) out.push_back(&c);
  return out;
}

namespace {

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

template <typename Label>
ComponentSet label_components(std::span<const Label> labels, std::size_t h, std::size_t w,
                              std::size_t min_area) {
  if (labels.size() != h * w) throw std::invalid_argument("connected_components: label size mismatch");
  DisjointSet sets(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t p = y * w + x;
      if (x > 0 && labels[p - 1] == labels[p]) sets.unite(p, p - 1);
      if (y > 0 && labels[p - w] == labels[p]) sets.unite(p, p - w);
    }
  }
  ComponentSet out{h, w, min_area, {}};
  std::vector<std::size_t> slot(h * w, SIZE_MAX);
  for (std::size_t p = 0; p < h * w; ++p) {
    const std::size_t root = sets.find(p);
    if (slot[root] == SIZE_MAX) {
      slot[root] = out.components.size();
      out.components.push_back({out.components.size(), static_cast<std::int64_t>(labels[p]), {}});
    }
    out.components[slot[root]].pixels.push_back(p);
  }
  return out;
}

}  // namespace

ComponentSet connected_components(std::span<const std::int64_t> labels, std::size_t height,
                                  std::size_t width, std::size_t min_area) {
  return label_components(labels, height, width, min_area);
}

ComponentSet connected_components(std::span<const std::uint8_t> labels, std::size_t height,
                                  std::size_t width, std::size_t min_area) {
  return label_components(labels, height, width, min_area);
}

std::size_t default_min_area(std::size_t height, std::size_t width) {
  const double scaled = 2000.0 * static_cast<double>(height * width) / (512.0 * 512.0);
  return std::max<std::size_t>(16, static_cast<std::size_t>(std::lround(scaled)));
}

std::vector<std::uint8_t> majority_vote(std::span<const std::uint8_t> hard_labels,
                                        const std::vector<std::vector<std::size_t>>& segments) {
  std::vector<std::uint8_t> out(hard_labels.begin(), hard_labels.end());
  std::vector<bool> claimed(hard_labels.size(), false);
  for (const auto& segment : segments) {
    std::size_t contour = 0;
    for (std::size_t p : segment) {
      if (p >= hard_labels.size()) throw std::invalid_argument("majority_vote: pixel index out of range");
      if (claimed[p]) throw std::invalid_argument("majority_vote: segments overlap");
      claimed[p] = true;
      contour += hard_labels[p] != 0 ? 1 : 0;
    }
    const std::uint8_t winner = 2 * contour > segment.size() ? 1 : 0;
    for (std::size_t p : segment) out[p] = winner;
  }
  return out;
}

std::vector<std::uint8_t> majority_vote_postprocess(
    const PredictionMap& prediction, const std::vector<std::vector<std::size_t>>& segments) {
  return majority_vote(prediction.hard_labels(), segments);
}

std::vector<std::vector<std::size_t>> voting_segments(const PredictionMap& prediction,
                                                      std::size_t min_area) {
  const ComponentSet set =
      connected_components(std::span<const std::int64_t>(prediction.segment_labels),
                           prediction.height, prediction.width, min_area);
  std::vector<std::vector<std::size_t>> out;
  for (const Component* c : set.eligible()) {
    if (c->label < 0) continue;
    out.push_back(c->pixels);
  }
  return out;
}

}  // namespace votenet::infer

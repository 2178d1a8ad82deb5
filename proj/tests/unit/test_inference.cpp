#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "../support/oracles.hpp"
#include "votenet/inference/components.hpp"
#include "votenet/inference/harness.hpp"
#include "votenet/inference/metrics.hpp"
#include "votenet/inference/overlay.hpp"
#include "votenet/inference/tiling.hpp"
#include "votenet/network/network.hpp"

using namespace votenet;
using ad::Tensor;
using infer::EdgePolicy;

namespace {

// Predictor that replays a fixed list of window outputs in call order.
struct ReplayPredictor {
  std::vector<Tensor> outputs;
  std::shared_ptr<std::size_t> calls = std::make_shared<std::size_t>(0);
  infer::WindowPrediction operator()(const Tensor&) const {
    return {outputs.at((*calls)++ % outputs.size()), {}};
  }
};

Tensor random_probs(std::size_t win, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor t = Tensor::zeros({win, win, 2});
  for (std::size_t p = 0; p < win * win; ++p) {
    const double v = u(rng);
    t.mutable_data()[p * 2] = 1 - v;
    t.mutable_data()[p * 2 + 1] = v;
  }
  return t;
}

infer::WindowPredictor constant_predictor(double contour) {
  return [contour](const Tensor& w) {
    Tensor t = Tensor::zeros({w.dim(0), w.dim(1), 2});
    for (std::size_t p = 0; p < w.dim(0) * w.dim(1); ++p) {
      t.mutable_data()[p * 2] = 1 - contour;
      t.mutable_data()[p * 2 + 1] = contour;
    }
    return infer::WindowPrediction{t, {}};
  };
}

infer::PredictionMap map_from_labels(const std::vector<std::uint8_t>& labels, std::size_t h,
                                     std::size_t w) {
  infer::PredictionMap m;
  m.height = h;
  m.width = w;
  m.counts.assign(h * w, 1);
  m.segment_labels.assign(h * w, -1);
  for (auto l : labels) {
    m.probabilities.push_back(l ? 0.2 : 0.8);
    m.probabilities.push_back(l ? 0.8 : 0.2);
  }
  return m;
}

}  // namespace

TEST(Tiling, SingleWindow) {
  EXPECT_EQ(infer::plan_tiles(512, 512, 512, 512).size(), 1u);
}

TEST(Tiling, ClampEnumeration) {
  const auto plan = infer::plan_tiles(100, 100, 64, 32);
  ASSERT_EQ(plan.size(), 9u);
  std::vector<infer::TileOrigin> expect;
  for (std::size_t y : {0, 32, 36})
    for (std::size_t x : {0, 32, 36}) expect.push_back({y, x});
  EXPECT_EQ(plan.origins, expect);
}

TEST(Tiling, PaddedCountsReproduceTableOneLayout) {
  EXPECT_EQ(infer::plan_tiles(4608, 4608, 512, 512, EdgePolicy::pad).size(), 81u);
  EXPECT_EQ(infer::plan_tiles(4608, 4608, 512, 256, EdgePolicy::pad).size(), 324u);
  EXPECT_EQ(infer::plan_tiles(4608, 4608, 512, 128, EdgePolicy::pad).size(), 1296u);
}

TEST(Tiling, PlansCoverEveryPixelInRasterOrder) {
  for (auto edge : {EdgePolicy::clamp, EdgePolicy::pad}) {
    for (std::size_t stride : {1, 7, 16, 64}) {
      const auto plan = infer::plan_tiles(90, 75, 64, stride, edge);
      std::vector<int> cover(90 * 75, 0);
      for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto& o = plan.origins[i];
        if (i > 0) {
          const auto& prev = plan.origins[i - 1];
          EXPECT_TRUE(prev.y < o.y || (prev.y == o.y && prev.x < o.x));
        }
        for (std::size_t y = o.y; y < std::min<std::size_t>(o.y + 64, 90); ++y)
          for (std::size_t x = o.x; x < std::min<std::size_t>(o.x + 64, 75); ++x) cover[y * 75 + x] = 1;
      }
      for (int c : cover) ASSERT_EQ(c, 1);
    }
  }
}

TEST(Tiling, RejectsBadArguments) {
  EXPECT_THROW(infer::plan_tiles(32, 32, 64, 8), std::invalid_argument);
  EXPECT_THROW(infer::plan_tiles(64, 64, 64, 0), std::invalid_argument);
}

TEST(PredictImage, SingleWindowEqualsPrediction) {
  std::mt19937_64 rng(1);
  ReplayPredictor pred{{random_probs(16, rng)}};
  const auto map = infer::predict_image(Tensor::zeros({16, 16, 3}), pred, infer::plan_tiles(16, 16, 16, 16));
  for (std::size_t i = 0; i < map.probabilities.size(); ++i)
    EXPECT_EQ(map.probabilities[i], pred.outputs[0][i]);
}

TEST(PredictImage, OverlapIsArithmeticMean) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    ReplayPredictor pred{{random_probs(16, rng), random_probs(16, rng)}};
    infer::TilePlan plan = infer::plan_tiles(16, 24, 16, 8);
    ASSERT_EQ(plan.origins, (std::vector<infer::TileOrigin>{{0, 0}, {0, 8}}));
    const auto map = infer::predict_image(Tensor::zeros({16, 24, 3}), pred, plan);
    for (std::size_t y = 0; y < 16; ++y) {
      for (std::size_t x = 0; x < 24; ++x) {
        const std::size_t p = y * 24 + x;
        std::vector<double> vals;
        if (x < 16) vals.push_back(pred.outputs[0][(y * 16 + x) * 2 + 1]);
        if (x >= 8) vals.push_back(pred.outputs[1][(y * 16 + x - 8) * 2 + 1]);
        double mean = 0;
        for (double v : vals) mean += v / static_cast<double>(vals.size());
        EXPECT_NEAR(map.probabilities[p * 2 + 1], mean, 1e-12);
        EXPECT_EQ(map.counts[p], vals.size());
        EXPECT_NEAR(map.probabilities[p * 2] + map.probabilities[p * 2 + 1], 1.0, 1e-12);
      }
    }
  }
}

TEST(PredictImage, RepeatedWindowIsIdempotent) {
  std::mt19937_64 rng(3);
  ReplayPredictor pred{{random_probs(8, rng)}};
  infer::TilePlan plan = infer::plan_tiles(8, 8, 8, 8);
  plan.origins.push_back({0, 0});
  const auto map = infer::predict_image(Tensor::zeros({8, 8, 3}), pred, plan);
  for (std::size_t i = 0; i < map.probabilities.size(); ++i)
    EXPECT_NEAR(map.probabilities[i], pred.outputs[0][i], 1e-15);
}

TEST(PredictImage, RejectsMismatchedImage) {
  EXPECT_THROW(infer::predict_image(Tensor::zeros({8, 9, 3}), constant_predictor(0.5),
                                    infer::plan_tiles(8, 8, 8, 8)),
               std::invalid_argument);
}

TEST(Components, TrivialCases) {
  const std::vector<std::uint8_t> ones(12 * 7, 1);
  const auto all = infer::connected_components(std::span(ones), 12, 7, 0);
  ASSERT_EQ(all.components.size(), 1u);
  EXPECT_EQ(all.components[0].area(), 84u);
  std::vector<std::uint8_t> checker(8 * 8);
  for (std::size_t i = 0; i < 64; ++i) checker[i] = ((i / 8) + (i % 8)) % 2;
  EXPECT_EQ(infer::connected_components(std::span(checker), 8, 8, 0).components.size(), 64u);
}

TEST(Components, MatchFloodFillOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const int h = 20, w = 17;
    std::vector<std::uint8_t> labels(h * w);
    for (auto& v : labels) v = rng() % 100 < 55;
    std::vector<long> as_long(labels.begin(), labels.end());
    int count = 0;
    const auto ids = oracle::flood_fill(as_long, h, w, &count);
    std::vector<std::size_t> oracle_area(count, 0);
    for (int id : ids) ++oracle_area[id];
    const auto set = infer::connected_components(std::span(labels), h, w, 5);
    ASSERT_EQ(set.components.size(), static_cast<std::size_t>(count));
    std::size_t total = 0;
    for (const auto& c : set.components) {
      total += c.area();
      const int oid = ids[c.pixels.front()];
      EXPECT_EQ(c.area(), oracle_area[oid]);
      for (std::size_t p : c.pixels) EXPECT_EQ(ids[p], oid);
    }
    EXPECT_EQ(total, static_cast<std::size_t>(h * w));
    EXPECT_EQ(set.eligible().size() + set.ineligible().size(), set.components.size());
    for (const auto* c : set.eligible()) EXPECT_GE(c->area(), 5u);
  }
}

TEST(Components, DefaultMinArea) {
  EXPECT_EQ(infer::default_min_area(512, 512), 2000u);
  EXPECT_EQ(infer::default_min_area(1024, 1024), 8000u);
  EXPECT_EQ(infer::default_min_area(32, 32), 16u);
}

TEST(MajorityVote, MajorityAndTies) {
  const std::vector<std::uint8_t> labels{1, 1, 1, 0, 0, 1, 0, 1, 0};
  // Segment A: 3 of 5 contour; segment B: 1 of 2 (tie); pixels 7, 8 unsegmented.
  const auto out = infer::majority_vote(labels, {{0, 1, 2, 3, 4}, {5, 6}});
  EXPECT_EQ(out, (std::vector<std::uint8_t>{1, 1, 1, 1, 1, 0, 0, 1, 0}));
  EXPECT_THROW(infer::majority_vote(labels, {{0, 1}, {1, 2}}), std::invalid_argument);
}

// Classical voting and the differentiable voting block (raw counts, tiny
// temperature, hard inputs) agree on every pixel.
TEST(MajorityVote, MatchesDifferentiableVotingBlock) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t h = 8, w = 8, k = 2 + rng() % 5;
    std::vector<std::uint8_t> labels(h * w);
    std::vector<std::vector<std::size_t>> segments(k);
    Tensor s = Tensor::zeros({h, w, k}), c = Tensor::zeros({h, w, 2});
    for (std::size_t p = 0; p < h * w; ++p) {
      const std::size_t seg = rng() % k;
      labels[p] = rng() % 2;
      segments[seg].push_back(p);
      s.mutable_data()[p * k + seg] = 1;
      c.mutable_data()[p * 2 + labels[p]] = 1;
    }
    net::NetworkConfig cfg;
    cfg.segments = k;
    cfg.count_mode = net::CountMode::raw;
    cfg.count_temperature = 1e-3;
    ad::Graph g(false);
    const Tensor fused = net::fusion_block(g, {s}, c, cfg).fused;
    const auto classical = infer::majority_vote(labels, segments);
    for (std::size_t p = 0; p < h * w; ++p)
      ASSERT_EQ(fused[p * 2 + 1] > fused[p * 2] ? 1 : 0, classical[p]) << "trial " << trial;
  }
}

// Ground-truth segments plus a prediction wrong on fewer than half of each
// segment's pixels: postprocessing recovers every segmented pixel.
TEST(MajorityVote, PostprocessRecoversSegmentsBelowHalfError) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t h = 16, w = 16;
    std::vector<std::uint8_t> truth(h * w);
    std::vector<std::vector<std::size_t>> segments;
    // Vertical bands of random width, each with one true label.
    for (std::size_t x0 = 0; x0 < w;) {
      const std::size_t bw = std::min<std::size_t>(1 + rng() % 6, w - x0);
      const std::uint8_t label = rng() % 2;
      std::vector<std::size_t> seg;
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = x0; x < x0 + bw; ++x) {
          seg.push_back(y * w + x);
          truth[y * w + x] = label;
        }
      segments.push_back(seg);
      x0 += bw;
    }
    std::vector<std::uint8_t> pred = truth;
    for (auto& seg : segments) {
      std::shuffle(seg.begin(), seg.end(), rng);
      const std::size_t flips = rng() % ((seg.size() - 1) / 2 + 1);  // < half
      for (std::size_t i = 0; i < flips; ++i) pred[seg[i]] ^= 1;
    }
    const auto out = infer::majority_vote_postprocess(map_from_labels(pred, h, w), segments);
    EXPECT_EQ(out, truth) << "trial " << trial;
  }
}

TEST(VotingSegments, UseEligibleSegmentComponents) {
  infer::PredictionMap m = map_from_labels(std::vector<std::uint8_t>(16, 0), 4, 4);
  for (std::size_t p = 0; p < 16; ++p) m.segment_labels[p] = p % 4 < 3 ? 7 : 9;
  const auto segs = infer::voting_segments(m, 5);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].size(), 12u);
}

TEST(Metrics, PerfectAndAllBackground) {
  const std::vector<std::uint8_t> truth{1, 1, 0, 0};
  const auto perfect = infer::compute_metrics(truth, truth);
  EXPECT_EQ(perfect.accuracy, 100.0);
  EXPECT_EQ(perfect.ber, 0.0);
  EXPECT_EQ(perfect.f1, 100.0);
  const auto bg = infer::compute_metrics(std::vector<std::uint8_t>(4, 0), truth);
  EXPECT_EQ(bg.accuracy, 50.0);
  EXPECT_EQ(bg.ber, 0.5);
  EXPECT_EQ(bg.f1, 0.0);
}

TEST(Metrics, EmptyClassConventions) {
  const std::vector<std::uint8_t> none(6, 0), one{0, 0, 1, 0, 0, 0};
  EXPECT_EQ(infer::compute_metrics(none, none).f1, 100.0);
  EXPECT_EQ(infer::compute_metrics(none, none).ber, 0.0);
  EXPECT_EQ(infer::compute_metrics(one, none).f1, 0.0);
  EXPECT_NEAR(infer::compute_metrics(one, none).ber, 0.5 * (1.0 / 6.0), 1e-15);
  EXPECT_THROW(infer::compute_metrics(none, std::span(one).subspan(0, 3)), std::invalid_argument);
}

TEST(Metrics, MatchConfusionOracleAndSymmetry) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::uint8_t> pred(200), truth(200);
    for (auto& v : pred) v = rng() % 2;
    for (auto& v : truth) v = rng() % 3 == 0;
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < 200; ++i) {
      tp += pred[i] && truth[i];
      fp += pred[i] && !truth[i];
      tn += !pred[i] && !truth[i];
      fn += !pred[i] && truth[i];
    }
    const auto m = infer::compute_metrics(pred, truth);
    EXPECT_NEAR(m.accuracy, 100 * (tp + tn) / 200, 1e-12);
    EXPECT_NEAR(m.ber, 1 - 0.5 * (tp / (tp + fn) + tn / (tn + fp)), 1e-12);
    const double prec = tp / (tp + fp), rec = tp / (tp + fn);
    EXPECT_NEAR(m.f1, 100 * 2 * prec * rec / (prec + rec), 1e-12);

    std::vector<std::uint8_t> fp_(pred), ft(truth);
    for (auto& v : fp_) v ^= 1;
    for (auto& v : ft) v ^= 1;
    const auto swapped = infer::compute_metrics(fp_, ft);
    EXPECT_NEAR(swapped.accuracy, m.accuracy, 1e-12);
    EXPECT_NEAR(swapped.ber, m.ber, 1e-12);
  }
}

TEST(Metrics, MeanStdIsPopulation) {
  const std::vector<double> v{1, 2, 3, 4};
  const auto ms = infer::mean_std(v);
  EXPECT_DOUBLE_EQ(ms.mean, 2.5);
  EXPECT_DOUBLE_EQ(ms.std, std::sqrt(1.25));
  EXPECT_EQ(infer::mean_std(std::vector<double>{3.0}).std, 0.0);
  EXPECT_EQ(infer::format_mean_std({94.714, 0.031}, 2), "94.71 (0.03)");
}

TEST(Harness, StrideSweepSingleRunHasZeroStd) {
  data::LabeledRaster img(64, 64);
  for (std::size_t i = 0; i < 64 * 32; ++i) img.mask[i] = 1;
  const auto rows = infer::stride_sweep({constant_predictor(0.9)}, {img}, {32}, {});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].windows, 1u);
  EXPECT_EQ(rows[0].summary.accuracy.mean, 50.0);
  EXPECT_EQ(rows[0].summary.accuracy.std, 0.0);
  std::ostringstream out;
  infer::write_stride_csv(out, rows);
  EXPECT_EQ(out.str(), "stride,windows,accuracy,ber,f1\n32,1,50.00 (0.00),0.500 (0.000),66.67 (0.00)\n");
}

TEST(Harness, StrideSweepStdAcrossModels) {
  data::LabeledRaster img(32, 32);
  for (std::size_t i = 0; i < 32 * 16; ++i) img.mask[i] = 1;
  const auto rows =
      infer::stride_sweep({constant_predictor(0.9), constant_predictor(0.1)}, {img}, {8, 16, 32},
                          {.window = 32});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].windows, 1u);
  EXPECT_EQ(rows[0].summary.accuracy.mean, 50.0);
  // All-contour gives F1 = 200/3, all-background gives 0.
  EXPECT_NEAR(rows[0].summary.f1.mean, 100.0 / 3.0, 1e-12);
  EXPECT_NEAR(rows[0].summary.f1.std, 100.0 / 3.0, 1e-12);
}

TEST(Harness, LambdaAblationReportsEveryCell) {
  const auto grid = infer::default_lambda_grid();
  ASSERT_EQ(grid.size(), 5u);
  EXPECT_EQ(grid[0].parameter, "Baseline");
  EXPECT_EQ(grid[2].lambda_c, 1.6);
  EXPECT_EQ(grid[3].lambda_r, 0.4);
  EXPECT_EQ(grid[3].lambda_c, 1.0);
  std::vector<std::uint64_t> seeds;
  const auto rows = infer::lambda_ablation(
      [&](const infer::AblationCell& cell, std::uint64_t seed) {
        seeds.push_back(seed);
        if (cell.lambda_r == 1.6) throw std::runtime_error("non-finite loss");
        infer::AblationRun run;
        run.metrics = {90.0 + static_cast<double>(seed), 0.1, 80.0};
        run.loss_range = cell.lambda_c;
        return run;
      },
      grid, 2, 10);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_TRUE(rows[4].diverged);
  EXPECT_EQ(rows[4].note, "non-finite loss");
  EXPECT_DOUBLE_EQ(rows[0].summary.accuracy.mean, 100.5);
  EXPECT_DOUBLE_EQ(rows[0].summary.accuracy.std, 0.5);
  EXPECT_EQ(seeds.front(), 10u);
  std::ostringstream out;
  infer::write_lambda_csv(out, rows);
  std::istringstream in(out.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(lines[0], "param,value,loss_range,accuracy,ber,f1");
  EXPECT_EQ(lines[1], "Baseline,,1.000,100.50 (0.50),0.100 (0.000),80.00 (0.00)");
  EXPECT_EQ(lines[5], "lambda_r,1.6,diverged,diverged,diverged,diverged");
}

TEST(Overlay, BlendsContourTowardsGreen) {
  const std::vector<double> image{1.0, 0.0, 0.0, 1.0, 0.0, 0.0};
  const std::vector<std::uint8_t> labels{1, 0};
  const auto rgb = infer::render_overlay(image, labels, 0.5);
  EXPECT_EQ(rgb, (std::vector<std::uint8_t>{128, 128, 0, 255, 0, 0}));
}

#include "votenet/inference/harness.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>

#include "votenet/inference/components.hpp"

namespace votenet::infer {

WindowPredictor make_votenet_predictor(net::NetworkConfig config, net::ParameterSet params) {
  return [config = std::move(config), params = std::move(params)](const ad::Tensor& window) {
    ad::Graph graph(false);
    const net::ForwardResult out = net::forward(graph, window, config, params);
    const ad::Tensor& s = out.segments.memberships;
    const std::size_t pixels = s.dim(0) * s.dim(1), k = s.dim(2);
    std::vector<std::int32_t> segments(pixels);
    const auto m = s.data();
    for (std::size_t p = 0; p < pixels; ++p) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < k; ++j) {
        if (m[p * k + j] > m[p * k + best]) best = j;
      }
      segments[p] = static_cast<std::int32_t>(best);
    }
    return WindowPrediction{out.fused.fused, std::move(segments)};
  };
}

EvaluationResult evaluate_images(const WindowPredictor& predictor,
                                 const std::vector<data::LabeledRaster>& images,
                                 const EvaluationOptions& options) {
  EvaluationResult result;
  for (const data::LabeledRaster& image : images) {
    const TilePlan plan =
        plan_tiles(image.height, image.width, options.window, options.stride, options.edge);
    const PredictionMap map = predict_image(image.image_tensor(), predictor, plan);
    result.windows += map.windows;
    std::vector<std::uint8_t> labels;
    if (options.postprocess) {
      const std::size_t min_area =
          options.min_area > 0 ? options.min_area : default_min_area(image.height, image.width);
      labels = majority_vote_postprocess(map, voting_segments(map, min_area));
    } else {
      labels = map.hard_labels();
    }
    result.confusion.add(labels, image.mask);
  }
  result.metrics = metrics_from(result.confusion);
  return result;
}

std::vector<StrideRow> stride_sweep(const std::vector<WindowPredictor>& models,
                                    const std::vector<data::LabeledRaster>& images,
                                    const std::vector<std::size_t>& strides,
                                    EvaluationOptions options) {
  std::vector<StrideRow> rows;
  for (std::size_t stride : strides) {
    options.stride = stride;
    StrideRow row;
    row.stride = stride;
    std::vector<MetricsReport> runs;
    for (const WindowPredictor& model : models) {
      const EvaluationResult r = evaluate_images(model, images, options);
      row.windows = r.windows;
      runs.push_back(r.metrics);
    }
    row.summary = summarize(runs);
    rows.push_back(row);
  }
  return rows;
}

std::vector<AblationCell> default_lambda_grid(const std::vector<double>& values) {
  std::vector<AblationCell> grid{{"Baseline", 1.0, 1.0, 1.0}};
  for (double v : values) grid.push_back({"lambda_c", v, v, 1.0});
  for (double v : values) grid.push_back({"lambda_r", v, 1.0, v});
  return grid;
}

std::vector<AblationRow> lambda_ablation(const AblationTrainFn& train,
                                         const std::vector<AblationCell>& grid,
                                         std::size_t repeats, std::uint64_t base_seed) {
  std::vector<AblationRow> rows;
  for (const AblationCell& cell : grid) {
    AblationRow row;
    row.cell = cell;
    std::vector<MetricsReport> runs;
    std::vector<double> ranges;
    for (std::size_t r = 0; r < repeats; ++r) {
      AblationRun run;
      try {
        run = train(cell, base_seed + r);
      } catch (const std::exception& e) {
        run.diverged = true;
        run.note = e.what();
      }
      if (run.diverged) {
        row.diverged = true;
        row.note = run.note;
        break;
      }
      runs.push_back(run.metrics);
      ranges.push_back(run.loss_range);
    }
    if (!row.diverged) {
      row.summary = summarize(runs);
      row.loss_range = mean_std(ranges);
    }
    rows.push_back(row);
  }
  return rows;
}

std::string format_mean_std(const MeanStd& v, int decimals) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.*f (%.*f)", decimals, v.mean, decimals, v.std);
  return buf;
}

namespace {

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

void write_stride_csv(std::ostream& out, const std::vector<StrideRow>& rows) {
  out << "stride,windows,accuracy,ber,f1\n";
  for (const StrideRow& r : rows) {
    out << r.stride << ',' << r.windows << ',' << format_mean_std(r.summary.accuracy, 2) << ','
        << format_mean_std(r.summary.ber, 3) << ',' << format_mean_std(r.summary.f1, 2) << '\n';
  }
}

void write_lambda_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "param,value,loss_range,accuracy,ber,f1\n";
  for (const AblationRow& r : rows) {
    out << r.cell.parameter << ',' << (r.cell.parameter == "Baseline" ? "" : format_value(r.cell.value))
        << ',';
    if (r.diverged) {
      out << "diverged,diverged,diverged,diverged\n";
      continue;
    }
    out << format_fixed(r.loss_range.mean, 3) << ',' << format_mean_std(r.summary.accuracy, 2) << ','
        << format_mean_std(r.summary.ber, 3) << ',' << format_mean_std(r.summary.f1, 2) << '\n';
  }
}

}  // namespace votenet::infer

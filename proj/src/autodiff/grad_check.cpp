#include "votenet/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace votenet::ad {

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport grad_check(const ScalarBuilder& builder, std::vector<Tensor> inputs, double h,
                           double tolerance) {
  GradCheckReport report;
  report.per_input.assign(inputs.size(), 0.0);
  try {
    for (Tensor& t : inputs) t.set_requires_grad(true);

    std::vector<std::vector<double>> analytic;
    {
      Graph graph;
      const Tensor root = builder(graph, inputs);
      graph.backward(root, inputs);
      for (const Tensor& t : inputs) analytic.emplace_back(t.grad().begin(), t.grad().end());
    }

    auto evaluate = [&] {
      Graph graph(false);
      return builder(graph, inputs).item();
    };

    for (std::size_t t = 0; t < inputs.size(); ++t) {
      auto values = inputs[t].mutable_data();
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double original = values[i];
        values[i] = original + h;
        const double plus = evaluate();
        values[i] = original - h;
        const double minus = evaluate();
        values[i] = original;
        const double numeric = (plus - minus) / (2.0 * h);
        const double err = relative_error(analytic[t][i], numeric);
        report.per_input[t] = std::max(report.per_input[t], err);
        report.max_relative_error = std::max(report.max_relative_error, err);
        ++report.elements_checked;
      }
    }
    report.passed = report.max_relative_error <= tolerance;
  } catch (const std::exception& e) {
    report.failure = e.what();
    report.passed = false;
  }
  return report;
}

}  // namespace votenet::ad

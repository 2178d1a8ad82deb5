#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "votenet/autodiff/tensor.hpp"

namespace votenet::ad {

enum class ElementwiseKind { add, sub, mul, div, log, exp, sigmoid, relu, square };
enum class ReduceKind { sum, mean };
enum class Padding { same, valid };
enum class ResizeDirection { up, down };

/// Reverse-mode tape.
///
/// Every operation computes its output eagerly and, when any input requires a
/// gradient, appends an adjoint record. Records are appended in execution
/// order, so the tape is topologically sorted by construction.
///
/// Broadcasting follows trailing-dimension alignment: shapes are compared
/// from the last axis backwards, a missing or size-1 axis stretches to match
/// the other operand. A rank-0 tensor therefore broadcasts against anything.
///
/// Reductions remove the reduced axes from the output shape.
///
/// A Graph supports exactly one backward() call. Build a new Graph for the
/// next forward pass.
class Graph {
 public:
  /// With recording disabled no adjoints are stored (inference mode).
  explicit Graph(bool record = true) : record_(record) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Tensor elementwise(ElementwiseKind kind, const Tensor& a, const Tensor* b = nullptr);

  Tensor add(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseKind::add, a, &b); }
  Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseKind::sub, a, &b); }
  Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseKind::mul, a, &b); }
  Tensor div(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseKind::div, a, &b); }
  Tensor log(const Tensor& a) { return elementwise(ElementwiseKind::log, a); }
  Tensor exp(const Tensor& a) { return elementwise(ElementwiseKind::exp, a); }
  Tensor sigmoid(const Tensor& a) { return elementwise(ElementwiseKind::sigmoid, a); }
  Tensor relu(const Tensor& a) { return elementwise(ElementwiseKind::relu, a); }
  Tensor square(const Tensor& a) { return elementwise(ElementwiseKind::square, a); }

  /// a * factor + offset
  Tensor affine(const Tensor& a, double factor, double offset);
  Tensor scale(const Tensor& a, double factor) { return affine(a, factor, 0.0); }
  /// Clamps into [lo, hi]; the adjoint is zero where the clamp is active.
  Tensor clamp(const Tensor& a, double lo, double hi);

  /// Elementwise map with a caller-supplied derivative. Used for custom
  /// activations and for negative-control fixtures in gradient checks.
  Tensor map(const Tensor& a, const std::function<double(double)>& fn,
             const std::function<double(double)>& derivative);

  Tensor softmax(const Tensor& a, std::size_t axis);
  Tensor log_softmax(const Tensor& a, std::size_t axis);

  Tensor reduce(const Tensor& a, ReduceKind kind, std::vector<std::size_t> axes);
  /// Reduction over every axis; the result is rank 0.
  Tensor sum(const Tensor& a);
  Tensor mean(const Tensor& a);

  /// Cross-correlation of an H x W x Cin input with a kh x kw x Cin x Cout
  /// kernel. `same` padding yields ceil(H / stride) rows with the extra
  /// padding row placed at the bottom/right; `valid` yields
  /// floor((H - kh) / stride) + 1 rows.
  Tensor conv2d(const Tensor& input, const Tensor& kernel, std::size_t stride, Padding padding);

  /// Nearest-neighbour resampling of an H x W x C map. Downsampling keeps the
  /// top-left sample of each factor x factor block.
  Tensor resize_nearest(const Tensor& a, std::size_t factor, ResizeDirection direction);

  Tensor concat_last(const Tensor& a, const Tensor& b);
  /// Slice [begin, begin + count) of the last axis; the axis is kept.
  Tensor slice_last(const Tensor& a, std::size_t begin, std::size_t count = 1);
  Tensor reshape(const Tensor& a, Shape shape);
  /// [m, k] x [k, n] -> [m, n]
  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor transpose(const Tensor& a);

  /// Populates gradients of every tensor reachable from `root`. `params`
  /// that were not reached receive an all-zero gradient.
  void backward(const Tensor& root, std::span<Tensor> params = {});

  std::size_t size() const { return tape_.size(); }
  bool recording() const { return record_; }
  bool consumed() const { return consumed_; }

 private:
  struct Record {
    std::shared_ptr<TensorImpl> output;
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    std::function<void()> adjoint;
  };

  bool should_record(std::initializer_list<const Tensor*> inputs) const;
  Tensor make_output(Shape shape, std::vector<double> data,
                     std::initializer_list<const Tensor*> inputs) const;
  void push(const Tensor& output, std::initializer_list<const Tensor*> inputs,
            std::function<void()> adjoint);
  void check_live() const;

  bool record_;
  bool consumed_ = false;
  std::vector<Record> tape_;
};

/// Broadcast shape under trailing-dimension alignment.
Shape broadcast_shape(const Shape& a, const Shape& b);

}  // namespace votenet::ad
